"""Tests for geospm.glm: streamed per-cell fits against explicit least squares."""

import numpy as np

from absl.testing import absltest

from geospm.errors import DomainError, EstimabilityError
from geospm.glm import CONSTANT, Tail, DesignMatrix, Contrast, GlmFit, fit_glm, contrast_t_map, pseudo_inverse
from geospm.grid_domain import SpatialDomain, Dataset
from geospm.smoothing import SmoothingSchedule, KernelSpec, accumulate_responses, render_kernel


def _dataset(n=40, seed=0):
  domain = SpatialDomain(16, 12)
  rng = np.random.default_rng(seed)
  loc = np.stack([rng.uniform(0, 16, n), rng.uniform(0, 12, n)], axis=1)
  a = (rng.random(n) < 0.5).astype(np.float64)
  b = rng.normal(size=n)
  return Dataset(domain, ['a', 'b'], loc, np.stack([a, b], axis=1))


class DesignMatrixTest(absltest.TestCase):

  def testConstantFirst(self):
    X = DesignMatrix.from_dataset(_dataset(), ['a', 'b'])
    self.assertEqual(X.names, (CONSTANT, 'a', 'b'))
    np.testing.assert_array_equal(X.matrix[:, 0], 1.0)
    self.assertEqual(X.index('b'), 2)
    with self.assertRaises(DomainError):
      X.index('c')

  def testZscoreAndInteraction(self):
    data = _dataset()
    X = DesignMatrix.from_dataset(data, ['a', 'b'], zscore=['b'], interactions=[('a', 'b')])
    self.assertEqual(X.names, (CONSTANT, 'a', 'b', 'a*b'))
    b = X.matrix[:, 2]
    self.assertAlmostEqual(float(b.mean()), 0.0, places=12)
    self.assertAlmostEqual(float(b.std(ddof=1)), 1.0, places=12)
    np.testing.assert_array_equal(X.matrix[:, 3], X.matrix[:, 1] * b)

  def testRejects(self):
    data = _dataset()
    with self.assertRaises(DomainError):
      DesignMatrix([('a', np.zeros(5))])
    with self.assertRaises(DomainError):
      DesignMatrix([('a', [1, 2, np.nan, 4, 5])])
    with self.assertRaises(DomainError):
      DesignMatrix([('a', [1, 2, 3]), ('a', [3, 2, 1])], include_constant=False)
    with self.assertRaises(DomainError):
      DesignMatrix.from_dataset(data, ['a'], zscore=['b'])
    with self.assertRaises(EstimabilityError):
      DesignMatrix([('a', [1.0, 0.0])])

  def testPseudoInverseRank(self):
    m = np.array([[1.0, 1.0], [1.0, 1.0]])
    pinv, rank = pseudo_inverse(m)
    self.assertEqual(rank, 1)
    np.testing.assert_allclose(pinv, np.linalg.pinv(m), atol=1e-12)


class FitTest(absltest.TestCase):

  def _fit(self, data, names, diameter=6.0, **kwargs):
    X = DesignMatrix.from_dataset(data, names, **kwargs)
    acc = accumulate_responses(data, X, SmoothingSchedule([diameter]))
    return X, fit_glm(acc, X)

  def testMatchesExplicitLeastSquares(self):
    data = _dataset()
    X, fit = self._fit(data, ['a', 'b'], diameter=10.0)
    self.assertEqual(fit.df, data.n - 3)
    self.assertEqual(fit.rank, 3)
    self.assertEqual(fit.flags, [])
    kernel = KernelSpec.from_diameter(10.0)
    images = np.stack([render_kernel(loc, kernel, data.domain).values for loc in data.locations])
    for k, j in ((0, 0), (5, 7), (11, 15), (6, 2)):
      y = images[:, k, j]
      beta, _, _, _ = np.linalg.lstsq(X.matrix, y, rcond=None)
      rss = float(np.sum((y - X.matrix @ beta) ** 2))
      np.testing.assert_allclose(fit.beta[:, k, j], beta, rtol=1e-8, atol=1e-12)
      self.assertAlmostEqual(float(fit.sigma2[k, j]), rss / fit.df, delta=1e-10 * max(1.0, rss))

      c = Contrast.for_column(X, 'a')
      t = contrast_t_map(fit, c)
      se = np.sqrt(rss / fit.df * (np.linalg.inv(X.matrix.T @ X.matrix)[1, 1]))
      if rss > 1e-10:
        self.assertAlmostEqual(t.values[k, j], beta[1] / se, delta=1e-6 * max(1.0, abs(beta[1] / se)))

  def testRankDeficientDesign(self):
    data = _dataset()
    X = DesignMatrix([('a', data.column('a')), ('a2', 2.0 * data.column('a'))], n=data.n)
    acc = accumulate_responses(data, X, SmoothingSchedule([6.0]))
    fit = fit_glm(acc, X)
    self.assertEqual(fit.rank, 2)
    self.assertEqual(fit.df, data.n - 2)
    self.assertIn('rank_deficient', fit.flags)
    # only contrasts in the row space of X are estimable
    with self.assertRaises(EstimabilityError):
      contrast_t_map(fit, Contrast.for_column(X, 'a'))
    contrast_t_map(fit, Contrast.for_column(X, CONSTANT))

  def testAccumulatorMismatch(self):
    data = _dataset()
    X = DesignMatrix.from_dataset(data, ['a'])
    acc = accumulate_responses(data, X, SmoothingSchedule([6.0]))
    with self.assertRaises(DomainError):
      fit_glm(acc, DesignMatrix.from_dataset(data, ['b']))
    with self.assertRaises(DomainError):
      fit_glm(acc, X, scale_index=1)

  def testWrongContrastLength(self):
    data = _dataset()
    X, fit = self._fit(data, ['a'])
    with self.assertRaises(DomainError):
      contrast_t_map(fit, Contrast([1.0, 0.0, 0.0]))

  def testZeroVarianceGivesInfiniteT(self):
    domain = SpatialDomain(3, 1)
    beta = np.array([[[1.0, -2.0, 0.0]]]).reshape(1, 1, 3)
    fit = GlmFit(domain, ['a'], beta, np.zeros((1, 3)), df=5, rank=1, xtx_pinv=np.array([[0.5]]))
    t = contrast_t_map(fit, Contrast([1.0]))
    np.testing.assert_array_equal(t.values[0], [np.inf, -np.inf, 0.0])
    self.assertEqual(t.meta.n_infinite, 2)
    self.assertIn('infinite_t', t.meta.flags)


class ContrastTest(absltest.TestCase):

  def testRejects(self):
    with self.assertRaises(DomainError):
      Contrast([0.0, 0.0])
    with self.assertRaises(DomainError):
      Contrast([1.0, np.inf])

  def testTailParse(self):
    self.assertEqual(Tail.parse('pos'), Tail.POSITIVE)
    self.assertEqual(Tail.parse(Tail.TWO), Tail.TWO)
    self.assertEqual(Contrast([1.0], 'neg').tail, Tail.NEGATIVE)
    self.assertEqual(Contrast([1.0], 'two').describe()['tail'], 'two')


if __name__ == '__main__':
  absltest.main()
