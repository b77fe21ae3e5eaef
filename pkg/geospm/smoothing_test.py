"""Tests for geospm.smoothing."""

import math

import numpy as np

from absl.testing import absltest
from absl.testing import parameterized

from geospm.errors import DomainError
from geospm.glm import DesignMatrix
from geospm.grid_domain import SpatialDomain, Dataset
from geospm.smoothing import (SmoothingSchedule, KernelSpec, sigma_from_diameter, diameter_from_sigma, render_kernel,
                              accumulate_responses, density_mask)


def _random_dataset(n=60, seed=0, domain=SpatialDomain(30, 20)):
  rng = np.random.default_rng(seed)
  loc = np.stack([rng.uniform(0, domain.width, n), rng.uniform(0, domain.height, n)], axis=1)
  z = (rng.random(n) < 0.5).astype(np.float64)
  return Dataset(domain, ['z'], loc, z[:, None])


class KernelTest(parameterized.TestCase):

  def testDiameterConversion(self):
    self.assertAlmostEqual(sigma_from_diameter(2.0 * math.sqrt(2.0 * math.log(20.0))), 1.0)
    for d in (1.0, 10.0, 7000.0):
      self.assertAlmostEqual(diameter_from_sigma(sigma_from_diameter(d)), d)

  def testDiameterEnclosesNinetyFivePercent(self):
    sigma = sigma_from_diameter(10.0)
    r = 5.0
    self.assertAlmostEqual(1.0 - math.exp(-r * r / (2.0 * sigma * sigma)), 0.95)

  def testKernelDefaults(self):
    k = KernelSpec.from_diameter(20.0)
    self.assertAlmostEqual(k.truncation_radius, 4.0 * k.sigma)
    self.assertAlmostEqual(k.fwhm, k.sigma * 2.0 * math.sqrt(2.0 * math.log(2.0)))

  @parameterized.named_parameters(
      ('zero_sigma', dict(sigma=0.0)),
      ('short_truncation', dict(sigma=1.0, truncation_radius=2.5)),
      ('negative_amplitude', dict(sigma=1.0, amplitude=-1.0)),
  )
  def testKernelRejects(self, kwargs):
    with self.assertRaises(DomainError):
      KernelSpec(**kwargs)

  def testKernelSumsToOne(self):
    d = SpatialDomain(60, 60)
    field = render_kernel((30.0, 30.0), KernelSpec.from_diameter(20.0), d)
    self.assertAlmostEqual(float(field.values.sum()), 1.0, delta=2e-3)
    self.assertEqual(float(field.values.min()), 0.0)
    # peak in one of the four cells touching the location
    k, j = np.unravel_index(np.argmax(field.values), d.shape)
    self.assertIn((j, k), [(29, 29), (29, 30), (30, 29), (30, 30)])

  def testKernelIsTruncated(self):
    d = SpatialDomain(60, 60)
    kernel = KernelSpec.from_diameter(10.0)
    field = render_kernel((30.5, 30.5), kernel, d)
    xs, ys = d.center_grids()
    r = np.hypot(xs - 30.5, ys - 30.5)
    self.assertTrue(np.all(field.values[r > kernel.truncation_radius] == 0.0))
    self.assertTrue(np.all(field.values[r <= kernel.truncation_radius] > 0.0))

  def testCongruentMatchesExactAtCellCentres(self):
    d = SpatialDomain(40, 30, origin=(5.0, -2.0), cell_size=0.5)
    kernel = KernelSpec.from_diameter(4.0)
    exact = render_kernel((12.25, 4.75), kernel, d)
    snapped = render_kernel((12.4, 4.6), kernel, d, congruent=True)
    np.testing.assert_allclose(exact.values, snapped.values, atol=1e-15)

  def testKernelClippedAtEdge(self):
    d = SpatialDomain(10, 10)
    field = render_kernel((0.5, 0.5), KernelSpec.from_diameter(10.0), d)
    self.assertLess(float(field.values.sum()), 0.5)

  def testOutsideRaises(self):
    with self.assertRaises(DomainError):
      render_kernel((10.0, 0.5), KernelSpec.from_diameter(4.0), SpatialDomain(10, 10))


class ScheduleTest(absltest.TestCase):

  def testFromRange(self):
    self.assertEqual(SmoothingSchedule.from_range(10, 60, 5).diameters, tuple(float(d) for d in range(10, 61, 5)))
    self.assertEqual(SmoothingSchedule.from_range(10, 12, 5).diameters, (10.0,))

  def testRejects(self):
    for bad in ([], [5, 5], [10, 5], [0.0], [float('nan')]):
      with self.assertRaises(DomainError):
        SmoothingSchedule(bad)
    with self.assertRaises(DomainError):
      SmoothingSchedule.from_range(10, 20, 0)


class AccumulateTest(absltest.TestCase):

  def testSumsMatchExplicitKernels(self):
    data = _random_dataset(n=25)
    X = DesignMatrix.from_dataset(data, ['z'])
    schedule = SmoothingSchedule([4.0, 9.0])
    acc = accumulate_responses(data, X, schedule)
    self.assertEqual(acc.xty.shape, (2, 2, 20, 30))
    for s, diameter in enumerate(schedule):
      kernel = KernelSpec.from_diameter(diameter)
      images = np.stack([render_kernel(loc, kernel, data.domain).values for loc in data.locations])
      np.testing.assert_allclose(acc.ksum[s], images.sum(axis=0), rtol=1e-12, atol=1e-15)
      np.testing.assert_allclose(acc.ksq[s], (images ** 2).sum(axis=0), rtol=1e-12, atol=1e-15)
      np.testing.assert_allclose(acc.xty[s, 1], np.tensordot(X.matrix[:, 1], images, axes=1), rtol=1e-12, atol=1e-15)
    # the constant column is the density
    np.testing.assert_allclose(acc.xty[:, 0], acc.ksum)

  def testChunkingAndWorkersDoNotChangeSums(self):
    data = _random_dataset(n=50, seed=1)
    X = DesignMatrix.from_dataset(data, ['z'])
    schedule = SmoothingSchedule([6.0])
    a = accumulate_responses(data, X, schedule)
    b = accumulate_responses(data, X, schedule, chunk_size=7, num_workers=3)
    c = accumulate_responses(data, X, schedule, chunk_size=7, num_workers=1)
    np.testing.assert_allclose(a.xty, b.xty, rtol=1e-12, atol=1e-15)
    np.testing.assert_array_equal(b.xty, c.xty)
    np.testing.assert_array_equal(b.ksq, c.ksq)

  def testObservationOrderDoesNotChangeSums(self):
    data = _random_dataset(n=60, seed=4)
    perm = np.random.default_rng(9).permutation(data.n)
    shuffled = data.subset(perm)
    schedule = SmoothingSchedule([5.0, 12.0])
    for congruent in (False, True):
      a = accumulate_responses(data, DesignMatrix.from_dataset(data, ['z']), schedule, congruent=congruent)
      b = accumulate_responses(shuffled, DesignMatrix.from_dataset(shuffled, ['z']), schedule, congruent=congruent)
      np.testing.assert_allclose(b.xty, a.xty, rtol=1e-12, atol=1e-15)
      np.testing.assert_allclose(b.ksq, a.ksq, rtol=1e-12, atol=1e-15)
      np.testing.assert_allclose(b.ksum, a.ksum, rtol=1e-12, atol=1e-15)

  def testCongruentIgnoresPositionWithinCell(self):
    domain = SpatialDomain(30, 20)
    z = [[1.0], [0.0], [1.0]]
    # the first observation moves inside cell (6, 6)
    a = Dataset(domain, ['z'], [(5.1, 5.2), (14.5, 9.5), (22.3, 15.8)], z)
    b = Dataset(domain, ['z'], [(5.9, 5.8), (14.5, 9.5), (22.3, 15.8)], z)
    schedule = SmoothingSchedule([6.0])
    acc_a = accumulate_responses(a, DesignMatrix.from_dataset(a, ['z']), schedule, congruent=True)
    acc_b = accumulate_responses(b, DesignMatrix.from_dataset(b, ['z']), schedule, congruent=True)
    np.testing.assert_array_equal(acc_a.ksum, acc_b.ksum)
    np.testing.assert_array_equal(acc_a.ksq, acc_b.ksq)
    np.testing.assert_array_equal(acc_a.xty, acc_b.xty)
    exact = accumulate_responses(a, DesignMatrix.from_dataset(a, ['z']), schedule)
    self.assertFalse(np.array_equal(exact.ksum, acc_b.ksum))

  def testDesignRowMismatch(self):
    data = _random_dataset(n=10)
    X = DesignMatrix.from_dataset(_random_dataset(n=11), ['z'])
    with self.assertRaises(DomainError):
      accumulate_responses(data, X, SmoothingSchedule([4.0]))

  def testDensityMask(self):
    data = _random_dataset(n=40, seed=2)
    acc = accumulate_responses(data, DesignMatrix.from_dataset(data, ['z']), SmoothingSchedule([8.0]))
    mask = density_mask(acc, 0.5)
    dens = acc.ksum[0]
    np.testing.assert_array_equal(mask.mask, dens >= 0.5 * dens.max())
    self.assertGreater(mask.count, 0)
    self.assertLess(mask.count, data.domain.n_cells)
    for bad in (0.0, 1.0, -0.1):
      with self.assertRaises(DomainError):
        density_mask(acc, bad)


if __name__ == '__main__':
  absltest.main()
