"""Tests for synthetic.distributions."""

import numpy as np

from absl.testing import absltest
from absl.testing import parameterized

from geospm.errors import DomainError
from synthetic import distributions
from synthetic import partition


class NoiseDistributionTest(parameterized.TestCase):

  def testNoiseFreeRegionOne(self):
    np.testing.assert_array_equal(distributions.noise_distribution(0.0, 1), [0.0, 1.0, 0.0, 0.0])

  @parameterized.parameters(0, 1, 2, 3)
  def testMaximumUncertaintyIsUniform(self, region):
    np.testing.assert_allclose(distributions.noise_distribution(0.5, region), [0.25] * 4, atol=1e-15)

  def testFactorisedProduct(self):
    self.assertAlmostEqual(distributions.noise_distribution(0.1, 0)[0], 0.81, places=14)
    # Pr(1, 0) = (1 - q) p with p = 0.9, q = 0.1 in region 1
    self.assertAlmostEqual(distributions.noise_distribution(0.1, 1)[1], 0.81, places=14)

  def testExpectationsFollowRegions(self):
    dist = distributions.NoiseLocalDistribution(0.0)
    self.assertEqual(dist.expectation(0), [0.0, 0.0])
    self.assertEqual(dist.expectation(1), [1.0, 0.0])
    self.assertEqual(dist.expectation(2), [0.0, 1.0])
    self.assertEqual(dist.expectation(3), [1.0, 1.0])

  def testUnivariate(self):
    np.testing.assert_allclose(distributions.noise_distribution(0.2, 0, n_variables=1), [0.8, 0.2])
    np.testing.assert_allclose(distributions.noise_distribution(0.2, 1, n_variables=1), [0.2, 0.8])

  @parameterized.parameters(-0.01, 0.51)
  def testGammaOutOfRange(self, gamma):
    with self.assertRaises(DomainError):
      distributions.noise_distribution(gamma, 0)

  def testRegionOutOfRange(self):
    with self.assertRaises(DomainError):
      distributions.noise_distribution(0.1, 4)


class InteractionDistributionTest(parameterized.TestCase):

  def testStrongestInteraction(self):
    e = distributions.interaction_effects(0.5, 3)
    self.assertAlmostEqual(e.c1, 0.1, places=14)
    self.assertAlmostEqual(e.c2, 0.1, places=14)
    self.assertAlmostEqual(distributions.interaction_distribution(0.5, 3)[3], 0.725, places=14)

  def testNullInteraction(self):
    e = distributions.interaction_effects(0.0, 3)
    self.assertAlmostEqual(e.c1, 0.225, places=14)
    self.assertAlmostEqual(distributions.interaction_distribution(0.0, 3)[3], 0.475, places=14)

  def testFixedRegions(self):
    np.testing.assert_allclose(distributions.interaction_distribution(0.3, 0), [0.25] * 4)
    np.testing.assert_allclose(distributions.interaction_distribution(0.3, 1), [0.125, 0.375, 0.125, 0.375])
    np.testing.assert_allclose(distributions.interaction_distribution(0.3, 2), [0.125, 0.125, 0.375, 0.375])

  @parameterized.parameters(0.0, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.9)
  def testTablesSumToOne(self, c3):
    for region in range(4):
      self.assertLess(abs(float(np.sum(distributions.interaction_distribution(c3, region))) - 1.0), 1e-12)

  @parameterized.parameters(-0.1, 0.95)
  def testInteractionOutOfRange(self, c3):
    with self.assertRaises(DomainError):
      distributions.interaction_distribution(c3, 3)

  def testInconsistentTableRaises(self):
    with self.assertRaises(DomainError):
      distributions.LocalDistribution([[0.5, 0.6]], 1)


class TargetMapTest(absltest.TestCase):

  def setUp(self):
    super().setUp()
    self.bivariate = partition.build_partition('bivariate_snowflake')

  def testFirstVariableTargetIsRegionsOneAndThree(self):
    target = distributions.target_map(self.bivariate, distributions.NoiseLocalDistribution(0.2), 0)
    np.testing.assert_array_equal(target.mask, np.isin(self.bivariate.labels, [1, 3]))

  def testSecondVariableTargetIsRegionsTwoAndThree(self):
    target = distributions.target_map(self.bivariate, distributions.NoiseLocalDistribution(0.2), 1)
    np.testing.assert_array_equal(target.mask, np.isin(self.bivariate.labels, [2, 3]))

  def testMaximumUncertaintyGivesEmptyTargets(self):
    dist = distributions.NoiseLocalDistribution(0.5)
    for v in range(2):
      self.assertEqual(distributions.target_map(self.bivariate, dist, v).count, 0)

  def testUnivariateTargetIsRegionOne(self):
    part = partition.build_partition('univariate_snowflake')
    target = distributions.target_map(part, distributions.NoiseLocalDistribution(0.1, n_variables=1), 0)
    self.assertEqual(target, part.region_mask(1))

  def testInteractionTarget(self):
    target = distributions.target_map(self.bivariate, distributions.InteractionLocalDistribution(0.5), 0)
    np.testing.assert_array_equal(target.mask, np.isin(self.bivariate.labels, [1, 3]))

  def testTooFewRegionsRaises(self):
    with self.assertRaises(DomainError):
      distributions.target_map(self.bivariate, distributions.NoiseLocalDistribution(0.1, n_variables=1), 0)


if __name__ == '__main__':
  absltest.main()
