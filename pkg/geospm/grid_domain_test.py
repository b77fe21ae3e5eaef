"""Tests for geospm.grid_domain."""

import numpy as np

from absl.testing import absltest
from absl.testing import parameterized

from geospm.errors import DomainError, DatasetValidationError
from geospm.grid_domain import (SpatialDomain, Dataset, Observation, ScalarField, BinaryMap, world_to_cell, world_to_cells,
                                cell_center, validate_dataset, require_same_domain)


class SpatialDomainTest(parameterized.TestCase):

  @parameterized.named_parameters(
      ('zero_width', dict(width=0, height=3)),
      ('fractional_height', dict(width=3, height=2.5)),
      ('zero_cell', dict(width=3, height=3, cell_size=0.0)),
      ('infinite_origin', dict(width=3, height=3, origin=(float('inf'), 0.0))),
  )
  def testRejects(self, kwargs):
    with self.assertRaises(DomainError):
      SpatialDomain(**kwargs)

  def testShapeAndUpper(self):
    d = SpatialDomain(4, 3, origin=(10.0, -5.0), cell_size=2.0)
    self.assertEqual(d.shape, (3, 4))
    self.assertEqual(d.n_cells, 12)
    self.assertEqual(d.upper, (18.0, 1.0))
    self.assertEqual(d.cell_area, 4.0)

  def testEqualityIsStructural(self):
    self.assertEqual(SpatialDomain(4, 3), SpatialDomain(4.0, 3, (0, 0), 1))
    self.assertNotEqual(SpatialDomain(4, 3), SpatialDomain(3, 4))

  def testWorldToCell(self):
    d = SpatialDomain(4, 3, origin=(10.0, -5.0), cell_size=2.0)
    self.assertEqual(world_to_cell(d, (10.0, -5.0)), (1, 1))
    self.assertEqual(world_to_cell(d, (11.999, -3.001)), (1, 1))
    self.assertEqual(world_to_cell(d, (12.0, -3.0)), (2, 2))
    self.assertEqual(world_to_cell(d, (17.999, 0.999)), (4, 3))
    for outside in ((18.0, 0.0), (9.999, 0.0), (12.0, 1.0)):
      with self.assertRaises(DomainError):
        world_to_cell(d, outside)

  def testWorldToCellsMatchesScalar(self):
    d = SpatialDomain(7, 5, origin=(1.0, 2.0), cell_size=0.5)
    rng = np.random.default_rng(0)
    loc = np.stack([rng.uniform(1.0, 4.5, 50), rng.uniform(2.0, 4.5, 50)], axis=1)
    js, ks = world_to_cells(d, loc)
    for i in range(50):
      self.assertEqual((js[i], ks[i]), world_to_cell(d, loc[i]))

  def testCellCenterRoundTrip(self):
    d = SpatialDomain(4, 3, origin=(10.0, -5.0), cell_size=2.0)
    self.assertEqual(cell_center(d, 1, 1), (11.0, -4.0))
    for j in range(1, 5):
      for k in range(1, 4):
        self.assertEqual(world_to_cell(d, cell_center(d, j, k)), (j, k))
    with self.assertRaises(DomainError):
      cell_center(d, 0, 1)
    with self.assertRaises(DomainError):
      cell_center(d, 5, 1)

  def testCenterGrids(self):
    d = SpatialDomain(3, 2, cell_size=2.0)
    xs, ys = d.center_grids()
    self.assertEqual(xs.shape, (2, 3))
    np.testing.assert_array_equal(xs[0], [1.0, 3.0, 5.0])
    np.testing.assert_array_equal(ys[:, 0], [1.0, 3.0])


class DatasetTest(absltest.TestCase):

  def testValidPasses(self):
    d = Dataset(SpatialDomain(5, 5), ['a', 'b'], [(0.5, 0.5), (4.9, 4.9)], [(1, 0), (0, 1)])
    self.assertIs(validate_dataset(d), d)
    self.assertEqual(d.n, 2)
    self.assertEqual(d.p, 2)
    np.testing.assert_array_equal(d.column('b'), [0.0, 1.0])

  def testArraysAreReadOnly(self):
    d = Dataset(SpatialDomain(5, 5), ['a'], [(0.5, 0.5)], [(1,)])
    with self.assertRaises(ValueError):
      d.values[0, 0] = 2.0

  def testReportsEveryViolation(self):
    d = Dataset(SpatialDomain(5, 5), ['a', 'b'],
                [(0.5, 0.5), (5.0, 1.0), (1.0, float('nan')), (2.0, 2.0), (3.0, 3.0)],
                [(1, 0), (0, 1), (0, 0), (1,), (float('nan'), 1)])
    with self.assertRaises(DatasetValidationError) as cm:
      validate_dataset(d)
    report = cm.exception.report
    self.assertEqual([r[0] for r in report], [1, 2, 3, 4])
    self.assertEqual(report[0][1], 'x')
    self.assertEqual(report[1][1], 'y')
    self.assertIsNone(report[2][1])
    self.assertEqual(report[3][1], 'a')

  def testDuplicateNamesAndEmpty(self):
    d = Dataset(SpatialDomain(5, 5), ['a', 'a'], np.zeros((0, 2)), np.zeros((0, 2)))
    with self.assertRaises(DatasetValidationError) as cm:
      validate_dataset(d)
    reasons = ' '.join(r[2] for r in cm.exception.report)
    self.assertIn('duplicate', reasons)
    self.assertIn('no observations', reasons)

  def testUnknownColumn(self):
    d = Dataset(SpatialDomain(5, 5), ['a'], [(0.5, 0.5)], [(1,)])
    with self.assertRaises(DomainError):
      d.column('b')

  def testFromObservations(self):
    obs = [Observation((0.5, 1.5), (1.0,)), Observation((2.5, 3.5), (0.0,))]
    d = Dataset.from_observations(SpatialDomain(5, 5), ['z'], obs)
    self.assertEqual(d.observations(), obs)
    sub = d.subset(np.array([1]))
    self.assertEqual(sub.n, 1)
    np.testing.assert_array_equal(sub.locations, [[2.5, 3.5]])


class FieldTest(absltest.TestCase):

  def testScalarFieldRejectsNan(self):
    d = SpatialDomain(2, 2)
    with self.assertRaises(DomainError):
      ScalarField(d, [0, 1, np.nan, 2])
    with self.assertRaises(DomainError):
      ScalarField(d, [0, 1, np.inf, 2])
    f = ScalarField(d, [0, 1, np.inf, 2], allow_inf=True)
    self.assertEqual(f.at(1, 2), np.inf)

  def testScalarFieldWrongSize(self):
    with self.assertRaises(DomainError):
      ScalarField(SpatialDomain(2, 2), [0, 1, 2])

  def testStorageOrder(self):
    d = SpatialDomain(3, 2)
    f = ScalarField(d, np.arange(6))
    # x varies fastest, row k = 1 first
    self.assertEqual(f.at(3, 1), 2.0)
    self.assertEqual(f.at(1, 2), 3.0)

  def testBinaryMapCells(self):
    d = SpatialDomain(3, 2)
    m = BinaryMap(d, [[0, 1, 0], [1, 0, 1]])
    self.assertEqual(m.count, 3)
    self.assertEqual(m.cells(), [(2, 1), (1, 2), (3, 2)])
    self.assertEqual(m, BinaryMap(d, m.mask))
    self.assertNotEqual(m, BinaryMap.full(d))

  def testRequireSameDomain(self):
    a = BinaryMap.full(SpatialDomain(3, 2))
    b = ScalarField(SpatialDomain(3, 2), np.zeros(6))
    self.assertEqual(require_same_domain(a, b), SpatialDomain(3, 2))
    with self.assertRaises(DomainError):
      require_same_domain(a, BinaryMap.full(SpatialDomain(2, 3)))


if __name__ == '__main__':
  absltest.main()
