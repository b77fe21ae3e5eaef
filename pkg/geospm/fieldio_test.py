"""Tests for geospm.fieldio."""

import io
import json
import os

import numpy as np
import PIL.Image

from absl.testing import absltest

from geospm import fieldio
from geospm.errors import ConfigError, DatasetValidationError
from geospm.grid_domain import SpatialDomain, Dataset, ScalarField, BinaryMap

DOMAIN = SpatialDomain(5, 3, origin=(100.0, -20.0), cell_size=2.5)


class GridFileTest(absltest.TestCase):

  def testFieldIsBitExact(self):
    rng = np.random.default_rng(0)
    field = ScalarField(DOMAIN, rng.normal(size=DOMAIN.shape) * 1e-7)
    path = os.path.join(self.create_tempdir().full_path, 'sub', 'f.field')
    fieldio.write_field(path, field)
    back = fieldio.read_field(path)
    self.assertEqual(back.domain, DOMAIN)
    np.testing.assert_array_equal(back.values, field.values)

  def testInfiniteField(self):
    field = ScalarField(DOMAIN, np.where(np.arange(15) == 4, np.inf, 1.0), allow_inf=True)
    path = os.path.join(self.create_tempdir().full_path, 't.field')
    fieldio.write_field(path, field)
    back = fieldio.read_grid_file(path)
    self.assertTrue(back.allow_inf)
    self.assertEqual(back.at(5, 1), np.inf)

  def testMap(self):
    bmap = BinaryMap(DOMAIN, np.arange(15).reshape(3, 5) % 3 == 0)
    path = os.path.join(self.create_tempdir().full_path, 'm.map')
    fieldio.write_map(path, bmap)
    self.assertEqual(fieldio.read_map(path), bmap)
    self.assertIsInstance(fieldio.read_grid_file(path), BinaryMap)
    with self.assertRaises(ConfigError):
      fieldio.read_field(path)

  def testRowOrder(self):
    path = os.path.join(self.create_tempdir().full_path, 'f.field')
    fieldio.write_field(path, ScalarField(SpatialDomain(2, 2), [1, 2, 3, 4]))
    with open(path) as f:
      rows = [line for line in f.read().splitlines() if not line.startswith('#')]
    self.assertEqual(rows, ['1 2', '3 4'])

  def testMalformed(self):
    missing = self.create_tempfile('a.field', content='1 2\n3 4\n').full_path
    with self.assertRaises(ConfigError):
      fieldio.read_field(missing)
    short = self.create_tempfile('b.field', content='\n'.join([
        fieldio.FIELD_MAGIC, '# width 2', '# height 2', '# origin 0.0 0.0', '# cell_size 1.0', '# dtype float64', '1 2'])).full_path
    with self.assertRaises(ConfigError):
      fieldio.read_field(short)
    not_binary = self.create_tempfile('c.map', content='\n'.join([
        fieldio.FIELD_MAGIC, '# width 2', '# height 1', '# origin 0.0 0.0', '# cell_size 1.0', '# dtype bool', '0 2'])).full_path
    with self.assertRaises(ConfigError):
      fieldio.read_map(not_binary)


class DatasetCsvTest(absltest.TestCase):

  def testRoundTrip(self):
    rng = np.random.default_rng(1)
    loc = np.stack([rng.uniform(100.0, 112.5, 20), rng.uniform(-20.0, -12.5, 20)], axis=1)
    data = Dataset(DOMAIN, ['z1', 'z2'], loc, rng.normal(size=(20, 2)))
    path = os.path.join(self.create_tempdir().full_path, 'd.csv')
    fieldio.write_dataset_csv(path, data)
    back = fieldio.read_dataset_csv(path, DOMAIN)
    self.assertEqual(back.variable_names, ('z1', 'z2'))
    np.testing.assert_array_equal(back.locations, data.locations)
    np.testing.assert_array_equal(back.values, data.values)
    only = fieldio.read_dataset_csv(path, DOMAIN, columns=['z2'])
    np.testing.assert_array_equal(only.values[:, 0], data.values[:, 1])

  def testBadHeader(self):
    path = self.create_tempfile('d.csv', content='lon,lat,z\n1,2,3\n').full_path
    with self.assertRaises(ConfigError):
      fieldio.read_dataset_csv(path, DOMAIN)
    path = self.create_tempfile('e.csv', content='x,y,z\n101,-19,1\n').full_path
    with self.assertRaises(ConfigError):
      fieldio.read_dataset_csv(path, DOMAIN, columns=['w'])

  def testInvalidRowsReported(self):
    path = self.create_tempfile('d.csv', content='x,y,z\n101,-19,1\n99,-19,0\n102,-18,abc\n').full_path
    with self.assertRaises(DatasetValidationError) as cm:
      fieldio.read_dataset_csv(path, DOMAIN)
    self.assertEqual([(r[0], r[1]) for r in cm.exception.report], [(1, 'x'), (2, 'z')])

  def testEmptyFile(self):
    path = self.create_tempfile('d.csv', content='').full_path
    with self.assertRaises(DatasetValidationError):
      fieldio.read_dataset_csv(path, DOMAIN)

  def testDatasetDomain(self):
    tmp = self.create_tempdir().full_path
    csv = os.path.join(tmp, 'd.csv')
    with open(csv, 'w') as f:
      f.write('x,y,z\n1,1,1\n')
    with self.assertRaises(ConfigError):
      fieldio.dataset_domain(csv)
    self.assertEqual(fieldio.dataset_domain(csv, DOMAIN), DOMAIN)
    with open(fieldio.sidecar_path(csv), 'w') as f:
      json.dump(dict(domain=DOMAIN.describe()), f)
    self.assertEqual(fieldio.dataset_domain(csv), DOMAIN)
    with self.assertRaises(FileNotFoundError):
      fieldio.dataset_domain(os.path.join(tmp, 'missing.csv'), DOMAIN)


class RenderTest(absltest.TestCase):

  def testSharedScale(self):
    a = ScalarField(DOMAIN, np.linspace(-3, 1, 15))
    b = ScalarField(DOMAIN, np.linspace(0, 2, 15), allow_inf=False)
    self.assertEqual(fieldio.shared_scale([a, b]), 3.0)
    self.assertEqual(fieldio.shared_scale([ScalarField(DOMAIN, np.full(15, np.inf), allow_inf=True)]), 0.0)

  def testOutline(self):
    m = np.zeros((5, 5), dtype=bool)
    m[1:4, 1:4] = True
    ring = fieldio.outline(m)
    self.assertEqual(int(ring.sum()), 8)
    self.assertFalse(ring[2, 2])

  def testPng(self):
    field = ScalarField(DOMAIN, np.linspace(-1, 1, 15))
    overlay = BinaryMap(DOMAIN, np.ones(DOMAIN.shape))
    png = fieldio.render_png(field, [overlay], upscale=3)
    img = PIL.Image.open(io.BytesIO(png))
    self.assertEqual(img.size, (15, 9))
    self.assertEqual(img.mode, 'RGB')
    # the whole grid is the overlay's edge, drawn black
    self.assertEqual(img.getpixel((0, 0)), (0, 0, 0))

  def testFlatFieldStillRenders(self):
    png = fieldio.render_png(ScalarField(DOMAIN, np.zeros(15)), upscale=1)
    self.assertEqual(PIL.Image.open(io.BytesIO(png)).size, (5, 3))


if __name__ == '__main__':
  absltest.main()
