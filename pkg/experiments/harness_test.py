"""Tests for the synthetic sweep harness."""

import json
import os

import numpy as np
import pandas as pd

from unittest import mock

from absl.testing import absltest
from absl.testing import parameterized

from experiments import harness
from geospm import analysis
from geospm.errors import ConfigError
from metrics.metric_defaults import SCORE_NAMES

TINY = dict(name='tiny', width=40, height=40, n_variables=1,
            shapes=[dict(center=(20, 20), radius=15, depth=2, variant='snowflake', label=1)])

TINY_BIVARIATE = dict(name='tiny_bivariate', width=40, height=40, n_variables=2, shapes=[
    dict(center=(12, 28), radius=9, depth=1, label=1),
    dict(center=(28, 28), radius=9, depth=1, label=2),
    dict(center=(20, 12), radius=9, depth=1, label=3)])


class SpecTest(parameterized.TestCase):

  def testDefaults(self):
    spec = harness.make_spec()
    self.assertEqual(spec.spec_version, 1)
    self.assertEqual(spec.kind, 'noise')
    self.assertEqual(spec.methods, ['geospm', 'kriging'])
    self.assertIs(spec.congruent, True)
    self.assertEqual(harness.schedule_of(spec).diameters, tuple(float(d) for d in range(10, 61, 5)))

  def testInteractionDefaults(self):
    spec = harness.make_spec(kind='interaction')
    self.assertEqual(harness.schedule_of(spec).diameters, (60.0,))

  @parameterized.named_parameters(
      ('empty_methods', dict(methods=[])),
      ('unknown_method', dict(methods=['idw'])),
      ('unknown_key', dict(colour='red')),
      ('zero_repetitions', dict(repetitions=0)),
      ('empty_gamma_grid', dict(gammas=[])),
      ('bad_version', dict(spec_version=2)),
      ('unknown_layout', dict(layouts=['hexagons'])),
      ('bad_diameters', dict(diameters=[10, 20])),
      ('unknown_kriging_option', dict(kriging=dict(sill=3))),
      ('non_bool_congruent', dict(congruent='yes')),
      ('missing_n_levels', dict(layouts=['univariate_snowflake'], n_levels=dict(bivariate_snowflake=[100]))),
  )
  def testRejects(self, record):
    with self.assertRaises(ConfigError):
      harness.make_spec(record)

  def testInteractionNeedsBivariateLayout(self):
    with self.assertRaises(ConfigError):
      harness.make_spec(kind='interaction', layouts=['univariate_snowflake'])

  def testPresets(self):
    desk = harness.preset_spec('desk_noise')
    self.assertLen(harness.sweep_jobs(desk), 2 * 4 * 5)
    full = harness.preset_spec('full_noise')
    self.assertLen(full.gammas, 36)
    self.assertAlmostEqual(full.gammas[-1], 0.35)
    self.assertEqual(harness.n_levels_for(full, 'bivariate_anti'), [1600, 3200])
    inter = harness.preset_spec('full_interaction')
    self.assertEqual(inter.c3_levels, [0.25, 0.3, 0.35, 0.4, 0.45, 0.5])
    with self.assertRaises(ConfigError):
      harness.preset_spec('huge')

  def testLoadToml(self):
    path = self.create_tempfile('spec.toml', content='\n'.join([
        'spec_version = 1',
        'kind = "interaction"',
        'layouts = ["bivariate_snowflake"]',
        'n_levels = [4000]',
        'c3_levels = [0.25, 0.5]',
        'repetitions = 3',
    ])).full_path
    spec = harness.load_spec(path)
    self.assertEqual(spec.kind, 'interaction')
    self.assertEqual(spec.repetitions, 3)
    self.assertLen(harness.sweep_jobs(spec), 6)

  def testLoadJson(self):
    path = self.create_tempfile('spec.json', content=json.dumps(dict(spec_version=1, gammas=[0.0, 0.05], repetitions=2))).full_path
    spec = harness.load_spec(path)
    self.assertEqual(spec.gammas, [0.0, 0.05])

  def testLoadRequiresVersion(self):
    path = self.create_tempfile('spec.json', content=json.dumps(dict(repetitions=2))).full_path
    with self.assertRaises(ConfigError):
      harness.load_spec(path)

  def testLoadMalformed(self):
    path = self.create_tempfile('spec.toml', content='spec_version = = 1').full_path
    with self.assertRaises(ConfigError):
      harness.load_spec(path)

  def testRunSeedsAreStableAndDistinct(self):
    spec = harness.make_spec()
    a = harness.run_seed(spec, 'bivariate_snowflake', 3200, 0.1, 0)
    self.assertEqual(a, harness.run_seed(harness.make_spec(), 'bivariate_snowflake', 3200, 0.1, 0))
    self.assertNotEqual(a, harness.run_seed(spec, 'bivariate_snowflake', 3200, 0.1, 1))
    self.assertNotEqual(a, harness.run_seed(spec, 'bivariate_snowflake', 3200, 0.2, 0))
    self.assertNotEqual(a, harness.run_seed(harness.make_spec(seed_base=2), 'bivariate_snowflake', 3200, 0.1, 0))


class SweepTest(absltest.TestCase):

  def _noise_spec(self, **overrides):
    record = dict(kind='noise', layouts=[TINY], n_levels=[600], gammas=[0.0, 0.2], repetitions=2,
                  diameters=[8], seed_base=3, kriging=dict(n_bins=10))
    record.update(overrides)
    return harness.make_spec(record)

  def testNoiseSweepWritesOutputs(self):
    run_dir = self.create_tempdir().full_path
    out = harness.run_noise_sweep(self._noise_spec(), run_dir=run_dir, verbose=False)
    # layouts x N x gammas x repetitions x variables x methods
    self.assertLen(out.scores, 1 * 1 * 2 * 2 * 1 * 2)
    # layouts x N x gammas x variables x methods
    self.assertLen(out.aggregate, 1 * 1 * 2 * 1 * 2)
    self.assertTrue(np.all(out.aggregate['runs'] == 2))
    for name in ('scores.csv', 'aggregate.csv', 'metadata.json'):
      self.assertTrue(os.path.exists(os.path.join(run_dir, name)), name)
    on_disk = pd.read_csv(os.path.join(run_dir, 'scores.csv'))
    self.assertLen(on_disk, len(out.scores))
    for m in SCORE_NAMES:
      self.assertTrue(np.all(np.isfinite(out.scores[m])))
    self.assertTrue(np.all((out.scores['dice'] >= 0) & (out.scores['dice'] <= 1)))
    self.assertEqual(set(out.scores['generator']), {'numpy.random.Philox'})
    with open(os.path.join(run_dir, 'metadata.json')) as f:
      meta = json.load(f)
    self.assertEqual(meta['jobs'], 4)
    self.assertEqual(meta['jobs_done'], 4)

  def testNoiseFreeGeospmRecovers(self):
    out = harness.run_noise_sweep(self._noise_spec(n_levels=[1500], gammas=[0.0], repetitions=1, methods=['geospm']), verbose=False)
    row = out.scores.iloc[0]
    self.assertGreater(row['significant_cells'], 0)
    self.assertGreater(row['dice'], 0.5)

  def testRowsReproduce(self):
    spec = self._noise_spec(gammas=[0.1], repetitions=1)
    job = harness.sweep_jobs(spec)[0]
    partitions = {'tiny': harness.build_partition(TINY)}
    a = pd.DataFrame(harness.run_one(spec, job, partitions))
    b = pd.DataFrame(harness.run_one(spec, job, partitions))
    self.assertTrue(a.equals(b))
    self.assertEqual(int(a['seed'].iloc[0]), harness.run_seed(spec, 'tiny', 600, 0.1, 0))

  def testParallelMatchesSerial(self):
    spec = self._noise_spec(methods=['geospm'])
    serial = harness.run_noise_sweep(spec, verbose=False).scores
    parallel = harness.run_noise_sweep(spec, num_workers=3, verbose=False).scores
    self.assertTrue(serial.equals(parallel))

  def testScaleSelectionPath(self):
    out = harness.run_noise_sweep(self._noise_spec(gammas=[0.0], repetitions=1, methods=['geospm'], diameters=[6, 10, 2]), verbose=False)
    self.assertIn(out.scores['diameter'].iloc[0], (6.0, 8.0, 10.0))

  def testFailuresAreScoredAsEmpty(self):
    # two observations support neither the design nor a variogram
    out = harness.run_noise_sweep(self._noise_spec(n_levels=[2], gammas=[0.0], repetitions=1), verbose=False)
    for _, row in out.scores.iterrows():
      self.assertIn('failed', row['flags'].split(';'))
      self.assertEqual(row['significant_cells'], 0)
      self.assertNotEqual(row['error'], '')
    self.assertEqual(int(out.aggregate['failed_runs'].sum()), 2)

  def _congruent_flags(self, spec):
    seen = []
    real = analysis.run_scale_space

    def recording(dataset, design, schedule, contrasts, options=None):
      seen.append(options.congruent)
      return real(dataset, design, schedule, contrasts, options)

    with mock.patch.object(analysis, 'run_scale_space', recording):
      harness.run_noise_sweep(spec, verbose=False)
    return seen

  def testSyntheticSweepsSmoothCellCentres(self):
    seen = self._congruent_flags(self._noise_spec(gammas=[0.0], repetitions=1, methods=['geospm'], diameters=[6, 10, 2]))
    # scale selection plus the final fit
    self.assertLen(seen, 2)
    self.assertTrue(all(seen))

  def testCongruencyCanBeTurnedOff(self):
    seen = self._congruent_flags(self._noise_spec(gammas=[0.0], repetitions=1, methods=['geospm'], congruent=False))
    self.assertEqual(seen, [False])

  def testWrongKindRaises(self):
    with self.assertRaises(ConfigError):
      harness.run_interaction_sweep(self._noise_spec())

  def testInteractionSweep(self):
    spec = harness.make_spec(kind='interaction', layouts=[TINY_BIVARIATE], n_levels=[1500], c3_levels=[0.5],
                             repetitions=1, diameters=[8])
    out = harness.run_interaction_sweep(spec, verbose=False)
    self.assertEqual(set(out.scores['variable']), {'z1', 'z2', 'z1*z2'})
    self.assertEqual(set(out.scores['level_name']), {'c3'})
    self.assertLen(out.aggregate, 3)


if __name__ == '__main__':
  absltest.main()
