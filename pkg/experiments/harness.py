"""Synthetic recovery sweeps.

A sweep crosses layouts, sample sizes, a noise (gamma) or interaction (c3)
grid and repetitions. Every run generates a dataset, recovers each variable
with the selected methods, and scores the recovery against the target map.
Rows are written to scores.csv in job order as they complete; aggregate.csv
holds the mean and sd over repetitions.
"""

import copy
import json
import os
import sys
import time

import numpy as np
import pandas as pd

from typing import Dict, List, Sequence

import dnnlib
from dnnlib.thread_pool import imap_ordered
from geospm import analysis, fieldio
from geospm.errors import ConfigError
from geospm.glm import Contrast, DesignMatrix, Tail
from geospm.grid_domain import BinaryMap, Dataset
from geospm.scale_selection import score_scales
from geospm.smoothing import SmoothingSchedule
from kriging.ordinary import default_kriging_options, run_kriging
from metrics.aggregate import score_pair, aggregate_scores
from metrics.metric_defaults import SCORE_NAMES
from synthetic.distributions import NoiseLocalDistribution, InteractionLocalDistribution, target_map
from synthetic.partition import RegionPartition, build_partition, resolve_layout
from synthetic.sampling import GENERATOR_ID, sample_dataset, variable_names

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SPEC_VERSION = 1
METHODS = ('geospm', 'kriging')
INTERACTION_TERM = 'z1*z2'

#----------------------------------------------------------------------------
# Experiment specs.

def _defaults(kind: str) -> dnnlib.EasyDict:
    return dnnlib.EasyDict(
        spec_version=SPEC_VERSION,
        kind=kind,                                  # 'noise' or 'interaction'
        layouts=['bivariate_snowflake'],
        n_levels=[3200],                            # list, or {layout: list}
        gammas=[0.0, 0.1, 0.2, 0.3],
        c3_levels=[0.25, 0.5],
        repetitions=5,
        methods=['geospm', 'kriging'] if kind == 'noise' else ['geospm'],
        diameters=[10, 60, 5] if kind == 'noise' else [60],   # [lo, hi, step] or a single diameter
        seed_base=1,
        alpha=0.05,
        correction='min',
        congruent=True,                             # snap observations to cell centres before smoothing
        kriging=dnnlib.EasyDict(),                  # overrides of default_kriging_options
        write_maps=False,
    )


def _gamma_grid(lo, hi, step):
    return [round(lo + i * step, 10) for i in range(int(round((hi - lo) / step)) + 1)]


spec_presets = dnnlib.EasyDict(
    desk_noise=dict(kind='noise', layouts=['univariate_snowflake', 'bivariate_snowflake'],
                    n_levels=dict(univariate_snowflake=[1800], bivariate_snowflake=[3200]),
                    gammas=[0.0, 0.1, 0.2, 0.3], repetitions=5),
    full_noise=dict(kind='noise', layouts=['univariate_snowflake', 'univariate_anti', 'snowflake_field', 'bivariate_snowflake', 'bivariate_anti'],
                     n_levels=dict(univariate_snowflake=[600, 1200, 1800], univariate_anti=[600, 1200, 1800], snowflake_field=[600, 1200, 1800],
                                   bivariate_snowflake=[1600, 3200], bivariate_anti=[1600, 3200]),
                     gammas=_gamma_grid(0.0, 0.35, 0.01), repetitions=10),
    desk_interaction=dict(kind='interaction', layouts=['bivariate_snowflake'], n_levels=[4000],
                          c3_levels=[0.25, 0.5], repetitions=3),
    full_interaction=dict(kind='interaction', layouts=['bivariate_snowflake'], n_levels=[15000],
                           c3_levels=[0.25, 0.3, 0.35, 0.4, 0.45, 0.5], repetitions=10),
)


def make_spec(record: dict = None, **overrides) -> dnnlib.EasyDict:
    """Fill defaults for the record's kind, apply overrides and validate.

    Unknown keys are rejected. A record without spec_version is accepted only
    when built in code (overrides); files must carry it.
    """
    record = dict(record or {})
    record.update(overrides)
    kind = record.get('kind', 'noise')
    if kind not in ('noise', 'interaction'):
        raise ConfigError('kind must be noise or interaction, got %r' % (kind,))
    spec = _defaults(kind)
    for key, value in record.items():
        if key not in spec:
            raise ConfigError('unknown experiment key %r (allowed: %s)' % (key, ', '.join(sorted(spec.keys()))))
        spec[key] = copy.deepcopy(value)
    spec.kriging = dnnlib.EasyDict(spec.kriging)
    return validate_spec(spec)


def validate_spec(spec: dnnlib.EasyDict) -> dnnlib.EasyDict:
    if spec.spec_version != SPEC_VERSION:
        raise ConfigError('unsupported spec_version %r (this version reads %d)' % (spec.spec_version, SPEC_VERSION))
    if not spec.layouts:
        raise ConfigError('layouts must not be empty')
    if not spec.methods:
        raise ConfigError('methods must not be empty')
    for m in spec.methods:
        if m not in METHODS:
            raise ConfigError('unknown method %r (expected %s)' % (m, ' or '.join(METHODS)))
    if int(spec.repetitions) != spec.repetitions or spec.repetitions < 1:
        raise ConfigError('repetitions must be an integer >= 1, got %r' % (spec.repetitions,))
    levels = spec.gammas if spec.kind == 'noise' else spec.c3_levels
    if not levels:
        raise ConfigError('%s grid must not be empty' % ('gamma' if spec.kind == 'noise' else 'c3'))
    names = [layout_name(entry) for entry in spec.layouts]
    if len(set(names)) != len(names):
        raise ConfigError('layout names must be unique, got %r' % (names,))
    for entry in spec.layouts:
        record = resolve_layout(entry)
        if not n_levels_for(spec, layout_name(entry)):
            raise ConfigError('no N levels for layout %r' % layout_name(entry))
        if spec.kind == 'interaction' and record.get('n_variables') != 2:
            raise ConfigError('interaction sweeps need a bivariate layout, got %r' % layout_name(entry))
    if not isinstance(spec.congruent, bool):
        raise ConfigError('congruent must be true or false, got %r' % (spec.congruent,))
    if len(spec.diameters) not in (1, 3):
        raise ConfigError('diameters must be [d] or [lo, hi, step], got %r' % (spec.diameters,))
    schedule_of(spec)
    unknown = set(spec.kriging.keys()) - set(default_kriging_options().keys())
    if unknown:
        raise ConfigError('unknown kriging option(s): %s' % ', '.join(sorted(unknown)))
    return spec


def layout_name(entry) -> str:
    """Layouts are registry names or inline layout records carrying a name."""
    if isinstance(entry, str):
        return entry
    if 'name' not in entry:
        raise ConfigError('inline layout records need a name')
    return str(entry['name'])


def n_levels_for(spec: dnnlib.EasyDict, layout: str) -> List[int]:
    levels = spec.n_levels.get(layout, []) if isinstance(spec.n_levels, dict) else spec.n_levels
    return [int(n) for n in levels]


def schedule_of(spec: dnnlib.EasyDict) -> SmoothingSchedule:
    try:
        if len(spec.diameters) == 1:
            return SmoothingSchedule([spec.diameters[0]])
        return SmoothingSchedule.from_range(*spec.diameters)
    except ValueError as e:
        raise ConfigError('bad diameters %r: %s' % (spec.diameters, e))


def load_spec(path: str) -> dnnlib.EasyDict:
    """Read an experiment spec from a .json or .toml file."""
    try:
        if path.lower().endswith('.toml'):
            with open(path, 'rb') as f:
                record = tomllib.load(f)
        else:
            with open(path, 'r', encoding='utf-8') as f:
                record = json.load(f)
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError('%s: %s' % (path, e))
    if 'spec_version' not in record:
        raise ConfigError('%s: missing spec_version' % path)
    return make_spec(record)


def preset_spec(name: str, **overrides) -> dnnlib.EasyDict:
    if name not in spec_presets:
        raise ConfigError('unknown preset %r (have %s)' % (name, ', '.join(spec_presets.keys())))
    return make_spec(spec_presets[name], **overrides)

#----------------------------------------------------------------------------
# One run.

def run_seed(spec: dnnlib.EasyDict, layout: str, n: int, level: float, repetition: int) -> int:
    return dnnlib.util.stable_seed(spec.seed_base, spec.kind, layout, n, '%r' % float(level), repetition)


def _distribution(spec: dnnlib.EasyDict, partition: RegionPartition, level: float):
    if spec.kind == 'noise':
        return NoiseLocalDistribution(level, partition.n_variables)
    return InteractionLocalDistribution(level)


def _targets(spec: dnnlib.EasyDict, partition: RegionPartition, dist) -> Dict[str, BinaryMap]:
    names = variable_names(partition.n_variables)
    targets = {name: target_map(partition, dist, p) for p, name in enumerate(names)}
    if spec.kind == 'interaction':
        targets[INTERACTION_TERM] = BinaryMap(partition.domain, partition.region_mask(3).mask, meta=dict(kind='target', variable=INTERACTION_TERM))
    return targets


def _recover_geospm(spec: dnnlib.EasyDict, dataset: Dataset, names: Sequence[str]) -> dnnlib.EasyDict:
    opts = analysis.default_options(alpha=spec.alpha, correction=spec.correction, congruent=spec.congruent, verbose=False)
    schedule = schedule_of(spec)
    if len(schedule) > 1:
        diameter, _table = score_scales(dataset, schedule, opts)
    else:
        diameter = schedule.diameters[0]
    interactions = [('z1', 'z2')] if INTERACTION_TERM in names else []
    base = [name for name in names if name != INTERACTION_TERM]
    design = DesignMatrix.from_dataset(dataset, base, interactions=interactions)
    contrasts = [Contrast.for_column(design, name, Tail.POSITIVE) for name in names]
    result = analysis.run_scale_space(dataset, design, SmoothingSchedule([diameter]), contrasts, opts)
    scale = result.scales[0]
    return dnnlib.EasyDict(diameter=diameter, maps=dict(scale.significance), flags=list(scale.fit.flags))


def _recover_kriging(spec: dnnlib.EasyDict, dataset: Dataset, name: str) -> dnnlib.EasyDict:
    if name == INTERACTION_TERM:
        z = dataset.values
        dataset = dataset.with_values(list(dataset.variable_names) + [INTERACTION_TERM], np.column_stack([z, z[:, 0] * z[:, 1]]))
    opts = default_kriging_options(**dict(spec.kriging, alpha=spec.alpha, verbose=False))
    out = run_kriging(dataset, name, opts)
    return dnnlib.EasyDict(map=out.significance, flags=list(out.result.flags) + list(out.significance.meta.get('flags', [])))


def _failed(target: BinaryMap, error: Exception) -> dnnlib.EasyDict:
    return dnnlib.EasyDict(map=BinaryMap.full(target.domain, False), flags=['failed'], error='%s: %s' % (type(error).__name__, error))


def run_one(spec: dnnlib.EasyDict, job: dnnlib.EasyDict, partitions: Dict[str, RegionPartition], run_dir: str = None) -> List[dict]:
    """Generate one dataset and score every (method, variable) recovery; returns the score rows.

    A method that raises is scored as an empty recovery with the 'failed'
    flag; the sweep carries on.
    """
    partition = partitions[job.layout]
    dist = _distribution(spec, partition, job.level)
    seed = run_seed(spec, job.layout, job.n, job.level, job.repetition)
    gen = sample_dataset(partition, dist, job.n, seed)
    targets = _targets(spec, partition, dist)
    names = list(targets.keys())

    recovered = {}
    if 'geospm' in spec.methods:
        try:
            g = _recover_geospm(spec, gen.dataset, names)
            for name in names:
                recovered['geospm', name] = dnnlib.EasyDict(map=g.maps[name], flags=list(g.flags), diameter=g.diameter)
        except (ValueError, RuntimeError) as e:
            for name in names:
                recovered['geospm', name] = _failed(targets[name], e)
    if 'kriging' in spec.methods:
        for name in names:
            try:
                recovered['kriging', name] = _recover_kriging(spec, gen.dataset, name)
            except (ValueError, RuntimeError) as e:
                recovered['kriging', name] = _failed(targets[name], e)

    level_key = 'gamma' if spec.kind == 'noise' else 'c3'
    rows = []
    for (method, name), rec in recovered.items():
        scores = score_pair(rec.map, targets[name])
        row = dict(layout=job.layout, n=job.n, level_name=level_key, level=float(job.level), repetition=job.repetition,
                   seed=seed, generator=GENERATOR_ID, method=method, variable=name,
                   diameter=rec.get('diameter', float('nan')), significant_cells=rec.map.count)
        row.update((m, scores[m]) for m in SCORE_NAMES)
        row['flags'] = ';'.join(sorted(set(rec.flags + scores.flags)))
        row['error'] = rec.get('error', '')
        rows.append(row)
        if run_dir and spec.write_maps:
            fieldio.write_map(os.path.join(run_dir, 'maps', '%s-n%d-%s%g-r%d-%s-%s.map' % (
                job.layout, job.n, level_key, job.level, job.repetition, method, name.replace('*', 'x'))), rec.map)
    return rows

#----------------------------------------------------------------------------
# Sweeps.

def sweep_jobs(spec: dnnlib.EasyDict) -> List[dnnlib.EasyDict]:
    levels = spec.gammas if spec.kind == 'noise' else spec.c3_levels
    return [dnnlib.EasyDict(layout=layout, n=n, level=float(level), repetition=r)
            for layout in [layout_name(entry) for entry in spec.layouts]
            for n in n_levels_for(spec, layout)
            for level in levels
            for r in range(int(spec.repetitions))]


GROUP_KEYS = ['layout', 'n', 'level_name', 'level', 'variable', 'method']


def aggregate_table(scores: pd.DataFrame) -> pd.DataFrame:
    """One row per (layout, n, level, variable, method): mean and sd of each metric over repetitions."""
    rows = []
    for key, group in scores.groupby(GROUP_KEYS, sort=False):
        agg = aggregate_scores(group.to_dict('records'))
        row = dict(zip(GROUP_KEYS, key))
        row['runs'] = agg.n
        for m in SCORE_NAMES:
            row[m + '_mean'] = agg[m].mean
            row[m + '_sd'] = agg[m].sd
        row['significant_cells_mean'] = float(group['significant_cells'].mean())
        row['failed_runs'] = int(group['flags'].fillna('').str.contains('failed').sum())
        rows.append(row)
    return pd.DataFrame(rows)


class _ScoreAppender:
    """Single writer for scores.csv; rows arrive in job order."""

    def __init__(self, path: str):
        self.path = path
        self.header = True

    def append(self, rows: List[dict]) -> None:
        if not self.path or not rows:
            return
        pd.DataFrame(rows).to_csv(self.path, mode='w' if self.header else 'a', header=self.header, index=False, float_format='%.17g')
        self.header = False


def run_sweep(spec: dnnlib.EasyDict, run_dir: str = None, num_workers: int = 1, verbose: bool = True) -> dnnlib.EasyDict:
    """Run every job of the spec; returns the scores and aggregate tables.

    With a run_dir, writes scores.csv, aggregate.csv and metadata.json there.
    """
    spec = validate_spec(spec)
    log = print if verbose else (lambda *_args, **_kw: None)
    jobs = sweep_jobs(spec)
    partitions = {layout_name(entry): build_partition(entry) for entry in spec.layouts}
    appender = _ScoreAppender(os.path.join(run_dir, 'scores.csv') if run_dir else None)
    ctx = dnnlib.RunContext.get() if dnnlib.submit_config is not None else None

    log('Running %s sweep: %d job(s) on %d worker(s)...' % (spec.kind, len(jobs), num_workers))
    t0 = time.time()
    all_rows = []
    for i, rows in enumerate(imap_ordered(lambda job: run_one(spec, job, partitions, run_dir), jobs, num_workers)):
        appender.append(rows)
        all_rows.extend(rows)
        job = jobs[i]
        failed = sum(1 for r in rows if 'failed' in r['flags'].split(';'))
        log('  job %d/%d  %s n=%d %s=%g rep=%d  %s%s' % (i + 1, len(jobs), job.layout, job.n, 'gamma' if spec.kind == 'noise' else 'c3', job.level, job.repetition,
            ' '.join('%s/%s dice=%.3f' % (r['method'], r['variable'], r['dice']) for r in rows), '  (%d failed)' % failed if failed else ''))
        if ctx is not None:
            ctx.update(cur=i + 1, max_value=len(jobs))
            if ctx.should_stop():
                log('Stop requested; %d of %d job(s) done.' % (i + 1, len(jobs)))
                break

    scores = pd.DataFrame(all_rows)
    aggregate = aggregate_table(scores) if len(scores) else pd.DataFrame()
    if run_dir:
        aggregate.to_csv(os.path.join(run_dir, 'aggregate.csv'), index=False, float_format='%.17g')
        dnnlib.util.write_json(os.path.join(run_dir, 'metadata.json'), dict(
            spec=dict(spec), generator=GENERATOR_ID, jobs=len(jobs), jobs_done=len({(r['layout'], r['n'], r['level'], r['repetition']) for r in all_rows}),
            elapsed=time.time() - t0, layouts={name: p.describe() for name, p in partitions.items()}))
    log('Sweep done in %s.' % dnnlib.util.format_time(time.time() - t0))
    return dnnlib.EasyDict(scores=scores, aggregate=aggregate)


def run_noise_sweep(spec: dnnlib.EasyDict, run_dir: str = None, num_workers: int = 1, verbose: bool = True) -> dnnlib.EasyDict:
    if spec.kind != 'noise':
        raise ConfigError('run_noise_sweep needs kind = noise, got %r' % (spec.kind,))
    return run_sweep(spec, run_dir, num_workers, verbose)


def run_interaction_sweep(spec: dnnlib.EasyDict, run_dir: str = None, num_workers: int = 1, verbose: bool = True) -> dnnlib.EasyDict:
    if spec.kind != 'interaction':
        raise ConfigError('run_interaction_sweep needs kind = interaction, got %r' % (spec.kind,))
    return run_sweep(spec, run_dir, num_workers, verbose)


def run(spec: dict, submit_config: dnnlib.SubmitConfig = None) -> None:
    """Entry point for dnnlib.submit_run: writes the sweep outputs into the run dir."""
    spec = make_spec(spec)
    run_dir = dnnlib.make_run_dir_path()
    num_workers = submit_config.num_workers if submit_config is not None else 1
    func = run_noise_sweep if spec.kind == 'noise' else run_interaction_sweep
    func(spec, run_dir, num_workers)

#----------------------------------------------------------------------------
