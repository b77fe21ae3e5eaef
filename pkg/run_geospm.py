"""Command line front-end: analyze, generate, sweep, score, render and the empirical model ladder."""

import argparse
import os
import sys

import numpy as np

import dnnlib
from geospm import analysis, fieldio
from geospm.errors import ConfigError, ConvergenceError, DatasetValidationError, DomainError, EstimabilityError
from geospm.glm import CONSTANT, Contrast, DesignMatrix
from geospm.grid_domain import BinaryMap, ScalarField, SpatialDomain
from geospm.smoothing import SmoothingSchedule
from metrics.aggregate import score_pair
from metrics.metric_defaults import SCORE_NAMES

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_CONFIG = 4
EXIT_DATA = 5

#----------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return ('%g' % value).replace('.', 'p')


def analyze(data, design, diameters, alpha, tail, correction, smoothness, mask_fraction, zscore, interactions, no_constant, domain, png, congruent=False):
    print('Analyzing "%s" with design %s...' % (data, ','.join(design)))
    domain = fieldio.dataset_domain(data, domain)
    dataset = fieldio.read_dataset_csv(data, domain)
    pairs = [tuple(term.split('*')) for term in interactions]
    X = DesignMatrix.from_dataset(dataset, design, include_constant=not no_constant, zscore=zscore, interactions=pairs)
    contrasts = [Contrast.for_column(X, name, tail) for name in X.names if name != CONSTANT]
    opts = analysis.default_options(alpha=alpha, correction=correction, smoothness=smoothness, mask_fraction=mask_fraction, congruent=congruent,
                                    num_workers=dnnlib.submit_config.num_workers)
    result = analysis.run_scale_space(dataset, X, diameters, contrasts, opts)

    vmax = analysis.coefficient_scale(result.scales, list(result.contrasts.keys()))
    for scale in result.scales:
        scale_dir = dnnlib.make_run_dir_path('s%s' % _fmt(scale.diameter))
        fieldio.write_field(os.path.join(scale_dir, 'sigma2.field'), scale.fit.sigma2_field)
        betas = {f.meta.column: f for f in scale.fit.beta_fields}
        for name in result.contrasts:
            stem = os.path.join(scale_dir, name.replace('*', 'x'))
            fieldio.write_field(stem + '.beta.field', betas[name])
            fieldio.write_field(stem + '.t.field', scale.t_maps[name])
            fieldio.write_map(stem + '.sig.map', scale.significance[name])
            if png:
                with open(stem + '.beta.png', 'wb') as f:
                    f.write(fieldio.render_png(betas[name], [scale.significance[name]], vmax=vmax))
        fieldio.write_map(os.path.join(scale_dir, 'mask.map'), scale.mask)
    dnnlib.util.write_json(dnnlib.make_run_dir_path('analysis.json'), dict(result.describe(), data=os.path.abspath(data), domain=domain.describe(), shared_vmax=vmax))


def generate(layout, gamma, c3, n, seed, stream, output):
    from synthetic.distributions import NoiseLocalDistribution, InteractionLocalDistribution, target_map
    from synthetic.partition import build_partition
    from synthetic.sampling import sample_dataset, write_generated, variable_names
    partition = build_partition(layout)
    if c3 is not None:
        dist = InteractionLocalDistribution(c3)
    else:
        dist = NoiseLocalDistribution(0.0 if gamma is None else gamma, partition.n_variables)
    gen = sample_dataset(partition, dist, n, seed, stream)
    sidecar = write_generated(output, gen)
    stem = os.path.splitext(output)[0]
    for p, name in enumerate(variable_names(dist.n_variables)):
        fieldio.write_map('%s.target_%s.map' % (stem, name), target_map(partition, dist, p))
    if c3 is not None:
        fieldio.write_map('%s.target_z1xz2.map' % stem, partition.region_mask(3))
    print('Wrote %d observations to %s (sidecar %s).' % (gen.dataset.n, output, sidecar))


def score(recovered, target):
    scores = score_pair(fieldio.read_map(recovered), fieldio.read_map(target))
    for name in SCORE_NAMES:
        print('%s %.10g' % (name, scores[name]))
    if scores.flags:
        print('flags %s' % ','.join(scores.flags))


def render(field, overlay, output, colormap, symmetric, vmax, upscale):
    grid = fieldio.read_grid_file(field)
    if isinstance(grid, BinaryMap):
        grid = ScalarField(grid.domain, grid.mask.astype(np.float64))
    overlays = [fieldio.read_map(path) for path in overlay]
    png = fieldio.render_png(grid, overlays, colormap=colormap, symmetric=symmetric, vmax=vmax, upscale=upscale)
    dnnlib.util.ensure_dir(os.path.dirname(output))
    with open(output, 'wb') as f:
        f.write(png)
    print('Wrote %s.' % output)

#----------------------------------------------------------------------------

def _parse_diameters(s):
    '''Accept 'lo:hi:step' or a single diameter.'''
    try:
        parts = [float(v) for v in s.split(':')]
        if len(parts) == 1:
            return SmoothingSchedule(parts)
        if len(parts) == 3:
            return SmoothingSchedule.from_range(*parts)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    raise argparse.ArgumentTypeError('expected lo:hi:step or a single diameter, got %r' % s)


def _parse_domain(s):
    '''Accept 'width,height' or 'width,height,origin_x,origin_y,cell_size'.'''
    parts = s.split(',')
    try:
        if len(parts) == 2:
            return SpatialDomain(int(parts[0]), int(parts[1]))
        if len(parts) == 5:
            return SpatialDomain(int(parts[0]), int(parts[1]), (float(parts[2]), float(parts[3])), float(parts[4]))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    raise argparse.ArgumentTypeError('expected width,height[,origin_x,origin_y,cell_size], got %r' % s)


def _parse_columns(s):
    names = [v.strip() for v in s.split(',') if v.strip()]
    if not names:
        raise argparse.ArgumentTypeError('expected a comma-separated list of column names')
    return names

#----------------------------------------------------------------------------

_examples = '''examples:

  # Generate a bivariate snowflake dataset with noise 0.1 (CSV, JSON sidecar and target maps)
  python %(prog)s generate --layout bivariate_snowflake --gamma 0.1 --n 1600 --seed 7 -o data/d.csv

  # Scale-space analysis of both variables, one-tailed FWE at 0.05
  python %(prog)s analyze --data data/d.csv --design z1,z2 --diameters 10:60:5 --alpha 0.05 --tail pos --congruent

  # Noise sweep at desk scale, or from a TOML spec
  python %(prog)s sweep --preset desk_noise
  python %(prog)s sweep --config sweep.toml

  # Score a recovered map against its target
  python %(prog)s score --recovered results/00001-analyze/s40/z1.sig.map --target data/d.target_z1.map

  # Render a coefficient field with its significance outline
  python %(prog)s render --field results/00001-analyze/s40/z1.beta.field --overlay results/00001-analyze/s40/z1.sig.map -o z1.png

  # Four-model ladder on the synthetic stand-in data
  python %(prog)s empirical --standin-seed 1
'''


def _build_parser():
    parser = argparse.ArgumentParser(
        description='''Geostatistical parametric mapping.

Run 'python %(prog)s <subcommand> --help' for subcommand help.''',
        epilog=_examples,
        formatter_class=argparse.RawDescriptionHelpFormatter
    )

    subparsers = parser.add_subparsers(help='Sub-commands', dest='command')

    parser_analyze = subparsers.add_parser('analyze', help='Scale-space GLM analysis of a dataset CSV')
    parser_analyze.add_argument('--data', help='Dataset CSV (x,y,<variables>)', required=True)
    parser_analyze.add_argument('--design', type=_parse_columns, help='Comma-separated design columns', required=True)
    parser_analyze.add_argument('--diameters', type=_parse_diameters, help='Smoothing diameters lo:hi:step or one value (default: %(default)s)', default='10:60:5')
    parser_analyze.add_argument('--alpha', type=float, help='FWE level (default: %(default)s)', default=0.05)
    parser_analyze.add_argument('--tail', help='Tested direction (default: %(default)s)', choices=['pos', 'neg', 'two'], default='pos')
    parser_analyze.add_argument('--correction', help='Threshold correction (default: %(default)s)', choices=['rft', 'bonferroni', 'min'], default='min')
    parser_analyze.add_argument('--smoothness', help='Smoothness estimate (default: %(default)s)', choices=['analytic', 'residual'], default='analytic')
    parser_analyze.add_argument('--mask-fraction', type=float, help='Restrict to cells with density >= fraction of its maximum', default=None)
    parser_analyze.add_argument('--zscore', type=_parse_columns, help='Columns to standardise', default=[])
    parser_analyze.add_argument('--interaction', dest='interactions', action='append', help='Product term a*b (repeatable)', default=[])
    parser_analyze.add_argument('--no-constant', help='Leave out the intercept column', action='store_true')
    parser_analyze.add_argument('--congruent', help='Snap observations to cell centres before smoothing (synthetic data)', action='store_true')
    parser_analyze.add_argument('--domain', type=_parse_domain, help='Grid when the CSV has no sidecar: W,H or W,H,X0,Y0,CELL', default=None)
    parser_analyze.add_argument('--png', help='Also write coefficient PNGs on one shared colour scale', action='store_true')
    parser_analyze.add_argument('--result-dir', help='Root directory for run results (default: %(default)s)', default='results', metavar='DIR')

    parser_generate = subparsers.add_parser('generate', help='Sample a synthetic dataset')
    parser_generate.add_argument('--layout', help='Layout name (default: %(default)s)', default='bivariate_snowflake')
    level = parser_generate.add_mutually_exclusive_group()
    level.add_argument('--gamma', type=float, help='Noise parameter in [0, 0.5]')
    level.add_argument('--c3', type=float, help='Interaction effect in [0, 0.9] (bivariate layouts)')
    parser_generate.add_argument('--n', type=int, help='Number of observations', required=True)
    parser_generate.add_argument('--seed', type=int, help='Random seed (default: %(default)s)', default=0)
    parser_generate.add_argument('--stream', type=int, help='Generator stream (default: %(default)s)', default=0)
    parser_generate.add_argument('-o', '--output', help='Output CSV path', required=True)

    parser_sweep = subparsers.add_parser('sweep', help='Run a noise or interaction sweep')
    source = parser_sweep.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', help='Sweep spec (.toml or .json)')
    source.add_argument('--preset', help='Named preset (desk_noise, full_noise, desk_interaction, full_interaction)')
    parser_sweep.add_argument('--num-workers', type=int, help='Parallel runs (default: GEOSPM_NUM_WORKERS or 1)', default=None, metavar='N')
    parser_sweep.add_argument('--result-dir', help='Root directory for run results (default: %(default)s)', default='results', metavar='DIR')

    parser_score = subparsers.add_parser('score', help='Compare a recovered map with its target')
    parser_score.add_argument('--recovered', help='Recovered map file', required=True)
    parser_score.add_argument('--target', help='Target map file', required=True)

    parser_render = subparsers.add_parser('render', help='Render a field or map as PNG')
    parser_render.add_argument('--field', help='Field or map file', required=True)
    parser_render.add_argument('--overlay', action='append', help='Map whose outline is drawn on top (repeatable)', default=[])
    parser_render.add_argument('-o', '--output', help='Output PNG path', required=True)
    parser_render.add_argument('--colormap', help='Matplotlib colormap (default: %(default)s)', default='RdBu_r')
    parser_render.add_argument('--symmetric', help='Colour scale symmetric about 0', action='store_true')
    parser_render.add_argument('--vmax', type=float, help='Upper end of the colour scale', default=None)
    parser_render.add_argument('--upscale', type=int, help='Pixels per cell (default: %(default)s)', default=4)

    parser_empirical = subparsers.add_parser('empirical', help='Fit the four-model ladder on tabular data')
    parser_empirical.add_argument('--data', help='Dataset CSV with diabetes, sex, age, bmi and income columns', default=None)
    parser_empirical.add_argument('--standin-seed', type=int, help='Seed of the synthetic stand-in used when --data is not given', default=None)
    parser_empirical.add_argument('--diameter', type=float, help='Smoothing diameter in metres (default: %(default)s)', default=7000.0)
    parser_empirical.add_argument('--mask-fraction', type=float, help='Density mask fraction (default: %(default)s)', default=0.1)
    parser_empirical.add_argument('--result-dir', help='Root directory for run results (default: %(default)s)', default='results', metavar='DIR')

    return parser


def _dispatch(subcmd, kwargs):
    sc = dnnlib.SubmitConfig()

    if subcmd in ('generate', 'score', 'render'):
        dnnlib.submit_diagnostic(sc, 'run_geospm.' + subcmd, **kwargs)
        return

    sc.run_dir_root = kwargs.pop('result_dir')
    sc.run_desc = subcmd
    if subcmd == 'sweep':
        from experiments import harness
        num_workers = kwargs.pop('num_workers')
        if num_workers is not None:
            if num_workers < 1:
                raise ConfigError('--num-workers must be >= 1, got %d' % num_workers)
            sc.num_workers = num_workers
        spec = harness.load_spec(kwargs['config']) if kwargs['config'] else harness.preset_spec(kwargs['preset'])
        print('Sweep %s: %d job(s) on %d worker(s).' % (spec.kind, len(harness.sweep_jobs(spec)), sc.num_workers))
        dnnlib.submit_run(sc, 'experiments.harness.run', spec=dict(spec))
    elif subcmd == 'empirical':
        options = dict(diameter=kwargs.pop('diameter'), mask_fraction=kwargs.pop('mask_fraction'))
        dnnlib.submit_run(sc, 'experiments.empirical.run', options=options, **kwargs)
    else:
        dnnlib.submit_run(sc, 'run_geospm.' + subcmd, **kwargs)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    kwargs = vars(args)
    subcmd = kwargs.pop('command')

    if subcmd is None:
        print('Error: missing subcommand.  Re-run with --help for usage.', file=sys.stderr)
        return EXIT_USAGE

    try:
        _dispatch(subcmd, kwargs)
    except FileNotFoundError as e:
        print('Error: file not found: %s' % (e.filename or e), file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigError as e:
        print('Error: %s' % e, file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetValidationError, DomainError, EstimabilityError, ConvergenceError) as e:
        print('Error: %s' % e, file=sys.stderr)
        return EXIT_DATA
    except Exception as e: # pylint: disable=broad-except
        print('Error: unexpected %s: %s' % (type(e).__name__, e), file=sys.stderr)
        return EXIT_UNEXPECTED
    return EXIT_OK

#----------------------------------------------------------------------------

if __name__ == "__main__":
    sys.exit(main())

#----------------------------------------------------------------------------
