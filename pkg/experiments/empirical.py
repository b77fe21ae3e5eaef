"""Incremental model ladder on tabular individual-level data.

Each model is a set of design columns fitted at one smoothing diameter with
two-tailed FWE thresholds inside a density mask. Coefficient maps of all
models share one colour scale; signed significance maps of the last model
feed the conjunctions.
"""

import os
import time

from typing import List, Sequence

import dnnlib
from geospm import analysis, fieldio
from geospm.conjunction import split_signed, conjunction
from geospm.errors import ConfigError
from geospm.glm import CONSTANT, Contrast, DesignMatrix, Tail
from geospm.grid_domain import Dataset
from geospm.smoothing import SmoothingSchedule

#----------------------------------------------------------------------------

model_ladder = [
    dnnlib.EasyDict(name='model1', columns=['diabetes'], interactions=[]),
    dnnlib.EasyDict(name='model2', columns=['diabetes', 'sex', 'age', 'bmi'], interactions=[]),
    dnnlib.EasyDict(name='model3', columns=['diabetes', 'sex', 'age', 'bmi', 'income'], interactions=[]),
    dnnlib.EasyDict(name='model4', columns=['diabetes', 'sex', 'age', 'bmi', 'income'], interactions=[('bmi', 'income')]),
]


def default_empirical_options(**overrides) -> dnnlib.EasyDict:
    opts = dnnlib.EasyDict(
        diameter=7000.0,
        alpha=0.05,
        correction='min',
        mask_fraction=0.1,
        zscore=['age', 'bmi', 'income'],    # columns standardised when present
        focus='diabetes',                   # paired with every other column in the conjunctions
        conjunctions=None,                  # None: focus with each column, both signs; else list of [(column, tail), ...]
        num_workers=1,
        verbose=True,
    )
    for key, value in overrides.items():
        if key not in opts:
            raise ConfigError('unknown empirical option %r' % key)
        opts[key] = value
    return opts


def _check_columns(dataset: Dataset, models: Sequence[dict]) -> None:
    for m in models:
        wanted = list(m['columns']) + [c for pair in m.get('interactions', []) for c in pair]
        for name in wanted:
            if name not in dataset.variable_names:
                raise ConfigError('model %r uses unknown column %r (have %s)' % (m['name'], name, ', '.join(dataset.variable_names)))


def _default_conjunctions(columns: Sequence[str], focus: str) -> List[list]:
    out = []
    for other in columns:
        if other == focus:
            continue
        for tail in (Tail.POSITIVE.value, Tail.NEGATIVE.value):
            out.append([(focus, Tail.POSITIVE.value), (other, tail)])
    return out


def _conjunction_name(terms) -> str:
    return ' & '.join('%s%s' % (name, '+' if Tail.parse(tail) == Tail.POSITIVE else '-') for name, tail in terms)


def run_empirical_models(dataset: Dataset, models: Sequence[dict] = None, options: dnnlib.EasyDict = None) -> dnnlib.EasyDict:
    """Fit every model of the ladder; returns per-model bundles, the shared colour scale and conjunctions.

    A bundle holds the coefficient fields, t-maps, two-tailed significance
    maps and their positive and negative parts per column.
    """
    opts = options if options is not None else default_empirical_options()
    models = list(models) if models is not None else model_ladder
    if not models:
        raise ConfigError('no models given')
    _check_columns(dataset, models)
    log = print if opts.verbose else (lambda *_args, **_kw: None)
    schedule = SmoothingSchedule([opts.diameter])
    aopts = analysis.default_options(alpha=opts.alpha, correction=opts.correction, mask_fraction=opts.mask_fraction,
                                     num_workers=opts.num_workers, verbose=False)

    t0 = time.time()
    bundles = []
    for m in models:
        m = dnnlib.EasyDict(m)
        zscore = [c for c in opts.zscore if c in m.columns]
        design = DesignMatrix.from_dataset(dataset, m.columns, zscore=zscore, interactions=[tuple(p) for p in m.get('interactions', [])])
        contrasts = [Contrast.for_column(design, name, Tail.TWO) for name in design.names if name != CONSTANT]
        result = analysis.run_scale_space(dataset, design, schedule, contrasts, aopts)
        scale = result.scales[0]
        betas = {f.meta.column: f for f in scale.fit.beta_fields if f.meta.column in scale.significance}
        signed = {}
        for name, sig in scale.significance.items():
            sig.meta.variable = name
            sig.meta.model = m.name
            signed[name] = split_signed(scale.t_maps[name], sig)
        bundles.append(dnnlib.EasyDict(name=m.name, columns=list(design.names), scale=scale, betas=betas, signed=signed))
        log('  %s: %s' % (m.name, '  '.join('%s %d cell(s)' % (name, sig.count) for name, sig in scale.significance.items())))

    vmax = fieldio.shared_scale([f for b in bundles for f in b.betas.values()])

    last = bundles[-1]
    requests = opts.conjunctions if opts.conjunctions is not None else _default_conjunctions(list(last.signed.keys()), opts.focus)
    conjunctions = {}
    for terms in requests:
        maps = []
        for name, tail in terms:
            if name not in last.signed:
                raise ConfigError('conjunction term %r is not a column of %s' % (name, last.name))
            pos, neg = last.signed[name]
            maps.append(pos if Tail.parse(tail) == Tail.POSITIVE else neg)
        conjunctions[_conjunction_name(terms)] = conjunction(maps)

    log('Fitted %d model(s) in %s; shared |beta| scale %.4g.' % (len(bundles), dnnlib.util.format_time(time.time() - t0), vmax))
    return dnnlib.EasyDict(models=bundles, vmax=vmax, conjunctions=conjunctions, mask=bundles[0].scale.mask, options=opts)


def _slug(name: str) -> str:
    return name.replace('*', 'x').replace(' & ', '_and_').replace('+', 'pos').replace('-', 'neg')


def write_empirical_bundles(out_dir: str, result: dnnlib.EasyDict, png: bool = True) -> None:
    """One directory per model with beta and t fields, signed maps and PNGs on the shared scale."""
    for b in result.models:
        d = os.path.join(out_dir, b.name)
        for name, beta in b.betas.items():
            stem = os.path.join(d, _slug(name))
            fieldio.write_field(stem + '.beta.field', beta)
            fieldio.write_field(stem + '.t.field', b.scale.t_maps[name])
            fieldio.write_map(stem + '.sig.map', b.scale.significance[name])
            pos, neg = b.signed[name]
            fieldio.write_map(stem + '.pos.map', pos)
            fieldio.write_map(stem + '.neg.map', neg)
            if png:
                with open(stem + '.beta.png', 'wb') as f:
                    f.write(fieldio.render_png(beta, [b.scale.significance[name]], vmax=result.vmax))
        dnnlib.util.write_json(os.path.join(d, 'model.json'), b.scale.describe())
    for name, cmap in result.conjunctions.items():
        fieldio.write_map(os.path.join(out_dir, 'conjunctions', _slug(name) + '.map'), cmap)
    fieldio.write_map(os.path.join(out_dir, 'mask.map'), result.mask)
    dnnlib.util.write_json(os.path.join(out_dir, 'metadata.json'), dict(
        options=dict(result.options), shared_vmax=result.vmax, models=[dict(name=b.name, columns=b.columns) for b in result.models],
        conjunctions={name: dict(cells=m.count, inputs=m.meta.inputs) for name, m in result.conjunctions.items()}))


def run(data: str = None, standin_seed: int = None, models: list = None, options: dict = None, submit_config: dnnlib.SubmitConfig = None) -> None:
    """Entry point for dnnlib.submit_run: the ladder on a CSV (or the synthetic stand-in) into the run dir."""
    from synthetic.sampling import EMPIRICAL_DOMAIN, sample_empirical_standin
    opts = default_empirical_options(**(options or {}))
    if submit_config is not None and 'num_workers' not in (options or {}):
        opts.num_workers = submit_config.num_workers
    if data is not None:
        dataset = fieldio.read_dataset_csv(data, fieldio.dataset_domain(data, EMPIRICAL_DOMAIN))
    else:
        dataset = sample_empirical_standin(1 if standin_seed is None else standin_seed)
        fieldio.write_dataset_csv(dnnlib.make_run_dir_path('standin.csv'), dataset)
    print('Fitting %d model(s) to %d observations at diameter %g...' % (len(models or model_ladder), dataset.n, opts.diameter))
    result = run_empirical_models(dataset, models, opts)
    write_empirical_bundles(dnnlib.make_run_dir_path(), result)

#----------------------------------------------------------------------------
