"""Scale-space analysis: render, fit, test and threshold at every smoothing diameter."""

import time

import numpy as np

from typing import Dict, List, Sequence

import dnnlib
from .errors import DomainError
from .glm import Contrast, DesignMatrix, GlmFit, fit_glm, contrast_t_map
from .grid_domain import Dataset, ScalarField, BinaryMap
from .rft_inference import (SmoothnessEstimate, ThresholdSpec, analytic_smoothness, residual_smoothness_streaming,
                            threshold_record, threshold_map)
from .smoothing import SmoothingSchedule, ResponseAccumulators, accumulate_responses, density_mask

#----------------------------------------------------------------------------

def default_options(**overrides) -> dnnlib.EasyDict:
    """Analysis options; keyword arguments override the defaults."""
    opts = dnnlib.EasyDict(
        alpha=0.05,
        correction='min',           # 'rft', 'bonferroni' or 'min'
        smoothness='analytic',      # or 'residual' (second streaming pass)
        congruent=False,            # snap observations to cell centres
        mask_fraction=None,         # None: whole grid; else density mask fraction
        truncation_sigmas=4.0,
        num_workers=1,
        verbose=True,
    )
    for key, value in overrides.items():
        if key not in opts:
            raise DomainError('unknown analysis option %r' % key)
        opts[key] = value
    if opts.smoothness not in ('analytic', 'residual'):
        raise DomainError('smoothness must be analytic or residual, got %r' % (opts.smoothness,))
    return opts


class ScaleResult:
    """Everything computed at one smoothing diameter."""

    def __init__(self, diameter: float, fit: GlmFit, mask: BinaryMap, smoothness: SmoothnessEstimate):
        self.diameter = diameter
        self.fit = fit
        self.mask = mask
        self.smoothness = smoothness
        self.t_maps: Dict[str, ScalarField] = {}
        self.significance: Dict[str, BinaryMap] = {}
        self.thresholds: Dict[str, dnnlib.EasyDict] = {}

    def describe(self) -> dict:
        return dict(diameter=self.diameter, df=self.fit.df, rank=self.fit.rank, mask_cells=self.mask.count,
                    smoothness=self.smoothness.describe(), thresholds=dict(self.thresholds),
                    significant_cells={name: m.count for name, m in self.significance.items()},
                    flags=list(self.fit.flags))


class ScaleSpaceResult:
    def __init__(self, design: DesignMatrix, schedule: SmoothingSchedule, contrasts: Dict[str, Contrast], scales: List[ScaleResult], accumulators: ResponseAccumulators, options: dnnlib.EasyDict):
        self.design = design
        self.schedule = schedule
        self.contrasts = contrasts
        self.scales = scales
        self.accumulators = accumulators
        self.options = options

    def at(self, diameter: float) -> ScaleResult:
        for s in self.scales:
            if abs(s.diameter - diameter) <= 1e-9 * max(1.0, abs(diameter)):
                return s
        raise DomainError('diameter %r is not in the schedule %r' % (diameter, self.schedule))

    def describe(self) -> dict:
        return dict(design=list(self.design.names), diameters=list(self.schedule.diameters),
                    contrasts={name: c.describe() for name, c in self.contrasts.items()},
                    options=dict(self.options), scales=[s.describe() for s in self.scales])


def _named_contrasts(design: DesignMatrix, contrasts) -> Dict[str, Contrast]:
    out = {}
    for i, c in enumerate(contrasts):
        name = c.name or 'contrast%d' % i
        if name in out:
            raise DomainError('duplicate contrast name %r' % name)
        out[name] = c
    if not out:
        raise DomainError('no contrasts given')
    return out


def run_scale_space(dataset: Dataset, design: DesignMatrix, schedule: SmoothingSchedule, contrasts: Sequence[Contrast], options: dnnlib.EasyDict = None) -> ScaleSpaceResult:
    """Fit the GLM at each diameter of the schedule and threshold every contrast at FWE alpha."""
    opts = options if options is not None else default_options()
    named = _named_contrasts(design, contrasts)
    log = print if opts.verbose else (lambda *_args, **_kw: None)

    t0 = time.time()
    log('Accumulating kernel responses for %d observations at %d scale(s)...' % (dataset.n, len(schedule)))
    acc = accumulate_responses(dataset, design, schedule, congruent=opts.congruent, truncation_sigmas=opts.truncation_sigmas, num_workers=opts.num_workers)

    scales = []
    for s, diameter in enumerate(schedule):
        fit = fit_glm(acc, design, s)
        if opts.mask_fraction is None:
            mask = BinaryMap.full(dataset.domain)
        else:
            mask = density_mask(acc, opts.mask_fraction, s)
        if opts.smoothness == 'residual':
            sm = residual_smoothness_streaming(dataset, design, acc, fit, s, mask)
        else:
            sm = analytic_smoothness(acc.kernels[s], dataset.domain, mask)

        result = ScaleResult(diameter, fit, mask, sm)
        for name, c in named.items():
            t = contrast_t_map(fit, c)
            t.meta.contrast_name = name
            rec = threshold_record(ThresholdSpec(alpha=opts.alpha, tail=c.tail, correction=opts.correction), fit.df, sm, mask.count)
            sig = threshold_map(t, rec.value, c.tail, mask)
            sig.meta.contrast_name = name
            result.t_maps[name] = t
            result.thresholds[name] = rec
            result.significance[name] = sig
        log('  scale %d/%d  s=%-8g df=%-6d %s' % (s + 1, len(schedule), diameter, fit.df,
            '  '.join('%s: u=%.3f (%d cells)' % (name, result.thresholds[name].value, result.significance[name].count) for name in named)))
        scales.append(result)

    log('Scale space done in %s.' % dnnlib.util.format_time(time.time() - t0))
    return ScaleSpaceResult(design, schedule, named, scales, acc, opts)

#----------------------------------------------------------------------------

def coefficient_scale(results: Sequence[ScaleResult], columns: Sequence[str] = None) -> float:
    """Largest |beta| over the given results and columns; one colour scale for all coefficient maps."""
    vmax = 0.0
    for r in results:
        for p, name in enumerate(r.fit.column_names):
            if columns is not None and name not in columns:
                continue
            vmax = max(vmax, float(np.max(np.abs(r.fit.beta[p]))))
    return vmax

#----------------------------------------------------------------------------
