"""Scoring one recovered map against its target, and summarising repetitions."""

import math

from typing import Sequence

import dnnlib
from geospm.grid_domain import BinaryMap
from . import metric_base
from .metric_defaults import metric_defaults, SCORE_NAMES

#----------------------------------------------------------------------------

def score_pair(recovered: BinaryMap, target: BinaryMap, metric_names: Sequence[str] = None) -> dnnlib.EasyDict:
    """Run the metric group on one pair of maps; returns the scores by name plus the raised flags."""
    names = SCORE_NAMES if metric_names is None else list(metric_names)
    group = metric_base.MetricGroup([metric_defaults[name] for name in names])
    group.run(recovered, target)
    scores = group.get_results()
    scores.flags = group.flags
    return scores


def aggregate_scores(runs: Sequence[dict], metric_names: Sequence[str] = None) -> dnnlib.EasyDict:
    """Mean and sample standard deviation (n - 1) of each metric over the runs.

    Sums use math.fsum, so the result does not depend on run order. A single
    run reports sd = 0 and the 'single_run' flag.
    """
    runs = list(runs)
    if not runs:
        raise ValueError('no runs to aggregate')
    names = SCORE_NAMES if metric_names is None else list(metric_names)
    n = len(runs)
    out = dnnlib.EasyDict(n=n, flags=['single_run'] if n == 1 else [])
    for name in names:
        values = [float(r[name]) for r in runs]
        mean = math.fsum(values) / n
        sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
        out[name] = dnnlib.EasyDict(mean=mean, sd=sd)
    return out

#----------------------------------------------------------------------------
