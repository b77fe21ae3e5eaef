"""Common definitions for map-recovery metrics."""

import time

import numpy as np

import dnnlib
from geospm.grid_domain import BinaryMap, require_same_domain

#----------------------------------------------------------------------------
# Confusion counts shared by every metric.

class ConfusionCounts:
    def __init__(self, tp: int, fp: int, fn: int, tn: int):
        self.tp, self.fp, self.fn, self.tn = int(tp), int(fp), int(fn), int(tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def recovered_empty(self) -> bool:
        return self.tp + self.fp == 0

    @property
    def target_empty(self) -> bool:
        return self.tp + self.fn == 0

    def as_table(self) -> np.ndarray:
        """2x2 joint counts indexed [recovered, target]."""
        return np.array([[self.tn, self.fn], [self.fp, self.tp]], dtype=np.float64)

    def describe(self) -> dict:
        return dict(tp=self.tp, fp=self.fp, fn=self.fn, tn=self.tn)


def confusion_counts(recovered: BinaryMap, target: BinaryMap, mask: BinaryMap = None) -> ConfusionCounts:
    """Counts over the cells of mask (every cell when mask is None)."""
    if mask is None:
        require_same_domain(recovered, target)
        m = np.ones(recovered.domain.shape, dtype=bool)
    else:
        require_same_domain(recovered, target, mask)
        m = mask.mask
    r = recovered.mask[m]
    t = target.mask[m]
    return ConfusionCounts(np.sum(r & t), np.sum(r & ~t), np.sum(~r & t), np.sum(~r & ~t))

#----------------------------------------------------------------------------
# Base class for metrics.

class MetricBase:
    def __init__(self, name):
        self.name = name
        self._reset()

    def _reset(self):
        self._results = []
        self._flags = []
        self._eval_time = 0

    def run(self, recovered: BinaryMap, target: BinaryMap, mask: BinaryMap = None, log_results: bool = False) -> float:
        self._reset()
        time_begin = time.time()
        counts = confusion_counts(recovered, target, mask)
        if counts.recovered_empty and counts.target_empty:
            self._flag('both_empty')
        elif counts.recovered_empty or counts.target_empty:
            self._flag('one_empty')
        self._evaluate(recovered, target, counts)
        self._eval_time = time.time() - time_begin
        if log_results:
            print(self.get_result_str().strip())
        return self.value

    @property
    def value(self) -> float:
        return self._results[0].value if self._results else float('nan')

    @property
    def flags(self):
        return list(self._flags)

    def get_result_str(self):
        result_str = 'time %-8s' % dnnlib.util.format_time(self._eval_time)
        for res in self._results:
            result_str += ' ' + self.name + res.suffix + ' '
            result_str += res.fmt % res.value
        return result_str

    def get_results(self) -> dnnlib.EasyDict:
        return dnnlib.EasyDict((self.name + res.suffix, res.value) for res in self._results)

    def _evaluate(self, recovered, target, counts):
        raise NotImplementedError # to be overridden by subclasses

    def _report_result(self, value, suffix='', fmt='%-10.4f'):
        self._results += [dnnlib.EasyDict(value=float(value), suffix=suffix, fmt=fmt)]

    def _flag(self, flag):
        if flag not in self._flags:
            self._flags.append(flag)

#----------------------------------------------------------------------------
# Group of multiple metrics.

class MetricGroup:
    def __init__(self, metric_kwarg_list):
        self.metrics = [dnnlib.util.call_func_by_name(**kwargs) for kwargs in metric_kwarg_list]

    def run(self, *args, **kwargs):
        for metric in self.metrics:
            metric.run(*args, **kwargs)

    def get_result_str(self):
        return ' '.join(metric.get_result_str() for metric in self.metrics)

    def get_results(self) -> dnnlib.EasyDict:
        results = dnnlib.EasyDict()
        for metric in self.metrics:
            results.update(metric.get_results())
        return results

    @property
    def flags(self):
        out = []
        for metric in self.metrics:
            out += [f for f in metric.flags if f not in out]
        return out

#----------------------------------------------------------------------------
