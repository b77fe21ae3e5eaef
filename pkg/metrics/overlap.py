"""Jaccard index and Dice score."""

from . import metric_base

#----------------------------------------------------------------------------

class Jaccard(metric_base.MetricBase):
    def _evaluate(self, recovered, target, counts):
        denom = counts.tp + counts.fp + counts.fn
        self._report_result(1.0 if denom == 0 else counts.tp / denom)


class Dice(metric_base.MetricBase):
    def _evaluate(self, recovered, target, counts):
        denom = 2 * counts.tp + counts.fp + counts.fn
        self._report_result(1.0 if denom == 0 else 2.0 * counts.tp / denom)

#----------------------------------------------------------------------------
