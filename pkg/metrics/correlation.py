"""Matthews correlation coefficient."""

import math

from . import metric_base

#----------------------------------------------------------------------------

class MCC(metric_base.MetricBase):
    def _evaluate(self, recovered, target, counts):
        tp, fp, fn, tn = counts.tp, counts.fp, counts.fn, counts.tn
        denom = float(tp + fp) * float(tp + fn) * float(tn + fp) * float(tn + fn)
        if denom == 0.0:
            # one class missing from a map: identical maps still agree perfectly
            self._flag('degenerate_mcc')
            self._report_result(1.0 if fp == 0 and fn == 0 else 0.0)
            return
        value = (float(tp) * tn - float(fp) * fn) / math.sqrt(denom)
        self._report_result(min(1.0, max(-1.0, value)))

#----------------------------------------------------------------------------
