"""Symmetric uncertainty: mutual information normalised by the mean marginal entropy."""

import numpy as np
import scipy.stats

from . import metric_base

#----------------------------------------------------------------------------

class SymmetricUncertainty(metric_base.MetricBase):
    def _evaluate(self, recovered, target, counts):
        joint = counts.as_table() / counts.total
        h_r = scipy.stats.entropy(joint.sum(axis=1))
        h_t = scipy.stats.entropy(joint.sum(axis=0))
        if h_r + h_t == 0.0:
            # both maps constant
            self._report_result(1.0 if counts.fp == 0 and counts.fn == 0 else 0.0)
            return
        mutual = h_r + h_t - scipy.stats.entropy(joint.ravel())
        self._report_result(float(np.clip(2.0 * mutual / (h_r + h_t), 0.0, 1.0)))

#----------------------------------------------------------------------------
