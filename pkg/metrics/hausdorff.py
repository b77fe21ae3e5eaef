"""Modified Hausdorff distance between the set cells of two maps."""

import math

import numpy as np
import scipy.ndimage

from . import metric_base

#----------------------------------------------------------------------------

def directed_mean_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over the cells of a of the Euclidean distance (in cells) to the nearest cell of b."""
    dist = scipy.ndimage.distance_transform_edt(~b)
    return float(np.mean(dist[a]))


class ModifiedHausdorff(metric_base.MetricBase):
    """max(d(A, B), d(B, A)), divided by the grid diagonal when normalize is set.

    If only one map is empty the distance is the full diagonal; two empty maps
    are at distance 0.
    """

    def __init__(self, name, normalize=True):
        self.normalize = normalize
        super().__init__(name)

    def _evaluate(self, recovered, target, counts):
        b, a = recovered.domain.shape
        diagonal = math.hypot(a, b)
        a_mask, b_mask = recovered.mask, target.mask
        if not a_mask.any() and not b_mask.any():
            value = 0.0
        elif not a_mask.any() or not b_mask.any():
            value = diagonal
        else:
            value = max(directed_mean_distance(a_mask, b_mask), directed_mean_distance(b_mask, a_mask))
        self._report_result(value / diagonal if self.normalize else value)

#----------------------------------------------------------------------------
