"""Choose one smoothing diameter by how many cells are significant for exactly one spatial condition."""

import numpy as np

from typing import List, Sequence, Tuple

import dnnlib
from .errors import DomainError
from .glm import Contrast, DesignMatrix, Tail
from .grid_domain import Dataset, BinaryMap, require_same_domain
from .smoothing import SmoothingSchedule

#----------------------------------------------------------------------------

class SpatialConditionEncoding:
    """Condition index per observation and its one-hot design columns.

    Attributes:
        conditions: (N,) ints, sum_p 2^p [y_p > 0.5].
        present: sorted condition indices that occur at least once.
        one_hot: (N, len(present)) 0/1 columns, one per present condition.
    """

    def __init__(self, conditions: np.ndarray, n_variables: int):
        self.conditions = conditions
        self.n_variables = n_variables
        self.present = sorted(int(c) for c in np.unique(conditions))
        self.one_hot = np.stack([(conditions == c).astype(np.float64) for c in self.present], axis=1)

    @property
    def column_names(self) -> List[str]:
        return [condition_name(c, self.n_variables) for c in self.present]

    def design(self) -> DesignMatrix:
        """One-hot design without a constant; the columns already sum to one."""
        return DesignMatrix(list(zip(self.column_names, self.one_hot.T)), include_constant=False)

    def derived_dataset(self, dataset: Dataset) -> Dataset:
        return dataset.with_values(self.column_names, self.one_hot)


def condition_name(index: int, n_variables: int) -> str:
    """'c' followed by the thresholded outcome, first variable first: condition 2 of two variables is 'c01'."""
    return 'c' + ''.join(str((index >> p) & 1) for p in range(n_variables))


def spatial_conditions(dataset: Dataset) -> SpatialConditionEncoding:
    """Threshold every variable at 0.5 (strictly) and encode the outcome pattern as one condition."""
    if dataset.p not in (1, 2):
        raise DomainError('spatial conditions support 1 or 2 variables, got %d' % dataset.p)
    bits = (dataset.values > 0.5).astype(np.int64)
    conditions = np.sum(bits * (2 ** np.arange(dataset.p)), axis=1)
    return SpatialConditionEncoding(conditions, dataset.p)

#----------------------------------------------------------------------------

def coverage_score(per_condition_sig_maps: Sequence[BinaryMap]) -> int:
    """Number of cells significant in exactly one of the maps."""
    maps = list(per_condition_sig_maps)
    if not maps:
        return 0
    require_same_domain(*maps)
    hits = np.sum(np.stack([m.mask for m in maps]).astype(np.int64), axis=0)
    return int(np.count_nonzero(hits == 1))


def select_scale(scores: Sequence[Tuple[float, int]]) -> float:
    """Diameter with the highest score; ties go to the smallest diameter."""
    scores = list(scores)
    if not scores:
        raise DomainError('no scale scores to select from')
    best = max(s for _d, s in scores)
    return min(d for d, s in scores if s == best)


def score_scales(dataset: Dataset, schedule: SmoothingSchedule, options: dnnlib.EasyDict = None) -> Tuple[float, List[dnnlib.EasyDict]]:
    """Run the one-hot condition analysis over the schedule and pick a diameter.

    Returns the selected diameter and the scoring table rows
    (diameter, score, selected).
    """
    from .analysis import run_scale_space, default_options
    opts = options if options is not None else default_options()
    enc = spatial_conditions(dataset)
    design = enc.design()
    contrasts = [Contrast.for_column(design, name, Tail.POSITIVE) for name in design.names]
    result = run_scale_space(enc.derived_dataset(dataset), design, schedule, contrasts, opts)
    scores = [(r.diameter, coverage_score(list(r.significance.values()))) for r in result.scales]
    chosen = select_scale(scores)
    table = [dnnlib.EasyDict(diameter=d, score=s, selected=(d == chosen)) for d, s in scores]
    return chosen, table

#----------------------------------------------------------------------------
