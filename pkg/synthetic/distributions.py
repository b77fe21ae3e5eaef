"""Per-region outcome distributions of the binary variables.

A table holds one probability per outcome, indexed z1 + 2*z2 (or just z for
a single variable), so the bivariate order is (0,0), (1,0), (0,1), (1,1).
"""

import numpy as np

from typing import List

import dnnlib
from geospm.errors import DomainError
from geospm.grid_domain import BinaryMap
from .partition import RegionPartition

INTERACTION_P0 = 0.025
_TOL = 1e-12

#----------------------------------------------------------------------------

class LocalDistribution:
    """Outcome tables for regions 0..K-1 over P binary variables."""

    kind = 'custom'

    def __init__(self, tables, n_variables: int, params: dict = None):
        t = np.array(tables, dtype=np.float64)
        if t.ndim != 2 or t.shape[1] != 2 ** n_variables:
            raise DomainError('expected tables of shape (K, %d), got %r' % (2 ** n_variables, t.shape))
        for k, row in enumerate(t):
            if np.any(row < -_TOL) or np.any(row > 1.0 + _TOL):
                raise DomainError('region %d: probabilities %s outside [0, 1]' % (k, np.array2string(row)))
            if abs(float(np.sum(row)) - 1.0) > _TOL:
                raise DomainError('region %d: probabilities sum to %r, not 1' % (k, float(np.sum(row))))
        t = np.clip(t, 0.0, 1.0)
        t.setflags(write=False)
        self.tables = t
        self.n_variables = n_variables
        self.params = dnnlib.EasyDict(params or {})

    @property
    def n_regions(self) -> int:
        return self.tables.shape[0]

    def table(self, region: int) -> np.ndarray:
        if not 0 <= region < self.n_regions:
            raise DomainError('region %r outside 0..%d' % (region, self.n_regions - 1))
        return self.tables[region]

    def marginal(self, region: int, variable_index: int) -> float:
        """Pr(Z_var = 1) in the region."""
        if not 0 <= variable_index < self.n_variables:
            raise DomainError('variable index %r outside 0..%d' % (variable_index, self.n_variables - 1))
        outcomes = np.arange(2 ** self.n_variables)
        return float(np.sum(self.table(region)[(outcomes >> variable_index) & 1 == 1]))

    def expectation(self, region: int) -> List[float]:
        return [self.marginal(region, p) for p in range(self.n_variables)]

    def describe(self) -> dict:
        return dict(kind=self.kind, n_variables=self.n_variables, params=dict(self.params), tables=self.tables.tolist())

#----------------------------------------------------------------------------
# Noise parameterisation.

def _noise_pq(gamma: float, region: int, n_variables: int):
    if n_variables == 1:
        if region not in (0, 1):
            raise DomainError('univariate noise model has regions 0..1, got %r' % (region,))
        return (gamma if region == 0 else 1.0 - gamma), None
    if region not in (0, 1, 2, 3):
        raise DomainError('bivariate noise model has regions 0..3, got %r' % (region,))
    p = 1.0 - gamma if region & 1 else gamma
    q = 1.0 - gamma if region & 2 else gamma
    return p, q


def noise_distribution(gamma: float, region: int, n_variables: int = 2) -> np.ndarray:
    """Outcome table of a region when Z1 and Z2 are independent with Pr(Z1=1)=p, Pr(Z2=1)=q.

    Region 0 expects (0,0), 1 expects (1,0), 2 expects (0,1) and 3 expects
    (1,1); gamma moves p and q from the expectation towards 0.5.
    """
    if not 0.0 <= gamma <= 0.5:
        raise DomainError('gamma must be in [0, 0.5], got %r' % (gamma,))
    if n_variables not in (1, 2):
        raise DomainError('noise model supports 1 or 2 variables, got %r' % (n_variables,))
    p, q = _noise_pq(gamma, region, n_variables)
    if n_variables == 1:
        return np.array([1.0 - p, p])
    return np.array([(1.0 - q) * (1.0 - p), (1.0 - q) * p, q * (1.0 - p), q * p])


class NoiseLocalDistribution(LocalDistribution):
    kind = 'noise'

    def __init__(self, gamma: float, n_variables: int = 2):
        K = 2 ** n_variables
        super().__init__([noise_distribution(gamma, k, n_variables) for k in range(K)], n_variables, dict(gamma=gamma))
        self.gamma = gamma

#----------------------------------------------------------------------------
# Interaction parameterisation.

def _interaction_table(p0: float, c1: float, c2: float, c3: float) -> np.ndarray:
    total = 4.0 * p0 + 2.0 * c1 + 2.0 * c2 + c3
    if abs(total - 1.0) > _TOL:
        raise DomainError('4*p0 + 2*c1 + 2*c2 + c3 = %r, must be 1' % total)
    t = np.array([p0, p0 + c1, p0 + c2, p0 + c1 + c2 + c3])
    if np.any(t < -_TOL) or np.any(t > 1.0 + _TOL):
        raise DomainError('effects (p0=%g, c1=%g, c2=%g, c3=%g) give probabilities %s outside [0, 1]' % (p0, c1, c2, c3, np.array2string(t)))
    return t


def interaction_effects(c3: float, region: int, p0: float = INTERACTION_P0) -> dnnlib.EasyDict:
    """Effect sizes (p0, c1, c2, c3) of a region of the interaction model.

    Region 0 is uniform, region 1 carries a Z1 effect, region 2 a Z2 effect
    and region 3 equal main effects c1 = c2 = (1 - 4 p0 - c3) / 4 next to the
    interaction c3.
    """
    if not 0.0 <= c3 <= 0.9:
        raise DomainError('c3 must be in [0, 0.9], got %r' % (c3,))
    if region == 0:
        return dnnlib.EasyDict(p0=0.25, c1=0.0, c2=0.0, c3=0.0)
    if region == 1:
        return dnnlib.EasyDict(p0=0.125, c1=0.25, c2=0.0, c3=0.0)
    if region == 2:
        return dnnlib.EasyDict(p0=0.125, c1=0.0, c2=0.25, c3=0.0)
    if region == 3:
        c = (1.0 - 4.0 * p0 - c3) / 4.0
        return dnnlib.EasyDict(p0=p0, c1=c, c2=c, c3=c3)
    raise DomainError('interaction model has regions 0..3, got %r' % (region,))


def interaction_distribution(c3: float, region: int, p0: float = INTERACTION_P0) -> np.ndarray:
    e = interaction_effects(c3, region, p0)
    return _interaction_table(e.p0, e.c1, e.c2, e.c3)


class InteractionLocalDistribution(LocalDistribution):
    kind = 'interaction'

    def __init__(self, c3: float, p0: float = INTERACTION_P0):
        super().__init__([interaction_distribution(c3, k, p0) for k in range(4)], 2, dict(c3=c3, p0=p0))
        self.c3 = c3
        self.effects = [interaction_effects(c3, k, p0) for k in range(4)]

#----------------------------------------------------------------------------

def _check_compatible(partition: RegionPartition, distribution: LocalDistribution) -> None:
    if partition.K > distribution.n_regions:
        raise DomainError('partition has %d regions but the distribution only %d' % (partition.K, distribution.n_regions))


def target_map(partition: RegionPartition, distribution: LocalDistribution, variable_index: int) -> BinaryMap:
    """Cells whose region has Pr(Z_var = 1) > 0.5."""
    _check_compatible(partition, distribution)
    marginals = np.array([distribution.marginal(k, variable_index) for k in range(partition.K)])
    mask = (marginals > 0.5)[partition.labels]
    return BinaryMap(partition.domain, mask, meta=dict(kind='target', variable_index=variable_index, layout=partition.name))

#----------------------------------------------------------------------------
