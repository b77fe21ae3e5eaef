"""Stationary isotropic covariance models with a nugget."""

import dataclasses
import math

import numpy as np

from geospm.errors import DomainError

FAMILIES = ('matern', 'gaussian')
MATERN_KAPPAS = (0.5, 1.5, 2.5)

#----------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class CovarianceModel:
    """C(h) = partial_sill * rho(h / range_phi) for h > 0, and partial_sill + nugget at h = 0.

    The Matérn family is limited to half-integer smoothness kappa, where it has
    closed forms in u = sqrt(2 kappa) h / range_phi; kappa = 0.5 is the
    exponential model exp(-h / range_phi). The Gaussian family is
    exp(-(h / range_phi)^2).
    """
    family: str = 'matern'
    partial_sill: float = 1.0
    range_phi: float = 1.0
    kappa: float = 1.5
    nugget: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError('family must be one of %s, got %r' % (', '.join(FAMILIES), self.family))
        if self.family == 'matern' and self.kappa not in MATERN_KAPPAS:
            raise DomainError('Matérn kappa must be one of %s, got %r' % (', '.join(str(k) for k in MATERN_KAPPAS), self.kappa))
        if not self.partial_sill >= 0:
            raise DomainError('partial_sill must be >= 0, got %r' % (self.partial_sill,))
        if not self.nugget >= 0:
            raise DomainError('nugget must be >= 0, got %r' % (self.nugget,))
        if not (self.range_phi > 0 and math.isfinite(self.range_phi)):
            raise DomainError('range_phi must be > 0, got %r' % (self.range_phi,))
        if not self.partial_sill + self.nugget > 0:
            raise DomainError('partial_sill + nugget must be > 0')

    @property
    def sill_total(self) -> float:
        return self.partial_sill + self.nugget

    def correlation(self, h) -> np.ndarray:
        """Sill-normalised correlation of the structured part; 1 at h = 0."""
        h = np.abs(np.asarray(h, dtype=np.float64))
        if self.family == 'gaussian':
            return np.exp(-(h / self.range_phi) ** 2)
        u = math.sqrt(2.0 * self.kappa) * h / self.range_phi
        if self.kappa == 0.5:
            return np.exp(-u)
        if self.kappa == 1.5:
            return (1.0 + u) * np.exp(-u)
        return (1.0 + u + u * u / 3.0) * np.exp(-u)

    def covariance(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        return self.partial_sill * self.correlation(h) + np.where(h == 0, self.nugget, 0.0)

    def variogram(self, h) -> np.ndarray:
        return self.sill_total - self.covariance(h)

    def describe(self) -> dict:
        return dataclasses.asdict(self)

#----------------------------------------------------------------------------
