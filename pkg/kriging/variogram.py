"""Method-of-moments variogram and its weighted least-squares model fit."""

import numpy as np
import scipy.optimize
import scipy.spatial.distance

from typing import Sequence

import dnnlib
from geospm.errors import ConvergenceError, DomainError
from geospm.grid_domain import Dataset
from .covariance import CovarianceModel

RANGE_STARTS = (0.05, 0.1, 0.25, 0.5, 1.0)

#----------------------------------------------------------------------------

class EmpiricalVariogram:
    """Binned semivariances: mean lag h, gamma(h) and pair count n_h per non-empty bin."""

    def __init__(self, lags: Sequence[float], gamma: Sequence[float], counts: Sequence[int], max_lag: float):
        self.lags = np.asarray(lags, dtype=np.float64)
        self.gamma = np.asarray(gamma, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.max_lag = float(max_lag)
        if np.any(np.diff(self.lags) <= 0):
            raise DomainError('variogram lags must be increasing')
        if np.any(self.counts < 1):
            raise DomainError('every variogram bin needs at least one pair')

    @property
    def n_bins(self) -> int:
        return self.lags.shape[0]

    def __iter__(self):
        return iter(zip(self.lags.tolist(), self.gamma.tolist(), self.counts.tolist()))

    def describe(self) -> dict:
        return dict(max_lag=self.max_lag, lags=self.lags.tolist(), gamma=self.gamma.tolist(), counts=self.counts.tolist())


def empirical_variogram(dataset: Dataset, variable: str, n_bins: int = 20, max_lag: float = None) -> EmpiricalVariogram:
    """gamma(h) = sum (y_i - y_j)^2 / (2 n_h) over pairs binned by distance into [0, max_lag].

    max_lag defaults to the largest pairwise distance. Bins without pairs are
    dropped.
    """
    if dataset.n < 2:
        raise DomainError('variogram needs at least 2 observations, got %d' % dataset.n)
    if n_bins < 1:
        raise DomainError('n_bins must be >= 1, got %r' % (n_bins,))
    y = dataset.column(variable)
    h = scipy.spatial.distance.pdist(dataset.locations)
    sq = scipy.spatial.distance.pdist(y[:, None], 'sqeuclidean')
    hmax = float(h.max())
    if hmax == 0.0:
        raise DomainError('all %d observations are coincident' % dataset.n)
    if max_lag is None:
        max_lag = hmax
    if not max_lag > 0:
        raise DomainError('max_lag must be > 0, got %r' % (max_lag,))

    keep = h <= max_lag
    h, sq = h[keep], sq[keep]
    idx = np.minimum((h / max_lag * n_bins).astype(np.int64), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    lag_sum = np.bincount(idx, weights=h, minlength=n_bins)
    sq_sum = np.bincount(idx, weights=sq, minlength=n_bins)
    used = counts > 0
    return EmpiricalVariogram(lag_sum[used] / counts[used], sq_sum[used] / (2.0 * counts[used]), counts[used], max_lag)

#----------------------------------------------------------------------------

def _model(params, family, kappa) -> CovarianceModel:
    nugget, psill, phi = params
    return CovarianceModel(family=family, partial_sill=max(psill, 0.0), range_phi=phi, kappa=kappa, nugget=max(nugget, 0.0))


def fit_covariance(ev: EmpiricalVariogram, family: str = 'matern', kappa: float = 1.5) -> CovarianceModel:
    """Fit (nugget, partial_sill, range) by least squares with weights n_h / h^2.

    The fit is started from a fixed set of ranges (fractions of the largest
    lag) and the lowest-loss solution is kept. Bins at lag 0 carry no weight
    and are skipped.
    """
    CovarianceModel(family=family, kappa=kappa)  # validates family and kappa
    usable = ev.lags > 0
    h, g, n = ev.lags[usable], ev.gamma[usable], ev.counts[usable]
    if h.shape[0] < 3:
        raise DomainError('need at least 3 usable variogram bins, got %d' % h.shape[0])
    gmax = float(g.max())
    if not gmax > 0:
        raise DomainError('variable has no spatial variation (all semivariances are 0)')

    w = n / (h * h)
    sw = np.sqrt(w / w.sum())
    hmax = float(h.max())
    lower = [0.0, 0.0, float(h.min())]
    upper = [10.0 * gmax, 10.0 * gmax, 10.0 * hmax]

    def residuals(params):
        nugget, psill, phi = params
        model = psill * (1.0 - _model((0.0, 1.0, phi), family, kappa).correlation(h)) + nugget
        return sw * (model - g) / gmax

    best = None
    diagnostics = []
    for frac in RANGE_STARTS:
        phi0 = min(max(frac * hmax, lower[2] * 1.01), upper[2] * 0.99)
        x0 = [0.5 * float(g[0]), max(gmax - 0.5 * float(g[0]), 1e-3 * gmax), phi0]
        try:
            res = scipy.optimize.least_squares(residuals, x0, bounds=(lower, upper), x_scale=[gmax, gmax, hmax], method='trf')
        except (ValueError, FloatingPointError) as e:
            diagnostics.append(dnnlib.EasyDict(start=phi0, status=-1, message=str(e)))
            continue
        diagnostics.append(dnnlib.EasyDict(start=phi0, status=int(res.status), cost=float(res.cost), message=res.message))
        if res.status > 0 and np.isfinite(res.cost) and (best is None or res.cost < best.cost):
            best = res
    if best is None:
        raise ConvergenceError('variogram fit failed from all %d starting ranges' % len(RANGE_STARTS), diagnostics)
    nugget, psill, phi = best.x
    if psill + nugget <= 0:
        raise ConvergenceError('variogram fit collapsed to a zero sill', diagnostics)
    return _model((nugget, psill, phi), family, kappa)

#----------------------------------------------------------------------------
