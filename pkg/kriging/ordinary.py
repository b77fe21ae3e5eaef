"""Ordinary kriging over the whole grid with a global search window."""

import time

import numpy as np
import scipy.linalg
import scipy.spatial.distance
import scipy.stats

import dnnlib
from dnnlib.thread_pool import map_ordered
from geospm.errors import DomainError
from geospm.grid_domain import SpatialDomain, Dataset, ScalarField, BinaryMap, world_to_cells
from .covariance import CovarianceModel
from .variogram import empirical_variogram, fit_covariance

MAX_OBSERVATIONS = 5000
NULL_MEAN = 0.5

#----------------------------------------------------------------------------
# Coincident observations.

def coincidence_policy(dataset: Dataset, policy: str = 'jitter') -> Dataset:
    """Deal with observations sharing a location.

    'jitter' (or 'jitter-assumed') requires every location to be distinct;
    'average' merges each group of identical locations into one observation
    carrying the group's mean values, in order of first occurrence.
    """
    if policy not in ('jitter', 'jitter-assumed', 'average'):
        raise DomainError('coincidence policy must be jitter or average, got %r' % (policy,))
    uniq, first, inverse, counts = np.unique(dataset.locations, axis=0, return_index=True, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.all(counts == 1):
        return dataset
    if policy != 'average':
        groups = []
        for g in np.flatnonzero(counts > 1)[:10]:
            groups.append('(%s)' % ', '.join(str(i) for i in np.flatnonzero(inverse == g)))
        raise DomainError('%d observations share a location with another; coincident rows: %s' % (int(np.sum(counts[counts > 1])), ' '.join(groups)))

    sums = np.zeros((uniq.shape[0], dataset.p))
    np.add.at(sums, inverse, dataset.values)
    means = sums / counts[:, None]
    order = np.argsort(first, kind='stable')
    return Dataset(dataset.domain, dataset.variable_names, uniq[order], means[order])


def snap_to_cells(dataset: Dataset) -> Dataset:
    """Move every observation to the centre of its cell."""
    d = dataset.domain
    j, k = world_to_cells(d, dataset.locations)
    centres = np.stack([d.origin[0] + (j - 0.5) * d.cell_size, d.origin[1] + (k - 0.5) * d.cell_size], axis=1)
    return Dataset(d, dataset.variable_names, centres, dataset.values)

#----------------------------------------------------------------------------

class KrigingResult:
    """Predicted mean and prediction variance per cell, with the model that produced them."""

    def __init__(self, mean_field: ScalarField, variance_field: ScalarField, model: CovarianceModel, flags=None, clamped_cells: int = 0, weight_sum_error: float = 0.0):
        self.mean_field = mean_field
        self.variance_field = variance_field
        self.model = model
        self.flags = list(flags or [])
        self.clamped_cells = clamped_cells
        self.weight_sum_error = weight_sum_error

    def describe(self) -> dict:
        return dict(model=self.model.describe(), flags=list(self.flags), clamped_cells=self.clamped_cells, weight_sum_error=self.weight_sum_error)


def krige(dataset: Dataset, variable: str, model: CovarianceModel, domain: SpatialDomain = None, chunk_size: int = 1024, num_workers: int = 1) -> KrigingResult:
    """Predict the variable at every cell centre by ordinary kriging.

    The (N+1) x (N+1) system [C 1; 1' 0] [lambda; mu] = [c; 1] is factorised
    once and solved for blocks of cells. Prediction is lambda' y and the
    variance C(0) - lambda' c - mu, clamped at zero.
    """
    domain = domain if domain is not None else dataset.domain
    N = dataset.n
    if N < 1:
        raise DomainError('kriging needs at least one observation')
    if N > MAX_OBSERVATIONS:
        raise DomainError('N = %d exceeds the global-window limit of %d observations; subsample the data' % (N, MAX_OBSERVATIONS))
    y = dataset.column(variable)
    locs = dataset.locations

    A = np.ones((N + 1, N + 1))
    A[:N, :N] = model.covariance(scipy.spatial.distance.squareform(scipy.spatial.distance.pdist(locs)))
    np.fill_diagonal(A[:N, :N], model.sill_total)
    A[N, N] = 0.0
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    if not np.all(diag > 1e-12 * max(1.0, float(diag.max()))):
        raise DomainError('kriging system is singular; use a nugget or remove coincident observations')

    cx, cy = domain.center_grids()
    targets = np.stack([cx.ravel(), cy.ravel()], axis=1)
    starts = list(range(0, targets.shape[0], chunk_size))

    def solve(start):
        t = targets[start:start + chunk_size]
        c = model.covariance(scipy.spatial.distance.cdist(locs, t))
        rhs = np.vstack([c, np.ones((1, t.shape[0]))])
        sol = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
        lam, mu = sol[:N], sol[N]
        mean = lam.T @ y
        var = model.sill_total - np.sum(lam * c, axis=0) - mu
        return mean, var, float(np.max(np.abs(np.sum(lam, axis=0) - 1.0)))

    parts = map_ordered(solve, starts, num_workers)
    mean = np.concatenate([p[0] for p in parts])
    var = np.concatenate([p[1] for p in parts])
    weight_err = max(p[2] for p in parts)

    flags = []
    clamped = int(np.count_nonzero(var < 0))
    if clamped:
        flags.append('clamped_variance')
        print('Warning: %d cell(s) had negative kriging variance (min %.3g); clamped to 0.' % (clamped, float(var.min())))
    var = np.maximum(var, 0.0)
    meta = dict(variable=variable, method='kriging')
    return KrigingResult(ScalarField(domain, mean.reshape(domain.shape), meta=dict(meta, kind='kriging_mean')),
                         ScalarField(domain, var.reshape(domain.shape), meta=dict(meta, kind='kriging_variance')),
                         model, flags, clamped, weight_err)


def kriging_significance(result: KrigingResult, alpha: float = 0.05) -> BinaryMap:
    """Cells where (y_hat - 0.5) / sigma_hat reaches the uncorrected upper-tail normal critical value.

    Cells with zero prediction variance cannot be tested; they are left out
    and counted in the map's meta.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError('alpha must be in (0, 1), got %r' % (alpha,))
    crit = float(scipy.stats.norm.isf(alpha))
    mean = result.mean_field.values
    sd = np.sqrt(result.variance_field.values)
    testable = sd > 0
    z = np.zeros_like(mean)
    z[testable] = (mean[testable] - NULL_MEAN) / sd[testable]
    mask = testable & (z >= crit)
    excluded = int(np.count_nonzero(~testable))
    meta = dnnlib.EasyDict(kind='kriging_significance', alpha=alpha, critical=crit, excluded_cells=excluded,
                           variable=result.mean_field.meta.get('variable'), method='kriging', tail='pos')
    if excluded:
        meta.flags = ['zero_variance']
    return BinaryMap(result.mean_field.domain, mask, meta=meta)

#----------------------------------------------------------------------------

def default_kriging_options(**overrides) -> dnnlib.EasyDict:
    opts = dnnlib.EasyDict(family='matern', kappa=1.5, coincidence='jitter', alpha=0.05, n_bins=20, max_lag_fraction=0.5, num_workers=1, verbose=True)
    for key, value in overrides.items():
        if key not in opts:
            raise DomainError('unknown kriging option %r' % key)
        opts[key] = value
    return opts


def run_kriging(dataset: Dataset, variable: str, options: dnnlib.EasyDict = None) -> dnnlib.EasyDict:
    """Coincidence handling, variogram, covariance fit, prediction and z-test for one variable.

    With coincidence='average' the observations are first moved to their cell
    centres and merged per cell.
    """
    opts = options if options is not None else default_kriging_options()
    log = print if opts.verbose else (lambda *_args, **_kw: None)
    t0 = time.time()
    data = dataset
    if opts.coincidence == 'average':
        data = coincidence_policy(snap_to_cells(dataset), 'average')
    else:
        data = coincidence_policy(dataset, opts.coincidence)

    d = dataset.domain
    diag = float(np.hypot(d.width, d.height)) * d.cell_size
    ev = empirical_variogram(data, variable, n_bins=opts.n_bins, max_lag=opts.max_lag_fraction * diag)
    model = fit_covariance(ev, opts.family, opts.kappa)
    log('Kriging %s: N=%d, %s' % (variable, data.n, ', '.join('%s=%.4g' % (k, v) if isinstance(v, float) else '%s=%s' % (k, v) for k, v in model.describe().items())))
    result = krige(data, variable, model, d, num_workers=opts.num_workers)
    sig = kriging_significance(result, opts.alpha)
    log('  %d significant cell(s) in %s' % (sig.count, dnnlib.util.format_time(time.time() - t0)))
    return dnnlib.EasyDict(variogram=ev, model=model, result=result, significance=sig, n_used=data.n)

#----------------------------------------------------------------------------
