"""Random field theory thresholds for t-maps and the resulting significance maps.

The search region is two dimensional and thresholds are computed per
smoothing scale. The expected Euler characteristic of the excursion set above
u is sum_d R_d rho_d(u), with resel counts R_0..R_2 of the search mask and the
t-field EC densities rho_d in the SPM convention.
"""

import dataclasses
import math

import numpy as np
import scipy.optimize
import scipy.special
import scipy.stats

from typing import List, Sequence, Tuple

import dnnlib
from .errors import DomainError, ConvergenceError
from .glm import Tail, GlmFit, DesignMatrix
from .grid_domain import SpatialDomain, ScalarField, BinaryMap, Dataset, require_same_domain
from .smoothing import KernelSpec, ResponseAccumulators, iter_kernel_patches

_FOUR_LN2 = 4.0 * math.log(2.0)

#----------------------------------------------------------------------------

@dataclasses.dataclass
class SmoothnessEstimate:
    fwhm: Tuple[float, float]               # world units, per axis
    resels: Tuple[float, float, float]      # R0, R1, R2
    source: str = 'analytic'                # 'analytic' or 'residual'
    flags: List[str] = dataclasses.field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return 'degenerate' in self.flags

    def describe(self) -> dict:
        return dict(fwhm=list(self.fwhm), resels=list(self.resels), source=self.source, flags=list(self.flags))


class Correction:
    RFT = 'rft'
    BONFERRONI = 'bonferroni'
    MIN = 'min'
    ALL = (RFT, BONFERRONI, MIN)


@dataclasses.dataclass(frozen=True)
class ThresholdSpec:
    alpha: float = 0.05
    tail: Tail = Tail.POSITIVE
    correction: str = Correction.MIN

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError('alpha must be in (0, 1), got %r' % (self.alpha,))
        object.__setattr__(self, 'tail', Tail.parse(self.tail))
        correction = {'min-of-both': Correction.MIN}.get(self.correction, self.correction)
        if correction not in Correction.ALL:
            raise DomainError('unknown correction %r (expected one of %s)' % (self.correction, ', '.join(Correction.ALL)))
        object.__setattr__(self, 'correction', correction)

    @property
    def tail_alpha(self) -> float:
        return self.alpha / 2.0 if self.tail == Tail.TWO else self.alpha

#----------------------------------------------------------------------------
# Search region geometry.

def euler_characteristic(mask: np.ndarray) -> int:
    """EC of the union of closed unit squares for the set cells: vertices - edges + faces."""
    m = np.pad(np.asarray(mask, dtype=bool), 1)
    faces = int(np.count_nonzero(m))
    vertices = int(np.count_nonzero(m[:-1, :-1] | m[1:, :-1] | m[:-1, 1:] | m[1:, 1:]))
    edges_x = int(np.count_nonzero(m[:-1, 1:-1] | m[1:, 1:-1]))    # edges parallel to x
    edges_y = int(np.count_nonzero(m[1:-1, :-1] | m[1:-1, 1:]))    # edges parallel to y
    return vertices - (edges_x + edges_y) + faces


def boundary_lengths(mask: np.ndarray, cell_size: float) -> Tuple[float, float]:
    """Total boundary length parallel to x and parallel to y, in world units."""
    m = np.pad(np.asarray(mask, dtype=bool), 1)
    along_x = np.count_nonzero(m[1:, 1:-1] != m[:-1, 1:-1])
    along_y = np.count_nonzero(m[1:-1, 1:] != m[1:-1, :-1])
    return along_x * cell_size, along_y * cell_size


def resel_counts(mask: BinaryMap, fwhm: Sequence[float]) -> Tuple[float, float, float]:
    """R0 = EC of the mask, R1 = half its boundary length and R2 its area, both in FWHM units."""
    fx, fy = float(fwhm[0]), float(fwhm[1])
    m = mask.mask
    r0 = float(euler_characteristic(m))
    if not (math.isfinite(fx) and math.isfinite(fy)):
        return r0, 0.0, 0.0
    lx, ly = boundary_lengths(m, mask.domain.cell_size)
    r1 = 0.5 * (lx / fx + ly / fy)
    r2 = np.count_nonzero(m) * mask.domain.cell_area / (fx * fy)
    return r0, float(r1), float(r2)


def _require_mask(mask: BinaryMap) -> None:
    if mask.count == 0:
        raise DomainError('search mask is empty')

#----------------------------------------------------------------------------
# Smoothness.

def analytic_smoothness(kernel: KernelSpec, domain: SpatialDomain, mask: BinaryMap) -> SmoothnessEstimate:
    """Smoothness implied by the rendering kernel: FWHM = sigma * sqrt(8 ln 2) on both axes."""
    if mask.domain != domain:
        raise DomainError('mask domain does not match')
    _require_mask(mask)
    f = kernel.fwhm
    return SmoothnessEstimate(fwhm=(f, f), resels=resel_counts(mask, (f, f)), source='analytic')


def _smoothness_from_moments(ss: np.ndarray, cx: np.ndarray, cy: np.ndarray, mask: BinaryMap) -> SmoothnessEstimate:
    """Per-axis FWHM from residual sums of squares and lag-one cross products.

    The mean squared first difference of residuals normalised to unit sum of
    squares, lambda, gives the lag-one correlation 1 - lambda/2, which is
    inverted under a Gaussian autocorrelation. For smooth fields this is the
    usual sqrt(4 ln 2 / lambda) cell widths.
    """
    _require_mask(mask)
    m = mask.mask & (ss > 0)
    dx = mask.domain.cell_size
    flags = []
    fwhm = []
    for c, valid, name in ((cx, m[:, :-1] & m[:, 1:], 'x'), (cy, m[:-1, :] & m[1:, :], 'y')):
        if name == 'x':
            denom = np.sqrt(ss[:, :-1] * ss[:, 1:])
        else:
            denom = np.sqrt(ss[:-1, :] * ss[1:, :])
        if not np.any(valid):
            fwhm.append(math.inf)
            continue
        rho = np.clip(c[valid] / denom[valid], -1.0, 1.0)
        lam = float(np.mean(2.0 - 2.0 * rho))
        r = 1.0 - lam / 2.0
        if lam <= 1e-12:
            fwhm.append(math.inf)
        elif r > 0:
            fwhm.append(dx * math.sqrt(-2.0 * math.log(2.0) / math.log(r)))
        else:
            if 'rough' not in flags:
                flags.append('rough')
            fwhm.append(dx * math.sqrt(_FOUR_LN2 / lam))
    if not all(math.isfinite(f) for f in fwhm):
        flags.append('degenerate')
        print('Warning: residuals show no spatial variation; smoothness is degenerate (infinite FWHM).')
    return SmoothnessEstimate(fwhm=(fwhm[0], fwhm[1]), resels=resel_counts(mask, fwhm), source='residual', flags=flags)


def residual_smoothness(standardized_residual_fields, mask: BinaryMap) -> SmoothnessEstimate:
    """Estimate smoothness from a stack of residual images (list of ScalarField or array of shape (n, b, a))."""
    if isinstance(standardized_residual_fields, np.ndarray):
        e = np.asarray(standardized_residual_fields, dtype=np.float64)
    else:
        fields = list(standardized_residual_fields)
        if fields:
            require_same_domain(mask, *fields)
        e = np.stack([f.values for f in fields]) if fields else np.zeros((0,) + mask.domain.shape)
    if e.ndim != 3 or e.shape[1:] != mask.domain.shape:
        raise DomainError('residual stack has shape %r, expected (n,) + %r' % (e.shape, mask.domain.shape))
    if e.shape[0] < 3:
        raise DomainError('need at least 3 residual images, got %d' % e.shape[0])
    ss = np.sum(e * e, axis=0)
    cx = np.sum(e[:, :, :-1] * e[:, :, 1:], axis=0)
    cy = np.sum(e[:, :-1, :] * e[:, 1:, :], axis=0)
    return _smoothness_from_moments(ss, cx, cy, mask)


def residual_smoothness_streaming(dataset: Dataset, design: DesignMatrix, acc: ResponseAccumulators, fit: GlmFit, scale_index: int, mask: BinaryMap) -> SmoothnessEstimate:
    """Residual smoothness without materialising residual images.

    A second pass over the observations collects the lag-one kernel products
    sum_i k_i(v) k_i(v+1); together with the first-pass sums and the fitted
    coefficients these give every residual moment the estimator needs.
    """
    if dataset.n < 3:
        raise DomainError('need at least 3 residual images, got %d' % dataset.n)
    domain = acc.domain
    kernel = acc.kernels[scale_index]
    kkx = np.zeros((domain.height, domain.width - 1))
    kky = np.zeros((domain.height - 1, domain.width))
    for _i, rows, cols, vals in iter_kernel_patches(dataset.locations, kernel, domain, acc.congruent):
        kkx[rows, cols.start:cols.stop - 1] += vals[:, :-1] * vals[:, 1:]
        kky[rows.start:rows.stop - 1, cols] += vals[:-1, :] * vals[1:, :]

    G = design.matrix.T @ design.matrix
    beta = fit.beta
    xty = acc.xty[scale_index]
    Gb = np.tensordot(G, beta, axes=([1], [0]))
    ss = acc.ksq[scale_index] - 2.0 * np.sum(beta * xty, axis=0) + np.sum(beta * Gb, axis=0)
    ss = np.maximum(ss, 0.0)
    cx = kkx - np.sum(beta[:, :, :-1] * xty[:, :, 1:], axis=0) - np.sum(beta[:, :, 1:] * xty[:, :, :-1], axis=0) + np.sum(beta[:, :, :-1] * Gb[:, :, 1:], axis=0)
    cy = kky - np.sum(beta[:, :-1, :] * xty[:, 1:, :], axis=0) - np.sum(beta[:, 1:, :] * xty[:, :-1, :], axis=0) + np.sum(beta[:, :-1, :] * Gb[:, 1:, :], axis=0)
    return _smoothness_from_moments(ss, cx, cy, mask)

#----------------------------------------------------------------------------
# EC densities and thresholds.

def ec_density_t(t, nu: int, dim: int):
    """EC density of a t-field with nu degrees of freedom in dimension 0, 1 or 2 (unit FWHM)."""
    if nu < 1:
        raise DomainError('degrees of freedom must be >= 1, got %r' % (nu,))
    t = np.asarray(t, dtype=np.float64)
    c = (1.0 + t * t / nu) ** ((1.0 - nu) / 2.0)
    if dim == 0:
        out = scipy.stats.t.sf(t, nu)
    elif dim == 1:
        out = math.sqrt(_FOUR_LN2) / (2.0 * math.pi) * c
    elif dim == 2:
        g = math.exp(scipy.special.gammaln((nu + 1.0) / 2.0) - scipy.special.gammaln(nu / 2.0))
        out = _FOUR_LN2 / (2.0 * math.pi) ** 1.5 * c * t * g / math.sqrt(nu / 2.0)
    else:
        raise DomainError('EC density dimension must be 0, 1 or 2, got %r' % (dim,))
    return float(out) if np.ndim(out) == 0 else out


def expected_ec(u, nu: int, resels: Sequence[float]):
    """Expected Euler characteristic of the excursion set above u."""
    return sum(r * ec_density_t(u, nu, d) for d, r in enumerate(resels))


def _rft_threshold(alpha: float, nu: int, resels: Sequence[float]) -> float:
    lo = float(scipy.stats.t.isf(alpha, nu))
    hi = 100.0
    f = lambda u: expected_ec(u, nu, resels) - alpha
    if f(lo) <= 0:
        return lo
    if f(hi) > 0:
        raise ConvergenceError('no RFT threshold in [%g, %g] (nu=%d, resels=%r)' % (lo, hi, nu, tuple(resels)),
                               diagnostics=dict(nu=nu, resels=list(resels), alpha=alpha, eec_at_hi=f(hi) + alpha))
    return float(scipy.optimize.bisect(f, lo, hi, xtol=1e-10, maxiter=200))


def _bonferroni_threshold(alpha: float, nu: int, n_cells: int) -> float:
    return float(scipy.stats.t.isf(alpha / n_cells, nu))


def threshold_record(spec: ThresholdSpec, nu: int, sm: SmoothnessEstimate, n_cells: int) -> dnnlib.EasyDict:
    """All candidate thresholds plus the one the correction selects."""
    if n_cells < 1:
        raise DomainError('search region has no cells')
    if nu < 1:
        raise DomainError('degrees of freedom must be >= 1, got %r' % (nu,))
    a = spec.tail_alpha
    rec = dnnlib.EasyDict(alpha=spec.alpha, tail=spec.tail.value, correction=spec.correction, df=nu,
                          n_cells=n_cells, smoothness=sm.describe(), rft=None, bonferroni=None, flags=[])
    if spec.correction in (Correction.RFT, Correction.MIN):
        try:
            rec.rft = _rft_threshold(a, nu, sm.resels)
        except ConvergenceError:
            if spec.correction == Correction.RFT:
                raise
            rec.flags.append('rft_unavailable')
    if spec.correction in (Correction.BONFERRONI, Correction.MIN):
        rec.bonferroni = _bonferroni_threshold(a, nu, n_cells)
    candidates = [v for v in (rec.rft, rec.bonferroni) if v is not None]
    rec.value = min(candidates)
    rec.method = Correction.RFT if rec.value == rec.rft else Correction.BONFERRONI
    return rec


def fwe_threshold(spec: ThresholdSpec, nu: int, sm: SmoothnessEstimate, n_cells: int) -> float:
    """Voxel-level FWE threshold on t (on |t| for two-tailed tests)."""
    return threshold_record(spec, nu, sm, n_cells).value


def threshold_map(t_field: ScalarField, threshold: float, tail, mask: BinaryMap) -> BinaryMap:
    """Cells of the mask where t passes the threshold in the tested direction."""
    if not threshold > 0:
        raise DomainError('threshold must be > 0, got %r' % (threshold,))
    require_same_domain(t_field, mask)
    tail = Tail.parse(tail)
    t = t_field.values
    if tail == Tail.POSITIVE:
        hit = t >= threshold
    elif tail == Tail.NEGATIVE:
        hit = t <= -threshold
    else:
        hit = np.abs(t) >= threshold
    meta = dnnlib.EasyDict(kind='significance', threshold=threshold, tail=tail.value)
    for key in ('column', 'contrast', 'diameter', 'variable', 'model'):
        if key in t_field.meta:
            meta[key] = t_field.meta[key]
    return BinaryMap(t_field.domain, mask.mask & hit, meta=meta)

#----------------------------------------------------------------------------
