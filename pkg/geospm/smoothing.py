"""Gaussian kernel rendering of point observations and per-scale response accumulation.

Every observation i contributes a kernel image k_i(v) over the grid. The GLM
only needs, per scale, the cross products X^T Y(v) = sum_i x_i k_i(v),
Y^T Y(v) = sum_i k_i(v)^2 and the density sum_i k_i(v); these are accumulated
in a single pass over the observations, so the N kernel images never exist
at once.
"""

import dataclasses
import math

import numpy as np

from typing import Iterator, List, Sequence, Tuple

import dnnlib
from dnnlib.thread_pool import map_ordered
from .errors import DomainError
from .grid_domain import SpatialDomain, Dataset, ScalarField, BinaryMap, world_to_cells

#----------------------------------------------------------------------------

# r^2 = 2 sigma^2 ln 20 encloses 95% of an isotropic bivariate normal.
_DIAMETER_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(20.0))

def sigma_from_diameter(d: float) -> float:
    """Standard deviation whose 95% iso-density circle has diameter d."""
    if not (d > 0 and math.isfinite(d)):
        raise DomainError('diameter must be > 0, got %r' % (d,))
    return float(d) / _DIAMETER_PER_SIGMA


def diameter_from_sigma(sigma: float) -> float:
    if not sigma > 0:
        raise DomainError('sigma must be > 0, got %r' % (sigma,))
    return float(sigma) * _DIAMETER_PER_SIGMA

#----------------------------------------------------------------------------

class SmoothingSchedule:
    """Strictly increasing list of smoothing diameters in world units."""

    def __init__(self, diameters: Sequence[float]):
        d = [float(v) for v in diameters]
        if len(d) == 0:
            raise DomainError('smoothing schedule is empty')
        for v in d:
            if not (v > 0 and math.isfinite(v)):
                raise DomainError('diameter must be > 0, got %r' % v)
        if any(b <= a for a, b in zip(d[:-1], d[1:])):
            raise DomainError('diameters must be strictly increasing, got %r' % (d,))
        self.diameters = tuple(d)

    @staticmethod
    def from_range(lo: float, hi: float, step: float) -> 'SmoothingSchedule':
        """Diameters lo, lo+step, ..., up to and including hi."""
        if step <= 0:
            raise DomainError('step must be > 0, got %r' % (step,))
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        if count < 1:
            raise DomainError('empty range %r:%r:%r' % (lo, hi, step))
        return SmoothingSchedule([lo + i * step for i in range(count)])

    def __len__(self):
        return len(self.diameters)

    def __iter__(self):
        return iter(self.diameters)

    def __repr__(self):
        return 'SmoothingSchedule(%s)' % ', '.join('%g' % d for d in self.diameters)


@dataclasses.dataclass(frozen=True)
class KernelSpec:
    """Isotropic Gaussian kernel; values beyond truncation_radius are zero."""
    sigma: float
    truncation_radius: float = None   # defaults to 4 sigma
    amplitude: float = 1.0            # overall multiplier, statistics are invariant to it

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError('sigma must be > 0, got %r' % (self.sigma,))
        if self.truncation_radius is None:
            object.__setattr__(self, 'truncation_radius', 4.0 * self.sigma)
        if self.truncation_radius < 3.0 * self.sigma:
            raise DomainError('truncation radius %r is below 3 sigma (%r)' % (self.truncation_radius, 3.0 * self.sigma))
        if not self.amplitude > 0:
            raise DomainError('amplitude must be > 0, got %r' % (self.amplitude,))

    @staticmethod
    def from_diameter(d: float, truncation_sigmas: float = 4.0) -> 'KernelSpec':
        sigma = sigma_from_diameter(d)
        return KernelSpec(sigma=sigma, truncation_radius=truncation_sigmas * sigma)

    @property
    def fwhm(self) -> float:
        return self.sigma * math.sqrt(8.0 * math.log(2.0))

#----------------------------------------------------------------------------
# Kernel patches: a window of the grid plus the kernel values on it.

class _Template:
    """Kernel values on a square of cell offsets around a cell centre, shared by snapped observations."""

    def __init__(self, kernel: KernelSpec, domain: SpatialDomain):
        self.m = int(math.ceil(kernel.truncation_radius / domain.cell_size))
        offsets = np.arange(-self.m, self.m + 1) * domain.cell_size
        dx, dy = np.meshgrid(offsets, offsets)
        self.values = _gaussian(dx * dx + dy * dy, kernel, domain)

    def patch(self, j: int, k: int, domain: SpatialDomain) -> Tuple[slice, slice, np.ndarray]:
        """Window (rows, cols) and values for the cell with 0-based column j and row k."""
        m = self.m
        r0, r1 = max(k - m, 0), min(k + m + 1, domain.height)
        c0, c1 = max(j - m, 0), min(j + m + 1, domain.width)
        vals = self.values[r0 - (k - m):r1 - (k - m), c0 - (j - m):c1 - (j - m)]
        return slice(r0, r1), slice(c0, c1), vals


def _gaussian(r2: np.ndarray, kernel: KernelSpec, domain: SpatialDomain) -> np.ndarray:
    s2 = kernel.sigma * kernel.sigma
    vals = kernel.amplitude * domain.cell_area / (2.0 * math.pi * s2) * np.exp(-r2 / (2.0 * s2))
    vals[r2 > kernel.truncation_radius * kernel.truncation_radius] = 0.0
    return vals


def _exact_patch(x: float, y: float, kernel: KernelSpec, domain: SpatialDomain) -> Tuple[slice, slice, np.ndarray]:
    cs = domain.cell_size
    R = kernel.truncation_radius
    fx = (x - domain.origin[0]) / cs
    fy = (y - domain.origin[1]) / cs
    c0 = max(int(math.floor(fx - R / cs - 0.5)), 0)
    c1 = min(int(math.ceil(fx + R / cs + 0.5)), domain.width)
    r0 = max(int(math.floor(fy - R / cs - 0.5)), 0)
    r1 = min(int(math.ceil(fy + R / cs + 0.5)), domain.height)
    cx = domain.origin[0] + (np.arange(c0, c1) + 0.5) * cs - x
    cy = domain.origin[1] + (np.arange(r0, r1) + 0.5) * cs - y
    dx, dy = np.meshgrid(cx, cy)
    return slice(r0, r1), slice(c0, c1), _gaussian(dx * dx + dy * dy, kernel, domain)


def iter_kernel_patches(locations: np.ndarray, kernel: KernelSpec, domain: SpatialDomain, congruent: bool = False) -> Iterator[Tuple[int, slice, slice, np.ndarray]]:
    """Yield (row index, grid rows, grid cols, kernel values) for each location.

    In congruent mode each location is snapped to the centre of its cell and
    the kernel is cut from one shared template.
    """
    locations = np.asarray(locations, dtype=np.float64).reshape(-1, 2)
    if congruent:
        js, ks = world_to_cells(domain, locations)
        template = _Template(kernel, domain)
        for i, (j, k) in enumerate(zip(js, ks)):
            rows, cols, vals = template.patch(int(j) - 1, int(k) - 1, domain)
            yield i, rows, cols, vals
    else:
        world_to_cells(domain, locations) # domain check
        for i, (x, y) in enumerate(locations):
            rows, cols, vals = _exact_patch(float(x), float(y), kernel, domain)
            yield i, rows, cols, vals


def render_kernel(obs_location: Sequence[float], kernel: KernelSpec, domain: SpatialDomain, congruent: bool = False) -> ScalarField:
    """The kernel of a single observation as a field: cell-area-weighted Gaussian density at cell centres."""
    out = np.zeros(domain.shape, dtype=np.float64)
    for _i, rows, cols, vals in iter_kernel_patches(np.asarray([obs_location], dtype=np.float64), kernel, domain, congruent):
        out[rows, cols] = vals
    return ScalarField(domain, out)

#----------------------------------------------------------------------------

class ResponseAccumulators:
    """Per-scale streaming sums over observations.

    Attributes:
        xty: (scales, columns, b, a) sums of x_ip * k_i(v).
        ksq: (scales, b, a) sums of k_i(v)^2.
        ksum: (scales, b, a) sums of k_i(v), the density fields.
    """

    def __init__(self, domain: SpatialDomain, schedule: SmoothingSchedule, kernels: List[KernelSpec], column_names: Sequence[str], n: int, congruent: bool):
        self.domain = domain
        self.schedule = schedule
        self.kernels = list(kernels)
        self.column_names = tuple(column_names)
        self.n = n
        self.congruent = congruent
        L, C = len(self.kernels), len(self.column_names)
        self.xty = np.zeros((L, C) + domain.shape, dtype=np.float64)
        self.ksq = np.zeros((L,) + domain.shape, dtype=np.float64)
        self.ksum = np.zeros((L,) + domain.shape, dtype=np.float64)

    @property
    def n_scales(self) -> int:
        return len(self.kernels)

    def merge(self, other: 'ResponseAccumulators') -> None:
        """Add another partial accumulator built over different observations."""
        assert other.domain == self.domain and other.column_names == self.column_names
        self.xty += other.xty
        self.ksq += other.ksq
        self.ksum += other.ksum

    def density(self, scale_index: int = 0) -> ScalarField:
        return ScalarField(self.domain, self.ksum[scale_index])

    def column_field(self, scale_index: int, column: int) -> ScalarField:
        return ScalarField(self.domain, self.xty[scale_index, column])


def _accumulate_chunk(locations, X, domain, schedule, kernels, names, congruent):
    acc = ResponseAccumulators(domain, schedule, kernels, names, X.shape[0], congruent)
    for s, kernel in enumerate(kernels):
        xty, ksq, ksum = acc.xty[s], acc.ksq[s], acc.ksum[s]
        for i, rows, cols, vals in iter_kernel_patches(locations, kernel, domain, congruent):
            xty[:, rows, cols] += X[i][:, None, None] * vals
            ksq[rows, cols] += vals * vals
            ksum[rows, cols] += vals
    return acc


def accumulate_responses(dataset: Dataset, design, schedule: SmoothingSchedule, congruent: bool = False, truncation_sigmas: float = 4.0, amplitude: float = 1.0, num_workers: int = 1, chunk_size: int = 2000) -> ResponseAccumulators:
    """Accumulate X^T Y, sum k^2 and sum k over all observations, for every scale in the schedule.

    design is any object with an (N, C) `matrix` and C `names` (see glm.DesignMatrix).
    Observations are split into fixed chunks; chunk results are merged in
    chunk order so the outcome does not depend on num_workers.
    """
    if schedule is None or len(schedule) == 0:
        raise DomainError('smoothing schedule is empty')
    X = np.asarray(design.matrix, dtype=np.float64)
    if X.shape[0] != dataset.n:
        raise DomainError('design has %d rows but dataset has %d observations' % (X.shape[0], dataset.n))
    kernels = []
    for d in schedule:
        k = KernelSpec.from_diameter(d, truncation_sigmas)
        kernels.append(dataclasses.replace(k, amplitude=amplitude))

    starts = list(range(0, max(dataset.n, 1), chunk_size))
    def work(start):
        stop = min(start + chunk_size, dataset.n)
        return _accumulate_chunk(dataset.locations[start:stop], X[start:stop], dataset.domain, schedule, kernels, design.names, congruent)
    parts = map_ordered(work, starts, num_workers)

    acc = parts[0]
    for part in parts[1:]:
        acc.merge(part)
    acc.n = dataset.n
    return acc

#----------------------------------------------------------------------------

def density_mask(acc: ResponseAccumulators, fraction: float, scale_index: int = 0) -> BinaryMap:
    """Cells whose density reaches the given fraction of its maximum."""
    if not (0.0 < fraction < 1.0):
        raise DomainError('mask fraction must be in (0, 1), got %r' % (fraction,))
    dens = acc.ksum[scale_index]
    peak = float(dens.max())
    if not peak > 0:
        raise DomainError('density field is zero everywhere: no observations were rendered')
    return BinaryMap(acc.domain, dens >= fraction * peak, meta=dnnlib.EasyDict(kind='density_mask', fraction=fraction, diameter=acc.schedule.diameters[scale_index]))

#----------------------------------------------------------------------------
