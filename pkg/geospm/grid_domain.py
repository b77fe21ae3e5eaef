"""Rectangular spatial domain, its grid of cells, and the observation model.

Cells are addressed with 1-based (j, k) indices, j along x (1..a) and k along
y (1..b). Arrays holding one value per cell have shape (b, a) and are indexed
[k - 1, j - 1], so rows run along y and the storage order is row-major with
x varying fastest.
"""

import dataclasses
import math

import numpy as np

from typing import Any, List, Sequence, Tuple

import dnnlib
from .errors import DomainError, DatasetValidationError

#----------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class SpatialDomain:
    """The half-open world rectangle [ox, ox + a*cs) x [oy, oy + b*cs) cut into a x b square cells."""
    width: int                   # a, cells along x
    height: int                  # b, cells along y
    origin: Tuple[float, float] = (0.0, 0.0)
    cell_size: float = 1.0

    def __post_init__(self):
        if int(self.width) != self.width or self.width < 1:
            raise DomainError('width must be a positive integer, got %r' % (self.width,))
        if int(self.height) != self.height or self.height < 1:
            raise DomainError('height must be a positive integer, got %r' % (self.height,))
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise DomainError('cell_size must be > 0, got %r' % (self.cell_size,))
        if len(self.origin) != 2 or not all(math.isfinite(v) for v in self.origin):
            raise DomainError('origin must be a finite pair, got %r' % (self.origin,))
        object.__setattr__(self, 'width', int(self.width))
        object.__setattr__(self, 'height', int(self.height))
        object.__setattr__(self, 'origin', (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, 'cell_size', float(self.cell_size))

    @property
    def shape(self) -> Tuple[int, int]:
        """Array shape (b, a) of per-cell arrays."""
        return (self.height, self.width)

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def cell_area(self) -> float:
        return self.cell_size * self.cell_size

    @property
    def upper(self) -> Tuple[float, float]:
        """Exclusive upper corner in world units."""
        return (self.origin[0] + self.width * self.cell_size, self.origin[1] + self.height * self.cell_size)

    def contains(self, x: float, y: float) -> bool:
        ux, uy = self.upper
        return self.origin[0] <= x < ux and self.origin[1] <= y < uy

    def center_grids(self) -> Tuple[np.ndarray, np.ndarray]:
        """World coordinates of every cell centre, two arrays of shape (b, a)."""
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.cell_size
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.cell_size
        return np.meshgrid(xs, ys)

    def describe(self) -> dict:
        return dict(width=self.width, height=self.height, origin=list(self.origin), cell_size=self.cell_size)


def require_same_domain(*items: Any) -> SpatialDomain:
    """Return the shared domain of fields/maps, or raise DomainError on a mismatch."""
    domains = [item.domain for item in items]
    for d in domains[1:]:
        if d != domains[0]:
            raise DomainError('domain mismatch: %r vs %r' % (domains[0], d))
    return domains[0]

#----------------------------------------------------------------------------

def world_to_cell(domain: SpatialDomain, location: Sequence[float]) -> Tuple[int, int]:
    """Map a world location inside the domain to its 1-based cell index (j, k)."""
    x, y = float(location[0]), float(location[1])
    if not domain.contains(x, y):
        ux, uy = domain.upper
        raise DomainError('location (%r, %r) outside [%r, %r) x [%r, %r)' % (x, y, domain.origin[0], ux, domain.origin[1], uy))
    j = int(math.floor((x - domain.origin[0]) / domain.cell_size)) + 1
    k = int(math.floor((y - domain.origin[1]) / domain.cell_size)) + 1
    # rounding in the division can land exactly on the upper edge
    return min(j, domain.width), min(k, domain.height)


def world_to_cells(domain: SpatialDomain, locations: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised world_to_cell over an (N, 2) array; returns 1-based j and k arrays."""
    locations = np.asarray(locations, dtype=np.float64).reshape(-1, 2)
    ux, uy = domain.upper
    inside = (locations[:, 0] >= domain.origin[0]) & (locations[:, 0] < ux) & (locations[:, 1] >= domain.origin[1]) & (locations[:, 1] < uy)
    if not np.all(inside):
        bad = int(np.flatnonzero(~inside)[0])
        raise DomainError('location %d (%r, %r) outside [%r, %r) x [%r, %r)' % (bad, locations[bad, 0], locations[bad, 1], domain.origin[0], ux, domain.origin[1], uy))
    j = np.floor((locations[:, 0] - domain.origin[0]) / domain.cell_size).astype(np.int64) + 1
    k = np.floor((locations[:, 1] - domain.origin[1]) / domain.cell_size).astype(np.int64) + 1
    return np.minimum(j, domain.width), np.minimum(k, domain.height)


def cell_center(domain: SpatialDomain, j: int, k: int) -> Tuple[float, float]:
    """World coordinates of the centre of cell (j, k)."""
    if int(j) != j or int(k) != k or not (1 <= j <= domain.width and 1 <= k <= domain.height):
        raise DomainError('cell (%r, %r) outside {1..%d} x {1..%d}' % (j, k, domain.width, domain.height))
    return ((j - 0.5) * domain.cell_size + domain.origin[0], (k - 0.5) * domain.cell_size + domain.origin[1])

#----------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Observation:
    location: Tuple[float, float]
    values: Tuple[float, ...]


class Dataset:
    """N observations over a domain, each with a location and P named values.

    locations is a read-only (N, 2) float array and values a read-only (N, P)
    float array. Rows supplied with the wrong number of values are padded with
    NaN (or truncated) and remembered so validate_dataset can report them.
    """

    def __init__(self, domain: SpatialDomain, variable_names: Sequence[str], locations: Any, values: Any):
        self.domain = domain
        self.variable_names = tuple(str(n) for n in variable_names)
        P = len(self.variable_names)

        loc = np.array(locations, dtype=np.float64)
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise DomainError('locations must have shape (N, 2), got %r' % (loc.shape,))

        self.row_lengths = None
        if isinstance(values, np.ndarray) and values.ndim == 2:
            val = np.array(values, dtype=np.float64)
            if val.shape[1] != P:
                self.row_lengths = np.full(val.shape[0], val.shape[1], dtype=np.int64)
                val = _fit_columns(list(val), P)
        else:
            rows = [np.atleast_1d(np.asarray(row, dtype=np.float64)) for row in values]
            lengths = np.array([len(r) for r in rows], dtype=np.int64)
            if np.any(lengths != P):
                self.row_lengths = lengths
            val = _fit_columns(rows, P)
        if val.shape[0] != loc.shape[0]:
            raise DomainError('got %d locations but %d value rows' % (loc.shape[0], val.shape[0]))

        loc.setflags(write=False)
        val.setflags(write=False)
        self.locations = loc
        self.values = val

    @property
    def n(self) -> int:
        return self.locations.shape[0]

    @property
    def p(self) -> int:
        return len(self.variable_names)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.variable_names.index(name)]
        except ValueError:
            raise DomainError('unknown variable %r (have %s)' % (name, ', '.join(self.variable_names)))

    def observations(self) -> List[Observation]:
        return [Observation((float(l[0]), float(l[1])), tuple(float(v) for v in row)) for l, row in zip(self.locations, self.values)]

    def subset(self, rows: np.ndarray) -> 'Dataset':
        return Dataset(self.domain, self.variable_names, self.locations[rows], self.values[rows])

    def with_values(self, variable_names: Sequence[str], values: np.ndarray) -> 'Dataset':
        """Same locations, new value columns."""
        return Dataset(self.domain, variable_names, self.locations, np.asarray(values, dtype=np.float64).reshape(self.n, -1))

    @staticmethod
    def from_observations(domain: SpatialDomain, variable_names: Sequence[str], observations: Sequence[Observation]) -> 'Dataset':
        return Dataset(domain, variable_names, [o.location for o in observations], [o.values for o in observations])


def _fit_columns(rows: List[np.ndarray], P: int) -> np.ndarray:
    out = np.full((len(rows), P), np.nan, dtype=np.float64)
    for i, row in enumerate(rows):
        m = min(len(row), P)
        out[i, :m] = row[:m]
    return out


def validate_dataset(d: Dataset) -> Dataset:
    """Return d unchanged if every observation is well formed, else raise DatasetValidationError listing each violation."""
    report = []
    names = d.variable_names
    if len(set(names)) != len(names):
        dups = sorted(set(n for n in names if names.count(n) > 1))
        report.append((-1, None, 'duplicate variable names: %s' % ', '.join(dups)))
    if d.n < 1:
        report.append((-1, None, 'dataset has no observations'))

    ragged = set()
    if d.row_lengths is not None:
        for i in np.flatnonzero(d.row_lengths != d.p):
            ragged.add(int(i))
            report.append((int(i), None, 'expected %d values, got %d' % (d.p, d.row_lengths[i])))

    ox, oy = d.domain.origin
    ux, uy = d.domain.upper
    for axis, lo, hi in (('x', ox, ux), ('y', oy, uy)):
        coord = d.locations[:, 0 if axis == 'x' else 1]
        bad = ~np.isfinite(coord) | (coord < lo) | (coord >= hi)
        for i in np.flatnonzero(bad):
            report.append((int(i), axis, 'location outside [%g,%g)' % (lo, hi) if np.isfinite(coord[i]) else 'location is not finite'))

    nan_rows, nan_cols = np.nonzero(~np.isfinite(d.values))
    for i, c in zip(nan_rows, nan_cols):
        if int(i) in ragged:
            continue
        report.append((int(i), names[c], 'value is NaN' if np.isnan(d.values[i, c]) else 'value is not finite'))

    if report:
        report.sort(key=lambda r: r[0])
        raise DatasetValidationError(report)
    return d

#----------------------------------------------------------------------------

class ScalarField:
    """One real value per cell. Values are finite unless allow_inf is set (t-maps with zero residual variance)."""

    def __init__(self, domain: SpatialDomain, values: Any, allow_inf: bool = False, meta: dict = None):
        v = np.array(values, dtype=np.float64)
        if v.size != domain.n_cells:
            raise DomainError('field has %d values, domain has %d cells' % (v.size, domain.n_cells))
        v = v.reshape(domain.shape)
        if np.any(np.isnan(v)):
            raise DomainError('field contains NaN')
        if not allow_inf and not np.all(np.isfinite(v)):
            raise DomainError('field contains non-finite values')
        v.setflags(write=False)
        self.domain = domain
        self.values = v
        self.allow_inf = allow_inf
        self.meta = dnnlib.EasyDict(meta or {})

    def at(self, j: int, k: int) -> float:
        cell_center(self.domain, j, k)
        return float(self.values[k - 1, j - 1])

    def __repr__(self):
        return 'ScalarField(%dx%d, min=%g, max=%g)' % (self.domain.width, self.domain.height, self.values.min(), self.values.max())


class BinaryMap:
    """One boolean per cell."""

    def __init__(self, domain: SpatialDomain, mask: Any, meta: dict = None):
        m = np.array(mask, dtype=bool)
        if m.size != domain.n_cells:
            raise DomainError('map has %d cells, domain has %d' % (m.size, domain.n_cells))
        m = m.reshape(domain.shape)
        m.setflags(write=False)
        self.domain = domain
        self.mask = m
        self.meta = dnnlib.EasyDict(meta or {})

    @staticmethod
    def full(domain: SpatialDomain, value: bool = True) -> 'BinaryMap':
        return BinaryMap(domain, np.full(domain.shape, value, dtype=bool))

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def cells(self) -> List[Tuple[int, int]]:
        """1-based (j, k) of every set cell, in storage order."""
        ks, js = np.nonzero(self.mask)
        return [(int(j) + 1, int(k) + 1) for j, k in zip(js, ks)]

    def __eq__(self, other):
        return isinstance(other, BinaryMap) and self.domain == other.domain and np.array_equal(self.mask, other.mask)

    def __repr__(self):
        return 'BinaryMap(%dx%d, %d set)' % (self.domain.width, self.domain.height, self.count)

#----------------------------------------------------------------------------
