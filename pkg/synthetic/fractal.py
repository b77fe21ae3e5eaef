"""Koch fractal polygons and their rasterisation onto the grid."""

import math

import numpy as np

from typing import Sequence, Tuple

from geospm.errors import DomainError
from geospm.grid_domain import SpatialDomain, BinaryMap

MAX_DEPTH = 8
VARIANTS = ('snowflake', 'anti_snowflake')

#----------------------------------------------------------------------------

class Polygon:
    """Closed polygon given by its vertices in order; the closing edge is implicit."""

    def __init__(self, vertices: Sequence[Tuple[float, float]]):
        v = np.array(vertices, dtype=np.float64).reshape(-1, 2)
        if v.shape[0] < 3:
            raise DomainError('a polygon needs at least 3 vertices, got %d' % v.shape[0])
        if not np.all(np.isfinite(v)):
            raise DomainError('polygon vertices must be finite')
        v.setflags(write=False)
        self.vertices = v

    @property
    def n_edges(self) -> int:
        return self.vertices.shape[0]

    def signed_area(self) -> float:
        """Shoelace area, positive for counter-clockwise vertex order."""
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def area(self) -> float:
        return abs(self.signed_area())

    def perimeter(self) -> float:
        d = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))

    def bounds(self) -> Tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def translated(self, dx: float, dy: float) -> 'Polygon':
        return Polygon(self.vertices + np.array([dx, dy]))

    def counter_clockwise(self) -> 'Polygon':
        return self if self.signed_area() >= 0 else Polygon(self.vertices[::-1])

    def __repr__(self):
        return 'Polygon(%d vertices, area=%g)' % (self.n_edges, self.area())


def equilateral_triangle(center: Sequence[float], circumradius: float, rotation: float = 90.0) -> Polygon:
    """Counter-clockwise equilateral triangle; rotation (degrees) is the angle of the first vertex."""
    if not circumradius > 0:
        raise DomainError('circumradius must be > 0, got %r' % (circumradius,))
    angles = np.radians(rotation + np.array([0.0, 120.0, 240.0]))
    return Polygon(np.stack([center[0] + circumradius * np.cos(angles), center[1] + circumradius * np.sin(angles)], axis=1))

#----------------------------------------------------------------------------

def _koch_step(v: np.ndarray, sign: float) -> np.ndarray:
    p = v
    q = np.roll(v, -1, axis=0)
    d = q - p
    # (dy, -dx) points out of a counter-clockwise polygon
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1)
    a = p + d / 3.0
    b = p + 2.0 * d / 3.0
    peak = p + d / 2.0 + sign * (math.sqrt(3.0) / 6.0) * normal
    return np.stack([p, a, peak, b], axis=1).reshape(-1, 2)


def koch_fractal(start: Polygon, depth: int, variant: str = 'snowflake') -> Polygon:
    """Replace every edge by the four-segment Koch generator, depth times.

    The bump points out of the polygon for 'snowflake' and into it for
    'anti_snowflake'. The result is counter-clockwise with E0 * 4^depth edges.
    """
    if int(depth) != depth or depth < 0:
        raise DomainError('depth must be a non-negative integer, got %r' % (depth,))
    if depth > MAX_DEPTH:
        raise DomainError('depth %d exceeds the maximum of %d (%d vertices)' % (depth, MAX_DEPTH, start.n_edges * 4 ** depth))
    if variant not in VARIANTS:
        raise DomainError('variant must be one of %s, got %r' % (', '.join(VARIANTS), variant))
    sign = 1.0 if variant == 'snowflake' else -1.0
    v = np.array(start.counter_clockwise().vertices)
    for _ in range(int(depth)):
        v = _koch_step(v, sign)
    return Polygon(v)

#----------------------------------------------------------------------------

def rasterize_polygon(poly: Polygon, domain: SpatialDomain) -> BinaryMap:
    """Cells whose centre lies inside the polygon, by scanline even-odd fill.

    An edge counts for a scanline when the line passes through [y_lo, y_hi) of
    the edge, and a centre is inside when an odd number of crossings lies at or
    left of it. Centres exactly on a left or lower boundary are inside, those on
    a right or upper boundary are not.
    """
    x0, y0, x1, y1 = poly.bounds()
    ux, uy = domain.upper
    if x0 < domain.origin[0] or y0 < domain.origin[1] or x1 > ux or y1 > uy:
        raise DomainError('polygon bounds (%g, %g)-(%g, %g) exceed the domain [%g, %g) x [%g, %g)' % (x0, y0, x1, y1, domain.origin[0], ux, domain.origin[1], uy))
    mask = np.zeros(domain.shape, dtype=bool)
    if poly.area() == 0.0:
        return BinaryMap(domain, mask)

    cs = domain.cell_size
    xs = domain.origin[0] + (np.arange(domain.width) + 0.5) * cs
    ys = domain.origin[1] + (np.arange(domain.height) + 0.5) * cs
    p = poly.vertices
    q = np.roll(p, -1, axis=0)
    ylo = np.minimum(p[:, 1], q[:, 1])
    yhi = np.maximum(p[:, 1], q[:, 1])
    live = yhi > ylo

    rows = np.flatnonzero((ys >= y0) & (ys < y1))
    for r in rows:
        y = ys[r]
        hit = live & (ylo <= y) & (y < yhi)
        if not np.any(hit):
            continue
        ph, qh = p[hit], q[hit]
        cross = ph[:, 0] + (y - ph[:, 1]) * (qh[:, 0] - ph[:, 0]) / (qh[:, 1] - ph[:, 1])
        cross.sort()
        mask[r] = np.searchsorted(cross, xs, side='right') % 2 == 1
    return BinaryMap(domain, mask)

#----------------------------------------------------------------------------
