"""Ground-truth region partitions built from fractal shapes."""

import copy

import numpy as np

from typing import Union

import dnnlib
from geospm.errors import ConfigError, DomainError
from geospm.grid_domain import SpatialDomain, BinaryMap
from . import fractal

#----------------------------------------------------------------------------

class RegionPartition:
    """Region label 0..K-1 for every cell; 0 is the background."""

    def __init__(self, domain: SpatialDomain, labels, layout: dnnlib.EasyDict = None):
        lab = np.array(labels, dtype=np.int64).reshape(domain.shape)
        if lab.min() < 0:
            raise DomainError('region labels must be >= 0, got %d' % lab.min())
        K = int(lab.max()) + 1
        missing = sorted(set(range(K)) - set(int(v) for v in np.unique(lab)))
        if missing:
            raise DomainError('region labels must cover 0..%d, missing %s' % (K - 1, ', '.join(str(m) for m in missing)))
        lab.setflags(write=False)
        self.domain = domain
        self.labels = lab
        self.K = K
        self.layout = layout if layout is not None else dnnlib.EasyDict(name='custom')

    @property
    def name(self) -> str:
        return self.layout.get('name', 'custom')

    @property
    def n_variables(self) -> int:
        return int(self.layout.get('n_variables', 2 if self.K > 2 else 1))

    def region_mask(self, k: int) -> BinaryMap:
        if not 0 <= k < self.K:
            raise DomainError('region %r outside 0..%d' % (k, self.K - 1))
        return BinaryMap(self.domain, self.labels == k)

    def region_of(self, j: np.ndarray, k: np.ndarray) -> np.ndarray:
        """Labels of the 1-based cells (j, k)."""
        return self.labels[np.asarray(k) - 1, np.asarray(j) - 1]

    def fractions(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.K) / float(self.domain.n_cells)

    def describe(self) -> dict:
        return dict(layout=self.name, K=self.K, domain=self.domain.describe(), fractions=[float(f) for f in self.fractions()])


def resolve_layout(layout: Union[str, dict], **overrides) -> dnnlib.EasyDict:
    """Look up a named layout (or take a layout record) and apply keyword overrides."""
    from .layouts import layout_defaults
    if isinstance(layout, str):
        if layout not in layout_defaults:
            raise ConfigError('unknown layout %r (have %s)' % (layout, ', '.join(layout_defaults)))
        spec = copy.deepcopy(layout_defaults[layout])
    else:
        spec = dnnlib.EasyDict(copy.deepcopy(dict(layout)))
    for key, value in overrides.items():
        if value is not None:
            spec[key] = value
    for key in ('width', 'height', 'shapes'):
        if key not in spec:
            raise ConfigError('layout %r is missing %r' % (spec.get('name', '?'), key))
    spec.shapes = [dnnlib.EasyDict(s) for s in spec.shapes]
    return spec


def build_partition(layout: Union[str, dict], **overrides) -> RegionPartition:
    """Rasterise the layout's shapes in draw order into a RegionPartition.

    A shape record has center, radius, depth, variant, label and optionally
    rotation (degrees of the first triangle vertex). An empty shape list
    gives the all-background partition with K = 1.
    """
    spec = resolve_layout(layout, **overrides)
    domain = SpatialDomain(int(spec.width), int(spec.height), tuple(spec.get('origin', (0.0, 0.0))), float(spec.get('cell_size', 1.0)))
    labels = np.zeros(domain.shape, dtype=np.int64)
    for i, s in enumerate(spec.shapes):
        if int(s.label) < 1:
            raise ConfigError('shape %d: label must be >= 1, got %r' % (i, s.label))
        start = fractal.equilateral_triangle(s.center, s.radius, s.get('rotation', 90.0))
        poly = fractal.koch_fractal(start, int(s.get('depth', 0)), s.get('variant', 'snowflake'))
        try:
            region = fractal.rasterize_polygon(poly, domain)
        except DomainError as e:
            raise DomainError('layout %r, shape %d: %s' % (spec.get('name', 'custom'), i, e))
        labels[region.mask] = int(s.label)
    return RegionPartition(domain, labels, layout=spec)

#----------------------------------------------------------------------------
