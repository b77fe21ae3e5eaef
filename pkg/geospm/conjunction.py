"""Intersections of thresholded significance maps."""

import numpy as np

from typing import Sequence, Tuple

import dnnlib
from .errors import DomainError
from .glm import Tail
from .grid_domain import BinaryMap, ScalarField, require_same_domain

#----------------------------------------------------------------------------

def split_signed(t_field: ScalarField, sig_map: BinaryMap) -> Tuple[BinaryMap, BinaryMap]:
    """Split a two-tailed significance map into its positive-t and negative-t parts."""
    require_same_domain(t_field, sig_map)
    base = dict(sig_map.meta)
    pos = BinaryMap(sig_map.domain, sig_map.mask & (t_field.values > 0), meta=dict(base, tail=Tail.POSITIVE.value))
    neg = BinaryMap(sig_map.domain, sig_map.mask & (t_field.values < 0), meta=dict(base, tail=Tail.NEGATIVE.value))
    return pos, neg


def conjunction(maps: Sequence[BinaryMap], signs: Sequence = None) -> BinaryMap:
    """Cellwise AND of two or more maps; the inputs' variable, model and tail are kept in the result's meta."""
    maps = list(maps)
    if len(maps) < 2:
        raise DomainError('conjunction needs at least 2 maps, got %d' % len(maps))
    if signs is not None and len(signs) != len(maps):
        raise DomainError('got %d signs for %d maps' % (len(signs), len(maps)))
    domain = require_same_domain(*maps)

    inputs = []
    for i, m in enumerate(maps):
        tail = Tail.parse(signs[i]).value if signs is not None else m.meta.get('tail', Tail.POSITIVE.value)
        inputs.append(dict(variable=m.meta.get('variable', m.meta.get('contrast_name')), model=m.meta.get('model'), tail=tail))

    meta = dnnlib.EasyDict(kind='conjunction', inputs=inputs)
    if any(entry['tail'] == Tail.TWO.value for entry in inputs):
        meta.flags = ['unsigned_conjunction']
    mask = np.logical_and.reduce([m.mask for m in maps])
    return BinaryMap(domain, mask, meta=meta)

#----------------------------------------------------------------------------
