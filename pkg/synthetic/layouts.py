"""Default shape placements for the ground-truth partitions.

Each entry names the grid size and the fractal shapes drawn onto it, in draw
order; a later shape overwrites the labels of an earlier one where they
overlap. Centres and radii are in cells of a unit-size grid with its origin
at (0, 0).
"""

from dnnlib import EasyDict

#----------------------------------------------------------------------------

def _shape(center, radius, depth=4, variant='snowflake', label=1, rotation=90.0):
    return EasyDict(center=center, radius=radius, depth=depth, variant=variant, label=label, rotation=rotation)

def _field(spacing=40, offset=20, count=3, radius=14, depth=2):
    return [_shape((offset + i * spacing, offset + j * spacing), radius, depth=depth) for j in range(count) for i in range(count)]

#----------------------------------------------------------------------------

layout_defaults = EasyDict([(args.name, args) for args in [
    EasyDict(name='univariate_snowflake', width=120, height=120, n_variables=1, shapes=[_shape((60, 60), 45)]),
    EasyDict(name='univariate_anti',      width=120, height=120, n_variables=1, shapes=[_shape((60, 60), 50, variant='anti_snowflake')]),
    EasyDict(name='snowflake_field',      width=120, height=120, n_variables=1, shapes=_field()),
    EasyDict(name='bivariate_snowflake',  width=220, height=210, n_variables=2, shapes=[
        _shape((70, 130), 50, label=1),
        _shape((150, 130), 50, label=2),
        _shape((110, 65), 45, label=3)]),
    EasyDict(name='bivariate_anti',       width=220, height=210, n_variables=2, shapes=[
        _shape((70, 135), 55, variant='anti_snowflake', label=1),
        _shape((150, 135), 55, variant='anti_snowflake', label=2),
        _shape((110, 60), 50, variant='anti_snowflake', label=3)]),
]])

#----------------------------------------------------------------------------
