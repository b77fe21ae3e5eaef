"""Reading and writing datasets, fields and maps; PNG rendering.

Field files are plain text: a header of '# key value' lines followed by one
grid row per line, row k = 1 (lowest y) first, j = 1..a left to right.
Floats are written with 17 significant digits so a write/read round trip is
bit-exact.
"""

import errno
import io
import json
import os

import numpy as np
import pandas as pd
import PIL.Image
import matplotlib
import scipy.ndimage

from typing import Sequence, Tuple, Union

import dnnlib
from .errors import ConfigError, DatasetValidationError
from .grid_domain import SpatialDomain, Dataset, ScalarField, BinaryMap, validate_dataset, require_same_domain

FIELD_MAGIC = '# geospm-field v1'

#----------------------------------------------------------------------------
# Fields and maps.

def _header(domain: SpatialDomain, dtype: str, allow_inf: bool = False) -> str:
    return '\n'.join([
        FIELD_MAGIC,
        '# width %d' % domain.width,
        '# height %d' % domain.height,
        '# origin %r %r' % domain.origin,
        '# cell_size %r' % domain.cell_size,
        '# dtype %s' % dtype,
        '# allow_inf %d' % int(allow_inf),
    ])


def _write_grid(path: str, header: str, values: np.ndarray, fmt: str) -> None:
    dnnlib.util.ensure_dir(os.path.dirname(path))
    with open(path, 'w', encoding='utf-8') as f:
        f.write(header + '\n')
        np.savetxt(f, values, fmt=fmt, delimiter=' ')


def _read_grid(path: str) -> Tuple[dnnlib.EasyDict, np.ndarray]:
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != FIELD_MAGIC:
        raise ConfigError('%s is not a geospm field file (missing %r header)' % (path, FIELD_MAGIC))
    header = dnnlib.EasyDict()
    body = []
    for line in lines[1:]:
        if line.startswith('#'):
            parts = line[1:].split()
            if parts:
                header[parts[0]] = parts[1:]
        elif line.strip():
            body.append(line)
    try:
        domain = SpatialDomain(int(header.width[0]), int(header.height[0]),
                               (float(header.origin[0]), float(header.origin[1])), float(header.cell_size[0]))
        dtype = header.dtype[0]
        allow_inf = bool(int(header.get('allow_inf', ['0'])[0]))
    except (AttributeError, IndexError, ValueError) as e:
        raise ConfigError('malformed header in %s: %s' % (path, e))
    values = np.loadtxt(io.StringIO('\n'.join(body)), dtype=np.float64, ndmin=2) if body else np.zeros((0, 0))
    if values.shape != domain.shape:
        raise ConfigError('%s: expected %d rows of %d values, got shape %r' % (path, domain.height, domain.width, values.shape))
    return dnnlib.EasyDict(domain=domain, dtype=dtype, allow_inf=allow_inf), values


def write_field(path: str, field: ScalarField) -> None:
    _write_grid(path, _header(field.domain, 'float64', field.allow_inf), field.values, '%.17g')


def read_field(path: str) -> ScalarField:
    info, values = _read_grid(path)
    if info.dtype != 'float64':
        raise ConfigError('%s holds %s values, not a scalar field' % (path, info.dtype))
    return ScalarField(info.domain, values, allow_inf=info.allow_inf)


def write_map(path: str, bmap: BinaryMap) -> None:
    _write_grid(path, _header(bmap.domain, 'bool'), bmap.mask.astype(np.int64), '%d')


def read_map(path: str) -> BinaryMap:
    info, values = _read_grid(path)
    if info.dtype != 'bool':
        raise ConfigError('%s holds %s values, not a binary map' % (path, info.dtype))
    if not np.all((values == 0) | (values == 1)):
        raise ConfigError('%s: binary map values must be 0 or 1' % path)
    return BinaryMap(info.domain, values.astype(bool))


def read_grid_file(path: str) -> Union[ScalarField, BinaryMap]:
    """Read either kind of grid file, depending on its dtype header."""
    info, values = _read_grid(path)
    if info.dtype == 'bool':
        return read_map(path)
    return ScalarField(info.domain, values, allow_inf=info.allow_inf)

#----------------------------------------------------------------------------
# Datasets.

def write_dataset_csv(path: str, dataset: Dataset) -> None:
    df = pd.DataFrame(dataset.values, columns=list(dataset.variable_names))
    df.insert(0, 'y', dataset.locations[:, 1])
    df.insert(0, 'x', dataset.locations[:, 0])
    dnnlib.util.ensure_dir(os.path.dirname(path))
    df.to_csv(path, index=False, float_format='%.17g', encoding='utf-8')


def read_dataset_csv(path: str, domain: SpatialDomain, columns: Sequence[str] = None) -> Dataset:
    """Load a dataset CSV (header x,y,<vars>) and validate it against the domain.

    columns optionally restricts the variables kept, in the given order.
    """
    try:
        df = pd.read_csv(path, encoding='utf-8', float_precision='round_trip')
    except pd.errors.ParserError as e:
        raise DatasetValidationError([(-1, None, 'cannot parse CSV: %s' % str(e).strip())])
    except pd.errors.EmptyDataError:
        raise DatasetValidationError([(-1, None, 'file is empty')])
    header = [str(c).strip() for c in df.columns]
    if header[:2] != ['x', 'y']:
        raise ConfigError('%s: header must start with x,y, got %s' % (path, ','.join(header[:2])))
    df.columns = header
    names = header[2:] if columns is None else list(columns)
    for name in names:
        if name not in header[2:]:
            raise ConfigError('%s: unknown column %r (have %s)' % (path, name, ', '.join(header[2:])))
    values = df[names].apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64) if names else np.zeros((len(df), 0))
    locations = df[['x', 'y']].apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    return validate_dataset(Dataset(domain, names, locations, values))


def sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + '.json'


def read_sidecar(path: str) -> dnnlib.EasyDict:
    with open(path, 'r', encoding='utf-8') as f:
        try:
            return dnnlib.EasyDict(json.load(f))
        except ValueError as e:
            raise ConfigError('%s: %s' % (path, e))


def domain_from_record(record: dict) -> SpatialDomain:
    try:
        return SpatialDomain(int(record['width']), int(record['height']), tuple(record.get('origin', (0.0, 0.0))), float(record.get('cell_size', 1.0)))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError('malformed domain record %r: %s' % (record, e))


def dataset_domain(csv_path: str, default: SpatialDomain = None) -> SpatialDomain:
    """Domain recorded in the dataset's JSON sidecar, else the default."""
    if not os.path.exists(csv_path):
        raise FileNotFoundError(errno.ENOENT, os.strerror(errno.ENOENT), csv_path)
    sidecar = sidecar_path(csv_path)
    if os.path.exists(sidecar):
        record = read_sidecar(sidecar)
        if 'domain' in record:
            return domain_from_record(record.domain)
    if default is None:
        raise ConfigError('%s has no sidecar with a domain record; give the domain explicitly' % csv_path)
    return default

#----------------------------------------------------------------------------
# PNG export.

def shared_scale(fields: Sequence[ScalarField]) -> float:
    """Largest finite |value| across the fields, for rendering several maps on one colour scale."""
    vmax = 0.0
    for f in fields:
        finite = f.values[np.isfinite(f.values)]
        if finite.size:
            vmax = max(vmax, float(np.max(np.abs(finite))))
    return vmax


def outline(mask: np.ndarray) -> np.ndarray:
    """Cells of the mask that touch a cell outside it (4-neighbourhood), including the grid edge."""
    m = np.asarray(mask, dtype=bool)
    interior = scipy.ndimage.binary_erosion(m, border_value=0)
    return m & ~interior


def render_png(field: ScalarField, overlays: Sequence[BinaryMap] = (), colormap: str = 'RdBu_r', symmetric: bool = True,
               vmax: float = None, upscale: int = 4, outline_color=(0, 0, 0)) -> bytes:
    """Colour-map a field, trace overlay outlines on top and return PNG bytes, y pointing up.

    With symmetric=True the colour scale runs from -vmax to vmax (vmax defaults
    to the field's largest |value|); pass vmax from shared_scale to put several
    fields on one scale. Infinite values saturate.
    """
    if overlays:
        require_same_domain(field, *overlays)
    values = field.values
    finite = values[np.isfinite(values)]
    if symmetric:
        hi = shared_scale([field]) if vmax is None else float(vmax)
        lo = -hi
    else:
        lo = float(finite.min()) if finite.size else 0.0
        hi = float(finite.max()) if finite.size else 0.0
        if vmax is not None:
            hi = float(vmax)
    if not hi > lo:
        print('Warning: field has zero range; rendering a flat image.')
        norm = np.full(values.shape, 0.5)
    else:
        norm = (np.clip(np.nan_to_num(values, posinf=hi, neginf=lo), lo, hi) - lo) / (hi - lo)

    cmap = matplotlib.colormaps[colormap]
    rgb = (cmap(norm)[..., :3] * 255.0 + 0.5).astype(np.uint8)
    for m in overlays:
        rgb[outline(m.mask)] = outline_color

    rgb = rgb[::-1]  # row k = 1 at the bottom
    img = PIL.Image.fromarray(rgb, 'RGB')
    if upscale > 1:
        img = img.resize((img.width * upscale, img.height * upscale), PIL.Image.NEAREST)
    buf = io.BytesIO()
    img.save(buf, format='PNG')
    return buf.getvalue()

#----------------------------------------------------------------------------
