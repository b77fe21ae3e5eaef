"""Drawing datasets from a partition and its local distributions."""

import os

import numpy as np

import dnnlib
from geospm import fieldio
from geospm.errors import DomainError
from geospm.grid_domain import SpatialDomain, Dataset
from .distributions import LocalDistribution, _check_compatible
from .partition import RegionPartition

GENERATOR_ID = 'numpy.random.Philox'
VALUE_NOISE = 0.005

#----------------------------------------------------------------------------

def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for a seed; distinct streams jump to disjoint parts of the counter space."""
    bitgen = np.random.Philox(int(seed))
    if stream:
        bitgen = bitgen.jumped(int(stream))
    return np.random.Generator(bitgen)


def variable_names(n_variables: int):
    return ['z'] if n_variables == 1 else ['z%d' % (p + 1) for p in range(n_variables)]


class GeneratedDataset:
    """A sampled dataset together with the pre-jitter cells w and outcomes z it was made from."""

    def __init__(self, dataset: Dataset, cells: np.ndarray, outcomes: np.ndarray, seed: int, meta: dict):
        self.dataset = dataset
        self.cells = cells           # (N, 2) 1-based (j, k)
        self.outcomes = outcomes     # (N, P) in {0, 1}
        self.seed = seed
        self.meta = dnnlib.EasyDict(meta)

    @property
    def cell_samples(self):
        return [((int(w[0]), int(w[1])), tuple(int(v) for v in z)) for w, z in zip(self.cells, self.outcomes)]


def _draw_outcomes(rng: np.random.Generator, tables: np.ndarray, regions: np.ndarray) -> np.ndarray:
    cum = np.cumsum(tables, axis=1)
    cdf = cum / cum[:, -1:]
    u = rng.random(regions.shape[0])
    idx = np.sum(u[:, None] >= cdf[regions], axis=1)
    return np.minimum(idx, tables.shape[1] - 1)


def sample_dataset(partition: RegionPartition, distribution: LocalDistribution, n: int, seed: int, stream: int = 0) -> GeneratedDataset:
    """Draw n observations: uniform cells, an outcome from the cell's region, then jitter.

    Values are y = z + zeta with zeta uniform on [0, 0.005]; locations are the
    cell's lower-left corner plus omega uniform on [0, 1)^2 cell widths, so the
    cell of every location is still w.
    """
    if int(n) != n or n < 1:
        raise DomainError('N must be a positive integer, got %r' % (n,))
    _check_compatible(partition, distribution)
    n = int(n)
    P = distribution.n_variables
    domain = partition.domain
    rng = philox_generator(seed, stream)

    j = rng.integers(1, domain.width + 1, size=n)
    k = rng.integers(1, domain.height + 1, size=n)
    regions = partition.region_of(j, k)
    outcome = _draw_outcomes(rng, distribution.tables, regions)
    z = (outcome[:, None] >> np.arange(P)[None, :]) & 1

    zeta = rng.uniform(0.0, VALUE_NOISE, size=(n, P))
    omega = rng.random((n, 2))
    w = np.stack([j, k], axis=1)
    cs = domain.cell_size
    origin = np.array(domain.origin)
    x = origin + (w - 1 + omega) * cs
    # keep rounding from carrying a location into the next cell
    x = np.minimum(x, np.nextafter(origin + w * cs, -np.inf))
    y = z + zeta

    dataset = Dataset(domain, variable_names(P), x, y)
    meta = dict(layout=partition.name, n=n, seed=int(seed), stream=int(stream), generator=GENERATOR_ID,
                distribution=distribution.kind, domain=domain.describe(), variables=list(dataset.variable_names))
    meta.update(distribution.params)
    return GeneratedDataset(dataset, w, z.astype(np.int64), int(seed), meta)


def write_generated(path: str, gen: GeneratedDataset) -> str:
    """Write the dataset CSV and its JSON sidecar; returns the sidecar path."""
    fieldio.write_dataset_csv(path, gen.dataset)
    sidecar = fieldio.sidecar_path(path)
    dnnlib.util.write_json(sidecar, dict(gen.meta, csv=os.path.basename(path)))
    return sidecar

#----------------------------------------------------------------------------
# Tabular stand-in for the empirical workflow.

EMPIRICAL_DOMAIN = SpatialDomain(70, 70, origin=(388000.0, 269000.0), cell_size=500.0)
EMPIRICAL_COLUMNS = ['diabetes', 'sex', 'age', 'bmi', 'income']


def sample_empirical_standin(seed: int, n: int = 8000) -> Dataset:
    """Individual-level records in metre coordinates over a 35 km square.

    People cluster around a few settlements. Inside a planted area diabetes is
    more common, people are younger, more often male and poorer; a second area
    is older and wealthier with little diabetes. Columns: diabetes and sex are
    0/1 (1 = male), age in years, bmi in kg/m^2 and income as a deprivation
    score where higher means poorer.
    """
    if int(n) != n or n < 10:
        raise DomainError('n must be an integer >= 10, got %r' % (n,))
    rng = philox_generator(seed)
    d = EMPIRICAL_DOMAIN
    ox, oy = d.origin
    ux, uy = d.upper
    span = ux - ox

    towns = np.array([[0.35, 0.55], [0.65, 0.40], [0.55, 0.75], [0.25, 0.25]]) * span + np.array([ox, oy])
    n_town = int(0.7 * n)
    which = rng.integers(0, len(towns), size=n_town)
    near = towns[which] + rng.normal(0.0, 0.08 * span, size=(n_town, 2))
    spread = rng.uniform([ox, oy], [ux, uy], size=(n - n_town, 2))
    loc = np.concatenate([near, spread])
    loc[:, 0] = np.clip(loc[:, 0], ox, np.nextafter(ux, -np.inf))
    loc[:, 1] = np.clip(loc[:, 1], oy, np.nextafter(uy, -np.inf))

    def weight(center, radius):
        r2 = np.sum((loc - np.array(center)) ** 2, axis=1)
        return np.exp(-0.5 * r2 / radius ** 2)

    hot = weight((ox + 0.62 * span, oy + 0.42 * span), 3000.0)
    cold = weight((ox + 0.35 * span, oy + 0.58 * span), 3000.0)

    age = np.clip(rng.normal(50.0 - 14.0 * hot + 10.0 * cold, 12.0), 18.0, 95.0)
    sex = (rng.random(n) < 0.48 + 0.2 * hot).astype(np.float64)
    income = rng.normal(0.0 + 1.2 * hot - 1.0 * cold, 1.0)
    bmi = np.clip(rng.normal(27.0 + 1.5 * hot, 4.0), 15.0, 60.0)
    logit = -2.6 + 2.2 * hot - 1.5 * cold + 0.03 * (bmi - 27.0)
    diabetes = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(np.float64)

    values = np.stack([diabetes, sex, age, bmi, income], axis=1)
    return Dataset(d, EMPIRICAL_COLUMNS, loc, values)

#----------------------------------------------------------------------------
