"""Mass-univariate GLM: one regression per grid cell, all sharing the same design matrix."""

import enum

import numpy as np

from typing import List, Sequence, Tuple

import dnnlib
from .errors import DomainError, EstimabilityError
from .grid_domain import Dataset, ScalarField
from .smoothing import ResponseAccumulators

#----------------------------------------------------------------------------

class Tail(enum.Enum):
    POSITIVE = 'pos'
    NEGATIVE = 'neg'
    TWO = 'two'

    @staticmethod
    def parse(value) -> 'Tail':
        if isinstance(value, Tail):
            return value
        aliases = {'pos': Tail.POSITIVE, 'positive': Tail.POSITIVE, '+': Tail.POSITIVE,
                   'neg': Tail.NEGATIVE, 'negative': Tail.NEGATIVE, '-': Tail.NEGATIVE,
                   'two': Tail.TWO, 'both': Tail.TWO, 'two-tailed': Tail.TWO}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise DomainError('unknown tail %r (expected pos, neg or two)' % (value,))

#----------------------------------------------------------------------------

CONSTANT = 'constant'

class DesignMatrix:
    """Named design columns shared by every cell's regression; the constant, when included, comes first."""

    def __init__(self, columns: Sequence[Tuple[str, Sequence[float]]], include_constant: bool = True, n: int = None):
        cols = [(str(name), np.asarray(vec, dtype=np.float64).ravel()) for name, vec in columns]
        if n is None:
            if not cols:
                raise DomainError('design without columns needs an explicit number of rows')
            n = cols[0][1].shape[0]
        names = [name for name, _ in cols]
        if len(set(names)) != len(names) or (include_constant and CONSTANT in names):
            raise DomainError('design column names must be unique, got %r' % (names,))
        for name, vec in cols:
            if vec.shape[0] != n:
                raise DomainError('column %r has %d rows, expected %d' % (name, vec.shape[0], n))
            if not np.all(np.isfinite(vec)):
                raise DomainError('column %r has non-finite entries' % name)
            if not np.any(vec != 0):
                raise DomainError('column %r is all zero' % name)
        if include_constant:
            cols.insert(0, (CONSTANT, np.ones(n, dtype=np.float64)))
        if not cols:
            raise DomainError('design has no columns')
        if n < len(cols) + 1:
            raise EstimabilityError('need at least %d observations for %d design columns, got %d' % (len(cols) + 1, len(cols), n))

        self.names = tuple(name for name, _ in cols)
        self.include_constant = include_constant
        matrix = np.stack([vec for _, vec in cols], axis=1)
        matrix.setflags(write=False)
        self.matrix = matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DomainError('unknown design column %r (have %s)' % (name, ', '.join(self.names)))

    @staticmethod
    def from_dataset(dataset: Dataset, names: Sequence[str], include_constant: bool = True, zscore=False, interactions: Sequence[Tuple[str, str]] = ()) -> 'DesignMatrix':
        """Build a design from dataset variables.

        zscore is a bool (all named columns) or a list of names to centre and
        divide by their sample standard deviation. Interaction columns are
        elementwise products of the already transformed columns, named 'a*b'.
        """
        if zscore is True:
            zscore = list(names)
        zscore = set(zscore or [])
        for name in zscore:
            if name not in names:
                raise DomainError('z-score column %r is not in the design' % name)
        columns = []
        transformed = {}
        for name in names:
            vec = np.array(dataset.column(name), dtype=np.float64)
            if name in zscore:
                sd = vec.std(ddof=1) if vec.shape[0] > 1 else 0.0
                if not sd > 0:
                    raise DomainError('cannot z-score constant column %r' % name)
                vec = (vec - vec.mean()) / sd
            transformed[name] = vec
            columns.append((name, vec))
        for a, b in interactions:
            for part in (a, b):
                if part not in transformed:
                    transformed[part] = np.array(dataset.column(part), dtype=np.float64)
            columns.append(('%s*%s' % (a, b), transformed[a] * transformed[b]))
        return DesignMatrix(columns, include_constant=include_constant, n=dataset.n)


class Contrast:
    """Weights over design columns plus the direction of the test."""

    def __init__(self, weights: Sequence[float], tail=Tail.POSITIVE, name: str = None):
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.size == 0 or not np.any(w != 0):
            raise DomainError('contrast weights must not be all zero')
        if not np.all(np.isfinite(w)):
            raise DomainError('contrast weights must be finite')
        self.weights = w
        self.tail = Tail.parse(tail)
        self.name = name

    @staticmethod
    def for_column(design: DesignMatrix, column: str, tail=Tail.POSITIVE) -> 'Contrast':
        w = np.zeros(design.n_columns)
        w[design.index(column)] = 1.0
        return Contrast(w, tail, name=column)

    def describe(self) -> dict:
        return dict(name=self.name, weights=self.weights.tolist(), tail=self.tail.value)

#----------------------------------------------------------------------------

def pseudo_inverse(xtx: np.ndarray) -> Tuple[np.ndarray, int]:
    """Eigen-based pseudo-inverse of a symmetric PSD matrix and its numerical rank."""
    w, V = np.linalg.eigh(xtx)
    tol = max(w.max(), 0.0) * xtx.shape[0] * np.finfo(np.float64).eps
    keep = w > tol
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    pinv = (V * inv_w) @ V.T
    return 0.5 * (pinv + pinv.T), int(np.count_nonzero(keep))


class GlmFit:
    """Per-cell coefficients and residual variance for one scale.

    Attributes:
        beta: (C, b, a) coefficients.
        sigma2: (b, a) residual variance RSS / df.
        df: residual degrees of freedom N - rank(X).
        xtx_pinv: (C, C) pseudo-inverse of X^T X.
    """

    def __init__(self, domain, column_names, beta, sigma2, df, rank, xtx_pinv, diameter=None, flags=None, clamped_fraction=0.0):
        self.domain = domain
        self.column_names = tuple(column_names)
        self.beta = beta
        self.sigma2 = sigma2
        self.df = df
        self.rank = rank
        self.xtx_pinv = xtx_pinv
        self.diameter = diameter
        self.flags = list(flags or [])
        self.clamped_fraction = clamped_fraction

    @property
    def beta_fields(self) -> List[ScalarField]:
        return [ScalarField(self.domain, self.beta[p], meta=dict(kind='beta', column=name, diameter=self.diameter)) for p, name in enumerate(self.column_names)]

    @property
    def sigma2_field(self) -> ScalarField:
        return ScalarField(self.domain, self.sigma2, meta=dict(kind='sigma2', df=self.df, diameter=self.diameter))


def fit_glm(acc: ResponseAccumulators, design: DesignMatrix, scale_index: int = 0) -> GlmFit:
    """Solve the normal equations at every cell of one scale from the streaming sums."""
    if tuple(acc.column_names) != tuple(design.names) or acc.n != design.n:
        raise DomainError('accumulators were built for design %r (N=%d), not %r (N=%d)' % (acc.column_names, acc.n, design.names, design.n))
    if not (0 <= scale_index < acc.n_scales):
        raise DomainError('scale index %d outside 0..%d' % (scale_index, acc.n_scales - 1))

    X = design.matrix
    pinv, rank = pseudo_inverse(X.T @ X)
    df = design.n - rank
    if df <= 0:
        raise EstimabilityError('no residual degrees of freedom (N=%d, rank=%d)' % (design.n, rank))
    flags = []
    if rank < design.n_columns:
        flags.append('rank_deficient')
        print('Warning: design is rank deficient (rank %d < %d columns); df uses the rank.' % (rank, design.n_columns))

    xty = acc.xty[scale_index]                                  # (C, b, a)
    beta = np.tensordot(pinv, xty, axes=([1], [0]))             # (C, b, a)
    rss = acc.ksq[scale_index] - np.einsum('pij,pij->ij', xty, beta)
    negative = rss < 0
    clamped_fraction = float(np.count_nonzero(negative)) / rss.size
    if clamped_fraction > 0:
        rss[negative] = 0.0
        if clamped_fraction >= 1e-3:
            flags.append('rss_clamped')
            print('Warning: residual sum of squares clamped at 0 in %.3g%% of cells.' % (100.0 * clamped_fraction))
    sigma2 = rss / df

    beta.setflags(write=False)
    sigma2.setflags(write=False)
    return GlmFit(acc.domain, design.names, beta, sigma2, df, rank, pinv, diameter=acc.schedule.diameters[scale_index], flags=flags, clamped_fraction=clamped_fraction)


def contrast_t_map(fit: GlmFit, c: Contrast) -> ScalarField:
    """t = c'beta / sqrt(sigma2 c'(X'X)^+ c) at every cell; zero-variance cells give +-inf (or 0 when c'beta = 0)."""
    if c.weights.size != len(fit.column_names):
        raise DomainError('contrast has %d weights but design has %d columns' % (c.weights.size, len(fit.column_names)))
    w = c.weights
    var_c = float(w @ fit.xtx_pinv @ w)
    scale = float(np.max(np.abs(w))) ** 2 * float(np.max(np.abs(fit.xtx_pinv)))
    if not var_c > 1e-12 * max(scale, np.finfo(np.float64).tiny):
        raise EstimabilityError('contrast %r is not estimable: c\'(X\'X)^+c = %g' % (w.tolist(), var_c))
    if fit.rank < len(fit.column_names):
        # estimable iff c lies in the row space of X
        xtx = np.linalg.pinv(fit.xtx_pinv)
        projected = xtx @ fit.xtx_pinv @ w
        if not np.allclose(projected, w, rtol=1e-8, atol=1e-8 * max(1.0, float(np.abs(w).max()))):
            raise EstimabilityError('contrast %r is not estimable from a rank-deficient design' % (w.tolist(),))

    effect = np.tensordot(w, fit.beta, axes=([0], [0]))
    se2 = fit.sigma2 * var_c
    t = np.zeros_like(effect)
    pos = se2 > 0
    t[pos] = effect[pos] / np.sqrt(se2[pos])
    zero_var = ~pos
    with np.errstate(invalid='ignore'):
        t[zero_var] = np.sign(effect[zero_var]) * np.inf   # sign(0) * inf is nan
    t[zero_var & (effect == 0)] = 0.0

    meta = dnnlib.EasyDict(kind='t', contrast=c.describe(), df=fit.df, diameter=fit.diameter, columns=list(fit.column_names))
    n_inf = int(np.count_nonzero(np.isinf(t)))
    if n_inf:
        meta.flags = ['infinite_t']
        meta.n_infinite = n_inf
    return ScalarField(fit.domain, t, allow_inf=True, meta=meta)

#----------------------------------------------------------------------------
