"""Self-expressive coefficients and the affinity graph for subspace clustering."""
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .config import get_tolerances
from .errors import EnscError, InvalidProblem, LambdaZero, OrthogonalPoint
from .orgen import OrgenConfig, _orgen_arrays


@dataclass(frozen=True)
class EnscConfig:
    """Per-point elastic net settings.

    Each point gets ``gamma = alpha * gamma_0``.  ``gamma`` may be set
    instead to use one fixed value for every point (required at lam = 0,
    where gamma_0 does not exist).
    """

    lam: float = 0.9
    alpha: float = 3.0
    orgen: OrgenConfig = field(default_factory=OrgenConfig.clustering)
    parallel_columns: bool = False
    gamma: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidProblem("lambda must lie in [0, 1]")
        if not self.alpha > 1.0:
            raise InvalidProblem("alpha must be > 1")
        if self.gamma is None and self.lam == 0.0:
            raise LambdaZero("gamma_0 is undefined at lambda = 0; set gamma")


@dataclass(frozen=True)
class SelfExpressiveModel:
    coefficients: sp.csc_matrix      # column j is the representation of x_j
    gamma0: np.ndarray
    gammas: np.ndarray
    support_sizes: np.ndarray
    failures: tuple = ()             # (column, error code) pairs

    @property
    def N(self):
        return self.coefficients.shape[0]


@dataclass(frozen=True)
class Affinity:
    """Symmetric non-negative affinity stored as (i, j, w) triplets sorted by (i, j)."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def to_sparse(self):
        return sp.csr_matrix((self.values, (self.rows, self.cols)),
                             shape=(self.n, self.n))

    def to_dense(self):
        return self.to_sparse().toarray()

    @classmethod
    def from_matrix(cls, W):
        W = sp.coo_matrix(W)
        W.sum_duplicates()
        keep = (W.row != W.col) & (W.data != 0)
        r, c, v = W.row[keep], W.col[keep], W.data[keep]
        order = np.lexsort((c, r))
        return cls(W.shape[0], r[order].astype(np.int64), c[order].astype(np.int64),
                   v[order].astype(np.float64))


def gamma_zero(b, dictionary, lam):
    """Smallest gamma giving a nonzero solution: lam / ||A^T b||_inf."""
    if lam == 0.0:
        raise LambdaZero("gamma_0 is undefined at lambda = 0")
    if dictionary.N == 0:
        raise OrthogonalPoint("empty dictionary")
    m = float(np.max(np.abs(dictionary.matrix.T @ np.asarray(b, dtype=np.float64))))
    if m < get_tolerances().norm:
        raise OrthogonalPoint("point is orthogonal to every atom")
    return lam / m


def _solve_columns(X, cols, cfg, XXt):
    """Representations for the given columns; returns per-column records."""
    lam = cfg.lam
    tol = get_tolerances().norm
    out = []
    for j in cols:
        b = X[:, j]
        corr = np.abs(X.T @ b)
        corr[j] = 0.0
        m = float(corr.max()) if corr.size else 0.0
        if cfg.gamma is None and m < tol:
            out.append((j, None, None, np.nan, np.nan, OrthogonalPoint.code))
            continue
        g0 = lam / m if (lam > 0 and m >= tol) else np.nan
        gamma = cfg.gamma if cfg.gamma is not None else cfg.alpha * g0
        try:
            c, _ = _orgen_arrays(X, b, lam, gamma, cfg.orgen, exclude=j, AAt=XXt)
        except EnscError as exc:
            best = getattr(exc, "best", None)
            if best is None:
                out.append((j, None, None, g0, gamma, exc.code))
                continue
            c = best
            code = exc.code
        else:
            code = None
        idx = np.flatnonzero(c)
        out.append((j, idx, c[idx], g0, gamma, code))
    return out


def _chunk_worker(args):
    X, cols, cfg = args
    return _solve_columns(X, cols, cfg, X @ X.T)


def self_expressive(X, cfg=None, workers=None):
    """Solve the elastic net of every column against all the others.

    Parameters
    ----------
    X : Dictionary
        Data with unit-norm columns.
    cfg : EnscConfig
    workers : int, optional
        Process count for the column map (default 1, or the available CPUs
        when ``cfg.parallel_columns``).  The result does not depend on it.

    Returns
    -------
    SelfExpressiveModel
        Column failures are recorded in ``failures`` instead of raised.
    """
    cfg = cfg or EnscConfig()
    A = X.matrix
    N = A.shape[1]
    if N < 2:
        raise InvalidProblem("self-expression needs at least two points")
    if workers is None:
        workers = (os.cpu_count() or 1) if cfg.parallel_columns else 1
    if workers > 1:
        chunks = [c for c in np.array_split(np.arange(N), workers * 4) if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_chunk_worker, [(A, c, cfg) for c in chunks])
            records = [r for part in parts for r in part]
    else:
        records = _solve_columns(A, range(N), cfg, A @ A.T)
    records.sort(key=lambda r: r[0])

    rows, vals, indptr = [], [], [0]
    gamma0 = np.full(N, np.nan)
    gammas = np.full(N, np.nan)
    sizes = np.zeros(N, dtype=np.int64)
    failures = []
    for j, idx, v, g0, g, code in records:
        gamma0[j], gammas[j] = g0, g
        if idx is not None:
            rows.append(idx)
            vals.append(v)
            sizes[j] = idx.size
        indptr.append(indptr[-1] + sizes[j])
        if code is not None:
            failures.append((j, code))
    C = sp.csc_matrix(
        (np.concatenate(vals) if vals else np.zeros(0),
         np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64),
         np.asarray(indptr)),
        shape=(N, N),
    )
    return SelfExpressiveModel(C, gamma0, gammas, sizes, tuple(failures))


def build_affinity(model):
    """W = |C| + |C|^T with a zero diagonal."""
    C = abs(model.coefficients)
    return Affinity.from_matrix((C + C.T).tocoo())
