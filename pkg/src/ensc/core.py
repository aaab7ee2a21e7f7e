"""Matrix containers and the elastic net problem/solution data model.

Dense matrices are plain ``numpy.ndarray`` objects stored in Fortran
(column-major) order so that atom access ``A[:, j]`` is contiguous.
Everything built here is frozen and its arrays are marked read-only.
"""
from dataclasses import dataclass, field

import numpy as np

from .config import get_tolerances
from .errors import (
    DimensionMismatch,
    InvalidProblem,
    NonFiniteEntries,
    ZeroColumn,
    ZeroVector,
)


def _readonly(a):
    a.setflags(write=False)
    return a


def as_dense(m):
    """Validate ``m`` as a finite 2-D float64 matrix in column-major order."""
    a = np.array(m, dtype=np.float64, order="F", copy=True)
    if a.ndim == 1:
        a = a.reshape(-1, 1, order="F")
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1:
        raise DimensionMismatch("matrix must have at least one row")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntries("matrix contains NaN or Inf")
    return a


def index_set(indices, n=None):
    """Sorted, deduplicated int64 index array (the active-set type)."""
    idx = np.unique(np.asarray(indices, dtype=np.int64).ravel())
    if n is not None and idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise DimensionMismatch(f"indices out of range [0, {n})")
    return idx


def normalize_columns(m):
    """Scale every column of ``m`` to unit l2 norm.

    Raises
    ------
    ZeroColumn
        If some column has norm below the norm tolerance.
    """
    a = as_dense(m)
    norms = np.linalg.norm(a, axis=0)
    tol = get_tolerances().norm
    bad = np.flatnonzero(norms < tol)
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    a /= norms
    return Dictionary(a, normalized=True)


def coherence(v, w):
    """|<v, w>| / (||v|| ||w||), clipped into [0, 1]."""
    v = np.asarray(v, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if v.shape != w.shape:
        raise DimensionMismatch("coherence needs vectors of equal length")
    nv, nw = np.linalg.norm(v), np.linalg.norm(w)
    tol = get_tolerances().norm
    if nv < tol or nw < tol:
        raise ZeroVector("coherence of a zero vector is undefined")
    return float(min(1.0, abs(np.dot(v, w)) / (nv * nw)))


@dataclass(frozen=True)
class Dictionary:
    """A column-normalized matrix of atoms (D x N)."""

    matrix: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        a = self.matrix
        if not (isinstance(a, np.ndarray) and a.dtype == np.float64
                and a.ndim == 2 and a.flags.f_contiguous):
            a = as_dense(a)
        if a.shape[1]:
            norms = np.linalg.norm(a, axis=0)
            worst = np.max(np.abs(norms - 1.0))
            if worst > get_tolerances().norm:
                zero = np.flatnonzero(norms < get_tolerances().norm)
                if zero.size:
                    raise ZeroColumn(int(zero[0]))
                raise InvalidProblem(
                    f"dictionary columns are not unit norm (max dev {worst:.2e})"
                )
        if a.flags.writeable:
            a = _readonly(a if a is not self.matrix else a.copy(order="F"))
        object.__setattr__(self, "matrix", a)

    @classmethod
    def from_matrix(cls, m):
        return normalize_columns(m)

    @property
    def D(self):
        return self.matrix.shape[0]

    @property
    def N(self):
        return self.matrix.shape[1]

    def column(self, j):
        return self.matrix[:, j]

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return Dictionary(np.asfortranarray(self.matrix[:, idx]))

    def without(self, j):
        return Dictionary(np.asfortranarray(np.delete(self.matrix, j, axis=1)))

    def append(self, other):
        extra = other.matrix if isinstance(other, Dictionary) else as_dense(other)
        return Dictionary(np.asfortranarray(np.hstack([self.matrix, extra])))


@dataclass(frozen=True)
class ElasticNetProblem:
    """min_c lam*||c||_1 + (1-lam)/2*||c||^2 + gamma/2*||b - A c||^2.

    ``b`` must have unit norm; the all-zero vector is also accepted as the
    degenerate instance whose solution and oracle point are both zero.
    """

    b: np.ndarray
    dictionary: Dictionary
    lam: float
    gamma: float

    def __post_init__(self):
        b = np.array(self.b, dtype=np.float64).ravel()
        if b.shape[0] != self.dictionary.D:
            raise DimensionMismatch(
                f"b has length {b.shape[0]}, dictionary has D={self.dictionary.D}"
            )
        if not np.all(np.isfinite(b)):
            raise NonFiniteEntries("b contains NaN or Inf")
        nb = np.linalg.norm(b)
        if nb != 0.0 and abs(nb - 1.0) > get_tolerances().norm:
            raise InvalidProblem(f"b must have unit norm (got {nb!r})")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidProblem(f"lambda must lie in [0, 1] (got {self.lam})")
        if not self.gamma > 0.0:
            raise InvalidProblem(f"gamma must be positive (got {self.gamma})")
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def A(self):
        return self.dictionary.matrix

    @classmethod
    def from_arrays(cls, b, A, lam, gamma, normalize=True):
        """Build a problem from raw arrays, normalizing b and the atoms."""
        b = np.asarray(b, dtype=np.float64).ravel()
        if normalize:
            nb = np.linalg.norm(b)
            if nb > 0:
                b = b / nb
            dictionary = normalize_columns(A)
        else:
            dictionary = Dictionary(as_dense(A))
        return cls(b, dictionary, lam, gamma)

    def with_dictionary(self, dictionary):
        return ElasticNetProblem(self.b, dictionary, self.lam, self.gamma)

    def with_lambda(self, lam):
        return ElasticNetProblem(self.b, self.dictionary, lam, self.gamma)


@dataclass(frozen=True)
class ElasticNetSolution:
    coefficients: np.ndarray
    support: np.ndarray
    oracle_point: np.ndarray
    objective: float
    optimality_residual: float
    iterations: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, c, problem, iterations, diagnostics=None):
        """Zero out sub-cutoff entries, then derive every other field from c."""
        from .elastic_net import check_optimality, objective, oracle_point

        c = np.array(c, dtype=np.float64)
        c[np.abs(c) <= get_tolerances().zero] = 0.0
        residual = check_optimality(c, problem)
        return cls(
            coefficients=_readonly(c),
            support=_readonly(np.flatnonzero(c)),
            oracle_point=_readonly(oracle_point(c, problem)),
            objective=objective(c, problem),
            optimality_residual=float(residual),
            iterations=int(iterations),
            diagnostics=dict(diagnostics or {}),
        )
