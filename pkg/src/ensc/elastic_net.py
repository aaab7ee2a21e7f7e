"""Elastic net objective, optimality conditions, oracle geometry, inner solver.

The solver here works on the whole dictionary it is given; the active-set
driver in :mod:`ensc.orgen` calls it on column subsets.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .config import get_tolerances
from .core import ElasticNetSolution
from .errors import (
    DegenerateOracle,
    DimensionMismatch,
    InvalidProblem,
    MaxIterationsExceeded,
    SingularSystem,
)

# below this smaller-side size the Lipschitz constant comes from an exact
# eigendecomposition of the Gram matrix instead of power iteration
_EXACT_SPECTRAL_LIMIT = 400


@dataclass(frozen=True)
class InnerSolverConfig:
    max_iterations: int = 100_000
    tolerance: float = 1e-10
    acceleration: bool = True
    polish: bool = True          # exact solve on a stable sign pattern
    check_every: int = 10
    chunk: int = 100

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidProblem("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InvalidProblem("tolerance must be positive")
        if self.check_every < 1 or self.chunk < 1:
            raise InvalidProblem("check_every and chunk must be >= 1")


@dataclass(frozen=True)
class OracleRegionQuery:
    delta: np.ndarray
    lam: float
    threshold: float

    @classmethod
    def from_delta(cls, delta, lam):
        delta = np.asarray(delta, dtype=np.float64).ravel()
        nd = np.linalg.norm(delta)
        if nd == 0.0:
            raise DegenerateOracle("oracle point is zero; region undefined")
        return cls(delta, float(lam), float(lam) / nd)


def _check_len(c, problem):
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.shape[0] != problem.dictionary.N:
        raise DimensionMismatch(
            f"coefficient length {c.shape[0]} != N={problem.dictionary.N}"
        )
    return c


def soft_threshold(v, lam):
    """Componentwise sgn(v) * max(|v| - lam, 0)."""
    if lam < 0:
        raise InvalidProblem("threshold must be non-negative")
    return _kernels.soft_threshold(np.asarray(v, dtype=np.float64), float(lam))


def objective(c, problem):
    c = _check_len(c, problem)
    p = problem
    r = p.b - p.A @ c
    return float(p.lam * np.abs(c).sum() + 0.5 * (1.0 - p.lam) * c @ c
                 + 0.5 * p.gamma * r @ r)


def oracle_point(c, problem):
    """delta = gamma * (b - A c)."""
    c = _check_len(c, problem)
    return problem.gamma * (problem.b - problem.A @ c)


def check_optimality(c, problem):
    """Infinity-norm defect of the optimality fixed point; 0 at the optimum."""
    c = _check_len(c, problem)
    g = problem.A.T @ oracle_point(c, problem)
    return float(_kernels.fixed_point_residual(c, g, problem.lam))


def in_oracle_region(atom, query, band=None):
    """Strict membership |<atom, delta>| > lam, excluding the boundary band."""
    band = get_tolerances().boundary if band is None else band
    return bool(abs(np.dot(atom, query.delta)) > query.lam + band)


def on_boundary(atom, query, band=None):
    band = get_tolerances().boundary if band is None else band
    return bool(abs(abs(np.dot(atom, query.delta)) - query.lam) <= band)


def oracle_region_mask(A, delta, lam, band=None):
    """Vectorized in_oracle_region over the columns of ``A``."""
    if not np.any(delta):
        raise DegenerateOracle("oracle point is zero; region undefined")
    band = get_tolerances().boundary if band is None else band
    return np.abs(A.T @ delta) > lam + band


def dual_feasibility_lambda1(delta, dictionary):
    """||A^T delta||_inf; the lam = 1 dual is feasible iff this is <= 1."""
    delta = np.asarray(delta, dtype=np.float64).ravel()
    if dictionary.N == 0:
        return 0.0
    return float(np.max(np.abs(dictionary.matrix.T @ delta)))


def _ridge(A, b, gamma, AAt=None):
    D, N = A.shape
    try:
        if N < D and AAt is None:
            M = np.eye(N) + gamma * (A.T @ A)
            return scipy.linalg.solve(M, gamma * (A.T @ b), assume_a="pos")
        M = np.eye(D) + gamma * (A @ A.T if AAt is None else AAt)
        w = scipy.linalg.solve(M, b, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(str(exc)) from exc
    return gamma * (A.T @ w)


def ridge_closed_form(problem):
    """Elastic net solution at lam = 0: gamma A^T (I + gamma A A^T)^{-1} b."""
    if not problem.gamma > 0:
        raise SingularSystem("gamma must be positive")
    return _ridge(problem.A, problem.b, problem.gamma)


def lipschitz(A):
    """Largest eigenvalue of A^T A (exact when small, power iteration else)."""
    D, N = A.shape
    if N == 0:
        return 0.0
    if min(D, N) <= _EXACT_SPECTRAL_LIMIT:
        G = A.T @ A if N <= D else A @ A.T
        return float(scipy.linalg.eigvalsh(G, subset_by_index=[G.shape[0] - 1,
                                                               G.shape[0] - 1])[0])
    rng = np.random.default_rng(0)
    v = rng.standard_normal(N)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(200):
        w = A.T @ (A @ v)
        new = float(np.linalg.norm(w))
        v = w / new
        if abs(new - est) <= 1e-7 * new:
            est = new
            break
        est = new
    # power iteration approaches from below; the solver backtracks if needed
    return est * 1.01


def _polish(A, b, lam, gamma, x):
    """Exact solution on the sign pattern of ``x`` if that pattern is optimal."""
    S = np.flatnonzero(x)
    if S.size == 0 or (lam == 1.0 and S.size > A.shape[0]):
        return None
    s = np.sign(x[S])
    AS = A[:, S]
    M = gamma * (AS.T @ AS)
    M[np.diag_indices_from(M)] += 1.0 - lam
    try:
        # a singular system (possible at lam = 1) fails the residual test later
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            cS = scipy.linalg.solve(M, gamma * (AS.T @ b) - lam * s, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        return None
    if not np.all(np.isfinite(cS)) or np.any(np.sign(cS) != s):
        return None
    out = np.zeros_like(x)
    out[S] = cS
    return out


def _solve_arrays(A, b, lam, gamma, cfg, x0=None):
    """Solve on raw arrays.

    Returns ``(c, iterations, residual, objective_trace)``; raises
    MaxIterationsExceeded when the tolerance is not reached.
    """
    N = A.shape[1]
    if N == 0:
        return np.zeros(0), 0, 0.0, [0.5 * gamma * float(b @ b)]
    A = np.asfortranarray(A)
    x = np.zeros(N) if x0 is None else np.array(x0, dtype=np.float64)
    if x0 is None and gamma * np.max(np.abs(A.T @ b)) <= lam:
        return x, 0, 0.0, [0.5 * gamma * float(b @ b)]
    L = lipschitz(A)
    if L <= 0.0:
        L = 1.0
    x_prev = x.copy()
    t = 1.0
    Ax = A @ x
    trace = [float(_kernels.objective(x, Ax, b, lam, gamma))]
    total = 0
    residual = np.inf
    last_support = None
    chunk = cfg.chunk if cfg.acceleration else 1
    while total < cfg.max_iterations:
        n_it = min(chunk, cfg.max_iterations - total)
        if not cfg.acceleration:
            t = 1.0
            x_prev = x
        x, x_prev, t, L, it, residual, fx = _kernels.apg_run(
            A, b, lam, gamma, x, x_prev, t, L, n_it, cfg.tolerance,
            min(cfg.check_every, n_it))
        total += it
        trace.append(float(fx))
        if residual <= cfg.tolerance:
            break
        if cfg.polish and (total % cfg.chunk == 0 or total >= cfg.max_iterations):
            support = np.flatnonzero(x)
            if last_support is not None and np.array_equal(support, last_support):
                cand = _polish(A, b, lam, gamma, x)
                if cand is not None:
                    Ac = A @ cand
                    fc = float(_kernels.objective(cand, Ac, b, lam, gamma))
                    rc = float(_kernels.fixed_point_residual(
                        cand, gamma * (A.T @ (b - Ac)), lam))
                    if rc <= cfg.tolerance and fc <= fx + 1e-13 * max(1.0, abs(fx)):
                        x, residual = cand, rc
                        trace.append(min(fc, float(fx)))
                        break
            last_support = support
    if residual > cfg.tolerance:
        raise MaxIterationsExceeded(residual, best=x, iterations=total)
    return x, total, residual, trace


def solve_full(problem, cfg=None, x0=None):
    """Solve the elastic net on the full dictionary.

    Parameters
    ----------
    problem : ElasticNetProblem
    cfg : InnerSolverConfig, optional
    x0 : array_like, optional
        Starting coefficients (defaults to zero).

    Returns
    -------
    ElasticNetSolution
        ``diagnostics['objective_trace']`` holds the objective after each
        chunk of iterations; it is non-increasing.
    """
    cfg = cfg or InnerSolverConfig()
    if x0 is not None:
        x0 = _check_len(x0, problem)
    try:
        c, its, _, trace = _solve_arrays(problem.A, problem.b, problem.lam,
                                         problem.gamma, cfg, x0)
    except MaxIterationsExceeded as exc:
        exc.best = ElasticNetSolution.build(exc.best, problem, exc.iterations)
        raise
    return ElasticNetSolution.build(c, problem, its,
                                    {"objective_trace": trace, "solver": "apg"})
