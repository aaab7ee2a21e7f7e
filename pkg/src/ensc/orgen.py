"""Oracle guided active-set elastic net solver (ORGEN).

Each outer iteration solves the elastic net on the columns of the current
active set, forms the oracle point ``delta = gamma (b - A_T c_T)`` and moves
to the set of atoms whose correlation with ``delta`` exceeds ``lam``.  The
loop stops once that set brings in no new atoms.
"""
import csv
import io
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import _kernels
from .config import get_tolerances
from .core import ElasticNetSolution, index_set
from .elastic_net import InnerSolverConfig, _ridge, _solve_arrays
from .errors import DegenerateOracle, InvalidProblem, MaxOuterIterationsExceeded


@dataclass(frozen=True)
class OrgenConfig:
    """Settings for :func:`orgen_solve`.

    ``max_active`` switches on the capped update, where each iteration admits
    only the best-correlated new atoms.  With ``exact=False`` reaching
    ``max_outer_iterations`` is expected and the current iterate is returned
    (this is what the clustering preset uses).
    """

    init_size: int = 100
    max_active: Optional[int] = None
    max_outer_iterations: int = 100
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)
    lambda_one_mode: Optional[bool] = None   # None: on iff lam == 1
    exact: bool = True

    def __post_init__(self):
        if self.init_size < 1:
            raise InvalidProblem("init_size must be >= 1")
        if self.max_active is not None and self.max_active < self.init_size:
            raise InvalidProblem("max_active must be >= init_size")
        if self.max_outer_iterations < 1:
            raise InvalidProblem("max_outer_iterations must be >= 1")

    @classmethod
    def clustering(cls, max_active=3000, init_size=100, **kw):
        """At most two outer iterations, capped updates."""
        return cls(init_size=init_size, max_active=max_active,
                   max_outer_iterations=2, exact=False, **kw)

    def lambda_one(self, lam):
        return (lam == 1.0) if self.lambda_one_mode is None else self.lambda_one_mode


@dataclass(frozen=True)
class OrgenIteration:
    iteration: int
    active_size: int
    objective: float
    support_size: int
    residual: float


@dataclass
class OrgenTrace:
    records: List[OrgenIteration] = field(default_factory=list)
    terminated: bool = False

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def outer_iterations(self):
        return len(self.records)

    def to_csv(self, stream=None):
        """Write ``iteration,active_size,objective,support_size,residual`` rows."""
        out = stream if stream is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["iteration", "active_size", "objective", "support_size",
                    "residual"])
        for r in self.records:
            w.writerow([r.iteration, r.active_size, repr(r.objective),
                        r.support_size, repr(r.residual)])
        return out.getvalue() if stream is None else None


def _top_by_magnitude(values, l, exclude=None):
    scores = np.abs(values).astype(np.float64)
    cand = np.arange(values.shape[0], dtype=np.int64)
    if exclude is not None:
        cand = cand[cand != exclude]
    return _kernels.top_n(scores, cand, int(l))


def init_active_set(problem, cfg=None):
    """Indices of the ``init_size`` largest |entries| of the ridge solution."""
    cfg = cfg or OrgenConfig()
    N = problem.dictionary.N
    if cfg.init_size >= N:
        return np.arange(N, dtype=np.int64)
    c0 = _ridge(problem.A, problem.b, problem.gamma)
    return _top_by_magnitude(c0, cfg.init_size)


def _next_active(scores, active, lam, cfg, support=None, band=None):
    band = get_tolerances().boundary if band is None else band
    region = np.flatnonzero(scores > lam + band)
    if support is not None and support.size:
        region = np.union1d(region, support)
    if cfg.max_active is None:
        return region
    old = np.isin(region, active, assume_unique=True)
    keep, new = region[old], region[~old]
    if new.size == 0:
        return keep
    n = max(cfg.max_active - keep.size, 1)
    return np.union1d(keep, _kernels.top_n(scores, new, n))


def active_set_update(delta, dictionary, active, lam, cfg=None, support=None):
    """Next active set from the oracle point of the current subproblem.

    Plain mode returns every atom strictly inside the oracle region.  With
    ``cfg.max_active`` set, in-region members of ``active`` are kept and the
    best-correlated new in-region atoms are admitted so the set stays within
    ``max_active`` (at least one new atom is admitted whenever one exists).
    ``support`` (the current subproblem support) is merged in, which is what
    the lam = 1 variant needs.
    """
    cfg = cfg or OrgenConfig()
    delta = np.asarray(delta, dtype=np.float64).ravel()
    if not np.any(delta):
        raise DegenerateOracle("oracle point is zero; region undefined")
    scores = np.abs(dictionary.matrix.T @ delta)
    sup = None if support is None else index_set(support)
    return _next_active(scores, index_set(active), lam, cfg, sup)


def _orgen_arrays(A, b, lam, gamma, cfg, exclude=None, AAt=None, active=None):
    """ORGEN on raw arrays.

    ``exclude`` removes one column from consideration (the self-expressive
    case), ``AAt`` is an optional precomputed ``A @ A.T`` used by the ridge
    initialization.  Returns ``(c, trace)`` with ``c`` of length ``N``.
    """
    N = A.shape[1]
    zero_tol = get_tolerances().zero
    available = N - (exclude is not None)
    if active is not None:
        T = index_set(active, N)
    elif cfg.init_size >= available:
        T = np.arange(N, dtype=np.int64)
        if exclude is not None:
            T = T[T != exclude]
    else:
        if exclude is not None and AAt is not None:
            xj = A[:, exclude]
            c0 = _ridge(A, b, gamma, AAt=AAt - np.outer(xj, xj))
            c0[exclude] = 0.0
        elif exclude is not None:
            keep = np.arange(N) != exclude
            c0 = np.zeros(N)
            c0[keep] = _ridge(A[:, keep], b, gamma)
        else:
            c0 = _ridge(A, b, gamma, AAt=AAt)
        T = _top_by_magnitude(c0, cfg.init_size, exclude)

    lambda_one = cfg.lambda_one(lam)
    trace = OrgenTrace()
    c_full = np.zeros(N)
    warm = None
    for k in range(cfg.max_outer_iterations):
        AT = np.asfortranarray(A[:, T])
        if T.size:
            cT, _, _, _ = _solve_arrays(AT, b, lam, gamma, cfg.inner, warm)
            cT[np.abs(cT) <= zero_tol] = 0.0
            ATc = AT @ cT
        else:
            cT, ATc = np.zeros(0), np.zeros_like(b)
        delta = gamma * (b - ATc)
        g = A.T @ delta
        if exclude is not None:
            g[exclude] = 0.0
        c_full = np.zeros(N)
        c_full[T] = cT
        f = float(_kernels.objective(cT, ATc, b, lam, gamma)) if T.size else \
            0.5 * gamma * float(b @ b)
        residual = float(_kernels.fixed_point_residual(c_full, g, lam))
        support = T[cT != 0.0]
        trace.records.append(OrgenIteration(k, int(T.size), f, int(support.size),
                                            residual))
        if not np.any(delta):
            trace.terminated = True
            break
        scores = np.abs(g)
        nxt = _next_active(scores, T, lam, cfg,
                           support if lambda_one else None)
        if np.all(np.isin(nxt, T, assume_unique=True)):
            trace.terminated = True
            break
        pos = np.searchsorted(nxt, T)
        pos_ok = pos < nxt.size
        warm = np.zeros(nxt.size)
        hit = np.zeros(T.size, dtype=bool)
        hit[pos_ok] = nxt[pos[pos_ok]] == T[pos_ok]
        warm[pos[hit]] = cT[hit]
        T = nxt
    if not trace.terminated and cfg.exact:
        raise MaxOuterIterationsExceeded(best=c_full, trace=trace)
    return c_full, trace


def orgen_solve(problem, cfg=None):
    """Solve the elastic net with the oracle guided active-set method.

    Returns
    -------
    solution : ElasticNetSolution
        Coefficients on the full dictionary (zeros off the final active set).
    trace : OrgenTrace
        One record per outer iteration.
    """
    cfg = cfg or OrgenConfig()
    try:
        c, trace = _orgen_arrays(problem.A, problem.b, problem.lam,
                                 problem.gamma, cfg)
    except MaxOuterIterationsExceeded as exc:
        exc.best = ElasticNetSolution.build(exc.best, problem,
                                            exc.trace.outer_iterations)
        raise
    sol = ElasticNetSolution.build(
        c, problem, trace.outer_iterations,
        {"solver": "orgen", "terminated": trace.terminated,
         "final_active_size": trace.records[-1].active_size},
    )
    return sol, trace
