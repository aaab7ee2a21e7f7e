"""Numerical checks of the oracle-region geometry behind subspace clustering.

Everything here consumes exact elastic net solutions: the quantities
(oracle point, its norm, the nearest-neighbour coherence kappa) are only
meaningful at the optimum.
"""
import csv
import io
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .core import Dictionary, ElasticNetProblem, normalize_columns
from .elastic_net import InnerSolverConfig, solve_full
from .errors import LengthMismatch
from .orgen import OrgenConfig, _orgen_arrays, orgen_solve
from .selfexpr import EnscConfig, self_expressive
from .synth import random_subspaces

RATIO_BOUND_SLACK = 1e-10

# the 2-decimal example where lam/||delta|| is not monotone in lam
NONMONOTONE_POINT = np.array([0.22, 0.72, 0.66])
NONMONOTONE_ATOMS = np.array([
    [-0.55, -0.82, -0.05, 0.22],
    [0.22, 0.57, 0.84, 0.78],
    [-0.80, 0.00, 0.55, 0.58],
])

PHASE_GRID_GEOMETRY = {"D": 20, "n": 4, "dim": 8}
PHASE_GRID_SIZES = (100, 200, 400, 800, 1600, 3200)
PHASE_GRID_LAMBDAS = (0.99, 0.95, 0.90, 0.80, 0.60, 0.40, 0.20, 0.10)


def covering_bound(kappa, lam):
    """kappa^2 / (kappa + (1-lam)/lam), defined as 0 at lam = 0."""
    if lam == 0.0:
        return 0.0
    return kappa * kappa / (kappa + (1.0 - lam) / lam)


@dataclass(frozen=True)
class OracleDiagnostics:
    lam: float
    gamma: float
    delta: np.ndarray
    delta_norm: float
    ratio: float          # lam / ||delta||
    kappa: float          # max coherence of delta with the in-subspace atoms
    bound_rhs: float      # covering_bound(kappa, lam)
    delta_bound: float    # (lam*kappa + 1 - lam) / kappa^2

    def as_record(self):
        return {"lambda": self.lam, "gamma": self.gamma,
                "delta_norm": self.delta_norm, "ratio": self.ratio,
                "kappa": self.kappa, "bound_rhs": self.bound_rhs,
                "delta_bound": self.delta_bound}


def _diagnostics_from_delta(delta, atoms, lam, gamma):
    nd = float(np.linalg.norm(delta))
    if nd > 0 and atoms.shape[1]:
        kappa = float(np.max(np.abs(atoms.T @ delta)) / nd)
    else:
        kappa = 0.0
    ratio = lam / nd if nd > 0 else np.inf
    dbound = (lam * kappa + 1.0 - lam) / kappa ** 2 if kappa > 0 else np.inf
    return OracleDiagnostics(lam, gamma, delta, nd, ratio, kappa,
                             covering_bound(kappa, lam), dbound)


def oracle_diagnostics(x, same_subspace_atoms, lam, gamma, solver="full",
                       tolerance=1e-12):
    """Solve the in-subspace elastic net exactly and summarize its oracle point.

    Parameters
    ----------
    x : array_like
        The point (unit norm).
    same_subspace_atoms : Dictionary
        The other points of its subspace.
    solver : {'full', 'orgen'}
        Both run to full accuracy; 'orgen' is much faster on large sets.
    """
    atoms = same_subspace_atoms
    p = ElasticNetProblem(np.asarray(x, dtype=np.float64), atoms, lam, gamma)
    inner = InnerSolverConfig(tolerance=tolerance)
    if solver == "orgen":
        sol, _ = orgen_solve(p, OrgenConfig(inner=inner))
    else:
        sol = solve_full(p, inner)
    return _diagnostics_from_delta(sol.oracle_point, atoms.matrix, lam, gamma)


def check_theorem2(diag, inradius_lower):
    """lam/||delta|| >= r^2 / (r + (1-lam)/lam) for an inradius lower bound r."""
    rhs = covering_bound(inradius_lower, diag.lam)
    return bool(diag.ratio >= rhs - RATIO_BOUND_SLACK)


def check_theorem4(diag, out_of_subspace_atoms, strict=False):
    """max_k mu(x_k, delta) <= (or <, when strict) kappa^2/(kappa + (1-lam)/lam)."""
    M = (out_of_subspace_atoms.matrix if isinstance(out_of_subspace_atoms, Dictionary)
         else np.asarray(out_of_subspace_atoms))
    if M.shape[1] == 0:
        return True
    if diag.delta_norm == 0:
        return True
    lhs = float(np.max(np.abs(M.T @ diag.delta))) / diag.delta_norm
    return bool(lhs < diag.bound_rhs if strict else lhs <= diag.bound_rhs)


def delta_norm_bound_holds(diag, slack=1e-8):
    return bool(diag.delta_norm <= diag.delta_bound + slack)


def inradius_mc_upper(atoms, n_directions=10_000, seed=0):
    """Monte-Carlo upper bound on the inradius of conv{+-a_j}.

    Uses min over random directions v in span(atoms) of max_j mu(a_j, v); the
    true value is the minimum over all directions, so every sample
    over-estimates it.
    """
    A = atoms.matrix if isinstance(atoms, Dictionary) else np.asarray(atoms)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    U = U[:, s > 1e-10 * s[0]]
    rng = np.random.default_rng(seed)
    V = U @ rng.standard_normal((U.shape[1], n_directions))
    V /= np.linalg.norm(V, axis=0)
    return float(np.min(np.max(np.abs(A.T @ V), axis=0)))


def planted_cross_polytope(d, D=None):
    """Atoms e_1..e_d (and their negatives implicitly); inradius 1/sqrt(d)."""
    D = d if D is None else D
    A = np.zeros((D, d))
    A[np.arange(d), np.arange(d)] = 1.0
    return Dictionary(np.asfortranarray(A)), 1.0 / np.sqrt(d)


def nonmonotone_ratio_data():
    """Point and atoms (renormalized) whose ratio falls as lambda grows."""
    x = NONMONOTONE_POINT / np.linalg.norm(NONMONOTONE_POINT)
    return x, normalize_columns(NONMONOTONE_ATOMS)


def subspace_preserving_rate(model, truth, include_empty=False):
    """Percentage of columns whose support stays inside their own subspace.

    Columns with empty support are excluded by default (their count is
    returned as well); with ``include_empty`` they count as preserving.

    Returns
    -------
    (rate_percent, n_empty)
    """
    C = model.coefficients if hasattr(model, "coefficients") else model
    truth = np.asarray(truth).ravel()
    if truth.shape[0] != C.shape[1]:
        raise LengthMismatch("truth length does not match the model")
    C = C.tocsc() if hasattr(C, "tocsc") else np.asarray(C)
    good = empty = total = 0
    for j in range(C.shape[1]):
        if hasattr(C, "indptr"):
            rows = C.indices[C.indptr[j]:C.indptr[j + 1]][
                C.data[C.indptr[j]:C.indptr[j + 1]] != 0]
        else:
            rows = np.flatnonzero(C[:, j])
        if rows.size == 0:
            empty += 1
            if not include_empty:
                continue
            good += 1
        elif np.all(truth[rows] == truth[j]):
            good += 1
        total += 1
    rate = 100.0 * good / total if total else 100.0
    return rate, empty


def condition_rate(X, truth, lam, gammas, strict=None):
    """Percentage of points meeting the kappa-based sufficient condition.

    ``gammas`` holds each point's gamma (the same values the experiment used).
    Returns ``(rate_percent, passed_mask)``.
    """
    A = X.matrix
    truth = np.asarray(truth)
    strict = (lam == 1.0) if strict is None else strict
    cfg = OrgenConfig(inner=InnerSolverConfig(tolerance=1e-12))
    N = A.shape[1]
    passed = np.zeros(N, dtype=bool)
    for ell in np.unique(truth):
        idx = np.flatnonzero(truth == ell)
        other = np.flatnonzero(truth != ell)
        Aell = np.asfortranarray(A[:, idx])
        Aout = A[:, other]
        G = Aell @ Aell.T
        for pos, j in enumerate(idx):
            gamma = gammas[j]
            if not np.isfinite(gamma) or idx.size < 2:
                continue
            b = A[:, j]
            c, _ = _orgen_arrays(Aell, b, lam, gamma, cfg, exclude=pos, AAt=G)
            delta = gamma * (b - Aell @ c)
            nd = np.linalg.norm(delta)
            if nd == 0:
                continue
            corr = np.abs(Aell.T @ delta)
            corr[pos] = 0.0
            kappa = corr.max() / nd
            rhs = covering_bound(kappa, lam)
            lhs = np.max(np.abs(Aout.T @ delta)) / nd if other.size else 0.0
            passed[j] = lhs < rhs if strict else lhs <= rhs
    return 100.0 * passed.mean(), passed


@dataclass
class PhaseCell:
    N: int
    lam: float
    experimental_pct: float
    predicted_pct: float
    seeds: int
    violations: int = 0      # condition held but the representation was wrong
    empty: int = 0


@dataclass
class PhaseGridResult:
    cells: List[PhaseCell] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def cell(self, N, lam):
        for c in self.cells:
            if c.N == N and abs(c.lam - lam) < 1e-12:
                return c
        raise KeyError((N, lam))

    def row_average(self, lam, which="experimental_pct"):
        vals = [getattr(c, which) for c in self.cells if abs(c.lam - lam) < 1e-12]
        return float(np.mean(vals))

    def to_csv(self, stream=None):
        out = stream if stream is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["N", "lambda", "experimental_pct", "predicted_pct", "seeds"])
        for c in self.cells:
            w.writerow([c.N, c.lam, f"{c.experimental_pct:.6f}",
                        f"{c.predicted_pct:.6f}", c.seeds])
        return out.getvalue() if stream is None else None


def cell_seed(master, N, lam, trial):
    """Deterministic per-cell seed from (master, N, lambda, trial)."""
    ss = np.random.SeedSequence([int(master), int(N), int(round(lam * 1e6)),
                                 int(trial)])
    return int(ss.generate_state(1)[0])


def phase_cell(N, lam, seeds, alpha=10.0, master_seed=0, geometry=None):
    """Experimental vs predicted subspace-preserving percentages for one cell."""
    geom = dict(PHASE_GRID_GEOMETRY if geometry is None else geometry)
    n = geom["n"]
    exp_rates, pred_rates = [], []
    violations = empty = 0
    for trial in range(seeds):
        ds = random_subspaces(geom["D"], n, geom["dim"], N // n,
                              seed=cell_seed(master_seed, N, lam, trial))
        cfg = EnscConfig(lam=lam, alpha=alpha,
                         orgen=OrgenConfig(inner=InnerSolverConfig(tolerance=1e-12)))
        model = self_expressive(ds.X, cfg)
        rate, n_empty = subspace_preserving_rate(model, ds.truth)
        pred, passed = condition_rate(ds.X, ds.truth, lam, model.gammas)
        C = model.coefficients
        for j in np.flatnonzero(passed):
            rows = C.indices[C.indptr[j]:C.indptr[j + 1]]
            if np.any(ds.truth[rows] != ds.truth[j]):
                violations += 1
        exp_rates.append(rate)
        pred_rates.append(pred)
        empty += n_empty
    return PhaseCell(N, lam, float(np.mean(exp_rates)), float(np.mean(pred_rates)),
                     seeds, violations, empty)


def phase_grid(N_list, lambdas, seeds, alpha=10.0, master_seed=0, geometry=None):
    """Run :func:`phase_cell` over every (N, lambda) pair."""
    res = PhaseGridResult(params={"N": list(N_list), "lambdas": list(lambdas),
                                  "seeds": seeds, "alpha": alpha,
                                  "master_seed": master_seed,
                                  "geometry": dict(PHASE_GRID_GEOMETRY if geometry is None
                                                   else geometry)})
    for lam in lambdas:
        for N in N_list:
            res.cells.append(phase_cell(N, lam, seeds, alpha, master_seed, geometry))
    return res


# verification suites: each returns {"passed": bool, "failures": [...], ...}

def nonmonotone_ratio_suite(gamma=10.0, lams=(0.88, 0.95)):
    """lam/||delta|| at the smaller lambda must exceed that at the larger one."""
    x, atoms = nonmonotone_ratio_data()
    lo, hi = (oracle_diagnostics(x, atoms, lam, gamma) for lam in lams)
    ok = lo.ratio > hi.ratio
    return {"passed": bool(ok), "ratios": {str(lams[0]): lo.ratio, str(lams[1]): hi.ratio},
            "failures": [] if ok else ["ratio not larger at the smaller lambda"]}


def random_in_subspace_instance(rng, D=20, d=5, n_atoms=40):
    """A point and ``n_atoms`` atoms drawn uniformly from one random d-dim subspace."""
    U, _ = np.linalg.qr(rng.standard_normal((D, d)))
    Y = U @ rng.standard_normal((d, n_atoms + 1))
    Y /= np.linalg.norm(Y, axis=0)
    return Y[:, 0].copy(), Dictionary(np.asfortranarray(Y[:, 1:]))


def delta_norm_bound_suite(trials=100, lambdas=(0.1, 0.5, 0.9, 1.0), seed=0):
    """||delta|| <= (lam kappa + 1 - lam)/kappa^2 on random in-subspace solves."""
    rng = np.random.default_rng(seed)
    failures, margins = [], []
    for t in range(trials):
        lam = lambdas[t % len(lambdas)]
        x, atoms = random_in_subspace_instance(rng)
        gamma = float(np.exp(rng.uniform(np.log(1.0), np.log(100.0))))
        diag = oracle_diagnostics(x, atoms, lam, gamma)
        margins.append(diag.delta_bound - diag.delta_norm)
        if not delta_norm_bound_holds(diag):
            failures.append({"trial": t, "lambda": lam, "gamma": gamma,
                             "delta_norm": diag.delta_norm,
                             "bound": diag.delta_bound})
    return {"passed": not failures, "trials": trials, "failures": failures,
            "min_margin": float(np.min(margins))}


def planted_inradius_suite(trials=100, lambdas=(0.1, 0.5, 0.9, 0.99), seed=0):
    """Ratio bound with the exact inradius 1/sqrt(d) of the planted cross-polytope."""
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        lam = lambdas[t % len(lambdas)]
        d = int(rng.integers(2, 9))
        atoms, r = planted_cross_polytope(d, D=d + 3)
        x = np.zeros(d + 3)
        x[:d] = rng.standard_normal(d)
        x /= np.linalg.norm(x)
        gamma = float(np.exp(rng.uniform(np.log(1.0), np.log(100.0))))
        diag = oracle_diagnostics(x, atoms, lam, gamma)
        if not check_theorem2(diag, r):
            failures.append({"trial": t, "lambda": lam, "d": d, "ratio": diag.ratio,
                             "rhs": covering_bound(r, lam)})
    return {"passed": not failures, "trials": trials, "failures": failures}


def phase_grid_suite(grid, slack=2.0):
    """Cellwise predicted <= experimental + slack and no sufficiency violations."""
    failures = []
    for c in grid.cells:
        if c.predicted_pct > c.experimental_pct + slack:
            failures.append({"N": c.N, "lambda": c.lam, "issue": "predicted exceeds experimental",
                             "experimental_pct": c.experimental_pct,
                             "predicted_pct": c.predicted_pct})
        if c.violations:
            failures.append({"N": c.N, "lambda": c.lam, "issue": "sufficiency violated",
                             "count": c.violations})
    return {"passed": not failures, "cells": len(grid.cells), "failures": failures}
