"""Hot numeric kernels.

Each kernel is written once in numba-compatible numpy.  When numba is
importable and ``ENSC_USE_NUMBA`` is not ``0``/``false``/``no``/``off``, the
kernels are compiled with ``@njit``; otherwise the identical source runs as
plain numpy.  ``BACKEND`` records which path is active.  The flag is read at
import time, so switching backends needs a fresh interpreter.
"""
import math
import os

import numpy as np


def _numba_requested():
    flag = os.environ.get("ENSC_USE_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


def _soft_threshold(v, thr):
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def _objective(x, Ax, b, lam, gamma):
    r = b - Ax
    return (lam * np.sum(np.abs(x)) + 0.5 * (1.0 - lam) * np.dot(x, x)
            + 0.5 * gamma * np.dot(r, r))


def _residual(x, g, lam):
    """Fixed-point defect given ``g = A^T delta``.

    For lam < 1 this is ||(1-lam) x - T_lam(g)||_inf.  For lam = 1 it is the
    max of |g_j - sgn(x_j)| on the support and (|g_j| - 1)_+ off it.
    """
    if x.shape[0] == 0:
        return 0.0
    if lam < 1.0:
        st = np.sign(g) * np.maximum(np.abs(g) - lam, 0.0)
        return np.max(np.abs((1.0 - lam) * x - st))
    on = np.abs(g - np.sign(x))
    off = np.maximum(np.abs(g) - 1.0, 0.0)
    return np.max(np.where(x != 0.0, on, off))


def _prox(v, step, lam):
    return soft_threshold(v, step * lam) / (1.0 + step * (1.0 - lam))


def _apg_run(A, b, lam, gamma, x, x_prev, t, L, max_iter, tol, check_every):
    """Monotone accelerated proximal gradient on the elastic net objective.

    State ``(x, x_prev, t, L)`` goes in and comes back out so the caller can
    run the loop in chunks.  The step is ``1/(gamma*L)``; ``L`` doubles when a
    plain proximal step violates the quadratic majorization.  Returns
    ``(x, x_prev, t, L, iterations, residual, objective)``; ``residual`` is
    refreshed every ``check_every`` iterations and on exit.
    """
    Ax = np.dot(A, x)
    Ax_prev = np.dot(A, x_prev)
    fx = objective(x, Ax, b, lam, gamma)
    L_cap = L * 1e6
    residual = np.inf
    it = 0
    while it < max_iter:
        it += 1
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_next
        y = x + mom * (x - x_prev)
        Ay = Ax + mom * (Ax - Ax_prev)
        step = 1.0 / (gamma * L)
        z = prox(y - step * gamma * np.dot(A.T, Ay - b), step, lam)
        Az = np.dot(A, z)
        fz = objective(z, Az, b, lam, gamma)
        if fz <= fx:
            x_prev, Ax_prev = x, Ax
            x, Ax, fx = z, Az, fz
            t = t_next
        else:
            # restart momentum; plain proximal step from x.  The smooth part is
            # quadratic, so the majorization test ||A d||^2 <= L ||d||^2 is
            # exact and free of the cancellation in comparing objectives.
            t = 1.0
            grad = gamma * np.dot(A.T, Ax - b)
            while True:
                step = 1.0 / (gamma * L)
                z = prox(x - step * grad, step, lam)
                Az = np.dot(A, z)
                d = z - x
                Ad = Az - Ax
                if np.dot(Ad, Ad) <= L * np.dot(d, d) * (1.0 + 1e-12) or L >= L_cap:
                    break
                L *= 2.0
            x_prev, Ax_prev = x, Ax
            x, Ax = z, Az
            fx = objective(z, Az, b, lam, gamma)
        if it % check_every == 0 or it == max_iter:
            residual = fixed_point_residual(x, gamma * np.dot(A.T, b - Ax), lam)
            if residual <= tol:
                break
    return x, x_prev, t, L, it, residual, fx


def _top_n(scores, candidates, n):
    """The ``n`` entries of ``candidates`` with the largest ``scores``.

    Ties go to the lower index; the result is sorted by index.
    """
    if n >= candidates.shape[0]:
        return candidates.copy()
    order = np.argsort(-scores[candidates], kind="mergesort")
    return np.sort(candidates[order[:n]])


BACKEND = "numpy"
soft_threshold = _soft_threshold
objective = _objective
fixed_point_residual = _residual
prox = _prox
apg_run = _apg_run
top_n = _top_n

if _numba_requested():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is an optional accelerator
        njit = None
    if njit is not None:
        _jit = njit(cache=True, nogil=True)
        soft_threshold = _jit(_soft_threshold)
        objective = _jit(_objective)
        fixed_point_residual = _jit(_residual)
        prox = _jit(_prox)
        apg_run = _jit(_apg_run)
        # top_n stays on numpy: its argsort beats the compiled mergesort
        BACKEND = "numba"
