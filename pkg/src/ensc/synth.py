"""Random union-of-subspaces data."""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .core import Dictionary, normalize_columns
from .errors import InvalidDims


@dataclass(frozen=True)
class SubspaceDataset:
    X: Dictionary
    truth: np.ndarray
    bases: List[np.ndarray]
    config: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def independent(self):
        """True when the dimensions add up to at most D (generic independence)."""
        return sum(U.shape[1] for U in self.bases) <= self.X.D

    def sidecar(self):
        return {"labels": self.truth.tolist(), "config": self.config,
                "seed": self.seed, "independent": self.independent}


def random_unit_sphere(D, N, seed=0):
    """N i.i.d. points uniform on the unit sphere of R^D (Gaussian, normalized)."""
    if D < 1 or N < 1:
        raise InvalidDims("D and N must be >= 1")
    rng = np.random.default_rng(seed)
    return normalize_columns(rng.standard_normal((D, N)))


def random_subspaces(D, n, dims, points_per, seed=0, noise_sigma=0.0):
    """Sample points from ``n`` random subspaces of R^D.

    Parameters
    ----------
    D : int
        Ambient dimension.
    n : int
        Number of subspaces.
    dims, points_per : int or sequence of int
        Dimension of, and number of points on, each subspace.
    seed : int
    noise_sigma : float
        Standard deviation of ambient Gaussian noise added before the final
        normalization (0 gives exact containment).
    """
    dims = [int(dims)] * n if np.isscalar(dims) else [int(d) for d in dims]
    points_per = ([int(points_per)] * n if np.isscalar(points_per)
                  else [int(p) for p in points_per])
    if len(dims) != n or len(points_per) != n:
        raise InvalidDims("dims and points_per must have one entry per subspace")
    if any(d < 1 or d >= D for d in dims):
        raise InvalidDims(f"every subspace dimension must lie in [1, {D})")
    if any(p < 1 for p in points_per):
        raise InvalidDims("each subspace needs at least one point")
    if noise_sigma < 0:
        raise InvalidDims("noise_sigma must be non-negative")
    rng = np.random.default_rng(seed)
    bases, blocks, labels = [], [], []
    for ell, (d, p) in enumerate(zip(dims, points_per)):
        U, _ = np.linalg.qr(rng.standard_normal((D, d)))
        coords = rng.standard_normal((d, p))
        coords /= np.linalg.norm(coords, axis=0)
        bases.append(U)
        blocks.append(U @ coords)
        labels.append(np.full(p, ell, dtype=np.int64))
    X = np.hstack(blocks)
    if noise_sigma > 0:
        X = X + noise_sigma * rng.standard_normal(X.shape)
    config = {"D": D, "n": n, "dims": dims, "points_per": points_per,
              "noise_sigma": noise_sigma}
    return SubspaceDataset(normalize_columns(X), np.concatenate(labels), bases,
                           config, seed)
