"""Normalized spectral clustering and clustering accuracy."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .errors import EigenSolverFailure, LengthMismatch

KMEANS_RESTARTS = 20
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-9
# dense eigensolver below this many vertices, Lanczos above
_DENSE_LIMIT = 2000


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray
    n_clusters: int
    kmeans_inertia: float
    eigengap: float
    degenerate: bool = False
    eigenvalues: np.ndarray = None
    eigen_residual: float = 0.0


def normalized_laplacian(W):
    """L = I - D^{-1/2} W D^{-1/2}; isolated vertices get unit degree."""
    W = sp.csr_matrix(W, dtype=np.float64)
    deg = np.asarray(W.sum(axis=1)).ravel()
    deg[deg <= 0] = 1.0
    s = sp.diags(1.0 / np.sqrt(deg))
    return (sp.identity(W.shape[0], format="csr") - s @ W @ s).tocsr()


def _bottom_eigs(L, k):
    n = L.shape[0]
    if n <= _DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(L.toarray(), subset_by_index=[0, k - 1])
    else:
        # largest eigenpairs of 2I - L are the smallest of L
        M = 2.0 * sp.identity(n, format="csr") - L
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(M, k=k, which="LA", tol=0.0,
                                                   v0=np.ones(n))
        except scipy.sparse.linalg.ArpackError as exc:
            raise EigenSolverFailure(str(exc)) from exc
        vals = 2.0 - vals
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    return vals, vecs


def spectral_cluster(W, n, seed=0):
    """Cluster the vertices of affinity ``W`` into ``n`` groups.

    Bottom-``n`` eigenvectors of the symmetric normalized Laplacian are
    row-normalized and fed to k-means (k-means++ seeding, 20 restarts).

    Parameters
    ----------
    W : Affinity, sparse matrix or ndarray
    n : int
    seed : int

    Returns
    -------
    ClusteringResult
        ``degenerate`` is set for an all-zero affinity, ``n < 2``, or when
        k-means leaves a cluster empty.
    """
    if hasattr(W, "to_sparse"):
        W = W.to_sparse()
    W = sp.csr_matrix(W, dtype=np.float64)
    N = W.shape[0]
    if n < 2 or W.nnz == 0 or not np.any(W.data):
        return ClusteringResult(np.zeros(N, dtype=np.int64), int(n), 0.0, 0.0,
                                degenerate=True)
    L = normalized_laplacian(W)
    k_eigs = min(n + 1, N)
    vals, vecs = _bottom_eigs(L, k_eigs)
    if not np.all(np.isfinite(vecs)):
        raise EigenSolverFailure("non-finite eigenvectors")
    eig_res = float(np.max(np.linalg.norm(L @ vecs - vecs * vals, axis=0)))
    gap = float(vals[n] - vals[n - 1]) if k_eigs > n else 0.0
    emb = vecs[:, :n]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    emb = emb / norms
    km = KMeans(n_clusters=n, init="k-means++", n_init=KMEANS_RESTARTS,
                max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL, random_state=seed)
    labels = km.fit_predict(emb).astype(np.int64)
    degenerate = np.unique(labels).size < n
    return ClusteringResult(labels, int(n), float(km.inertia_), gap, degenerate,
                            vals[:n], eig_res)


def clustering_accuracy(labels, truth):
    """Best matching rate between predicted and true labels (Hungarian)."""
    labels = np.asarray(labels).ravel()
    truth = np.asarray(truth).ravel()
    if labels.shape != truth.shape:
        raise LengthMismatch("labels and truth differ in length")
    if labels.size == 0:
        return 1.0
    pl, pi = np.unique(labels, return_inverse=True)
    tl, ti = np.unique(truth, return_inverse=True)
    conf = np.zeros((pl.size, tl.size), dtype=np.int64)
    np.add.at(conf, (pi, ti), 1)
    r, c = linear_sum_assignment(conf, maximize=True)
    return float(conf[r, c].sum()) / labels.size
