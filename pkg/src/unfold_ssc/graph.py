"""K-nearest-neighbor graphs and the structure-preservation loss."""

from __future__ import annotations

import numpy as np


def pairwise_sq_dists(points: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between columns of ``points``.

    Computed from explicit differences (in column chunks) rather than the
    gram-matrix identity, so the result is exactly symmetric and duplicate
    columns get an exact zero. That keeps tie-breaking well defined.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[1]
    out = np.empty((n, n))
    step = max(1, min(n, 4_000_000 // max(1, points.shape[0] * n)))
    for start in range(0, n, step):
        stop = min(n, start + step)
        diff = points[:, :, np.newaxis] - points[:, np.newaxis, start:stop]
        out[:, start:stop] = np.einsum("fij,fij->ij", diff, diff)
    return out


def knn_adjacency(points: np.ndarray, k: int) -> np.ndarray:
    """Symmetric binary k-nearest-neighbor adjacency over column samples.

    Each sample is linked to its k nearest other samples (Euclidean,
    distance ties broken toward the smaller index); the union of directed
    links is symmetrized. Diagonal stays zero.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be 2-D, got {points.ndim}-D")
    n = points.shape[1]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    d2 = pairwise_sq_dists(points)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    adj[rows, order.reshape(-1)] = 1.0
    adj = np.maximum(adj, adj.T)
    np.fill_diagonal(adj, 0.0)
    return adj


def laplacian(adjacency: np.ndarray) -> np.ndarray:
    """Combinatorial graph Laplacian D - A."""
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.allclose(adjacency, adjacency.T):
        raise ValueError("adjacency must be symmetric")
    return np.diag(adjacency.sum(axis=1)) - adjacency


def structure_loss(C: np.ndarray, lap: np.ndarray, adjacency: np.ndarray | None = None):
    """Neighborhood-coherence penalty on representation columns.

    Value is sum_{ij} A_ij * ||C[:, i] - C[:, j]||^2, evaluated through the
    equivalent trace form 2 * tr(C L C^T); the gradient in C is 4 * C @ L.
    ``adjacency`` is only shape-checked when given; the Laplacian carries
    all the information the fast form needs.

    Returns (value, grad).
    """
    C = np.asarray(C, dtype=np.float64)
    lap = np.asarray(lap, dtype=np.float64)
    if C.shape[1] != lap.shape[0] or lap.shape[0] != lap.shape[1]:
        raise ValueError(f"shape mismatch: C {C.shape} vs laplacian {lap.shape}")
    if adjacency is not None and np.shape(adjacency) != lap.shape:
        raise ValueError("adjacency and laplacian shapes differ")
    CL = C @ lap
    value = 2.0 * float(np.sum(CL * C))
    grad = 4.0 * CL
    return value, grad
