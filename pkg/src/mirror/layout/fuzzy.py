"""Weighted neighbor graph with per-point local scaling.

Each point gets a local scale: rho is the distance to its nearest neighbor,
and sigma is solved by bisection so the smoothed neighbor weights sum to
log2(k). Directed weights exp(-max(0, d - rho) / sigma) are then fuzzy-union
symmetrized: w_ij = w_i->j + w_j->i - w_i->j * w_j->i.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .base import FuzzyGraph, NeighborGraph

SMOOTH_TOL = 1e-5
MAX_BISECT_ITERS = 64
SIGMA_MIN = 1e-12
SIGMA_MAX = 1e6


def smooth_knn_calibration(distances: np.ndarray, k: int | None = None,
                           tol: float = SMOOTH_TOL,
                           max_iters: int = MAX_BISECT_ITERS) -> tuple[np.ndarray, np.ndarray]:
    """Solve per-point sigma so sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k).

    Vectorized bisection over all points at once, clamped to
    [SIGMA_MIN, SIGMA_MAX]. Returns (sigmas, rhos).
    """
    if k is None:
        k = distances.shape[1]
    rho = distances[:, 0].copy()
    target = np.log2(k)
    gaps = np.maximum(distances - rho[:, None], 0.0)

    lo = np.full(len(distances), SIGMA_MIN)
    hi = np.full(len(distances), SIGMA_MAX)
    sigma = (lo + hi) / 2.0
    active = np.ones(len(distances), dtype=bool)
    for _ in range(max_iters):
        psum = np.exp(-gaps[active] / sigma[active, None]).sum(axis=1)
        done = np.abs(psum - target) < tol
        too_big = psum > target
        ai = np.where(active)[0]
        hi[ai[too_big]] = sigma[ai[too_big]]
        lo[ai[~too_big]] = sigma[ai[~too_big]]
        active[ai[done]] = False
        if not active.any():
            break
        sigma[active] = (lo[active] + hi[active]) / 2.0
    return sigma, rho


def membership_strengths(graph: NeighborGraph, sigmas: np.ndarray,
                         rhos: np.ndarray) -> np.ndarray:
    """Directed weights, shape (N, k); a point's nearest neighbor gets 1.0."""
    gaps = np.maximum(graph.distances - rhos[:, None], 0.0)
    return np.exp(-gaps / sigmas[:, None])


def fuzzy_simplicial_set(graph: NeighborGraph) -> FuzzyGraph:
    """Calibrate, weight, and symmetrize the kNN graph."""
    n, k = graph.indices.shape
    sigmas, rhos = smooth_knn_calibration(graph.distances, k)
    weights = membership_strengths(graph, sigmas, rhos)

    rows = np.repeat(np.arange(n), k)
    directed = sp.coo_matrix((weights.ravel(), (rows, graph.indices.ravel())),
                             shape=(n, n)).tocsr()
    directed.sum_duplicates()
    transpose = directed.T.tocsr()
    sym = directed + transpose - directed.multiply(transpose)
    sym = sym.tocsr()
    sym.eliminate_zeros()
    return FuzzyGraph(matrix=sym, sigmas=sigmas, rhos=rhos)
