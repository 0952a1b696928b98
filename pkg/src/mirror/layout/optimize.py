"""2D embedding optimization over the weighted neighbor graph.

The low-dimensional kernel is 1 / (1 + a * r^(2b)) with (a, b) fitted by
least squares so the kernel tracks the min_dist target curve. Optimization
is stochastic gradient descent on the cross-entropy surrogate: attractive
updates along edges sampled proportionally to their weight, plus a fixed
number of uniform negative (repulsive) samples per attraction. The learning
rate decays linearly to zero.

Updates are epoch-batched: every edge due in an epoch contributes a gradient
computed from the epoch-start positions, and the accumulated deltas are
applied once per epoch. With the fixed RNG stream this makes layouts a pure
function of (input, config): same seed, bit-identical coordinates.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components

from .base import FuzzyGraph, LayoutConfig

GRAD_CLIP = 4.0
REPULSION_STRENGTH = 1.0  # gamma
_INIT_SCALE = 10.0
_COMPONENT_GAP = 2.5
_SPECTRAL_ITERS = 150


def low_dim_kernel(r: np.ndarray, a: float, b: float) -> np.ndarray:
    return 1.0 / (1.0 + a * r ** (2.0 * b))


def min_dist_target_curve(r: np.ndarray, min_dist: float, spread: float = 1.0) -> np.ndarray:
    """The membership curve the kernel is fitted to: flat 1 inside min_dist,
    exponential decay beyond it."""
    y = np.ones_like(r)
    beyond = r >= min_dist
    y[beyond] = np.exp(-(r[beyond] - min_dist) / spread)
    return y


def find_curve_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Least-squares fit of (a, b) to the min_dist target curve."""
    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = min_dist_target_curve(xv, min_dist, spread)
    params, _ = curve_fit(low_dim_kernel, xv, yv, p0=(1.0, 1.0), maxfev=10_000)
    return float(params[0]), float(params[1])


def _component_spectral_coords(w: sp.csr_matrix, rng: np.random.Generator) -> np.ndarray:
    """Leading non-trivial eigenvectors of the normalized adjacency.

    Orthogonal (power) iteration on D^-1/2 W D^-1/2, shifted to keep the
    spectrum non-negative; the first eigenvector is the trivial D^1/2 * 1
    direction and is dropped.
    """
    n = w.shape[0]
    degrees = np.asarray(w.sum(axis=1)).ravel()
    degrees[degrees == 0.0] = 1.0
    d_inv_sqrt = 1.0 / np.sqrt(degrees)
    m = sp.diags(d_inv_sqrt) @ w @ sp.diags(d_inv_sqrt)

    v = rng.normal(size=(n, 3))
    for _ in range(_SPECTRAL_ITERS):
        v = 0.5 * (m @ v + v)  # (M + I)/2 keeps eigenvalues in [0, 1]
        v, _ = np.linalg.qr(v)
    # Order by Ritz value, descending; column 0 is the trivial direction.
    ritz = np.einsum("nj,nj->j", v, m @ v)
    order = np.argsort(-ritz)
    return v[:, order[1:3]]


def _scale_to_box(coords: np.ndarray, extent: float = _INIT_SCALE) -> np.ndarray:
    coords = coords - coords.min(axis=0)
    span = coords.max(axis=0)
    span[span == 0.0] = 1.0
    return extent * coords / span


def spectral_init(graph: sp.csr_matrix, seed: int) -> np.ndarray:
    """Per-component spectral coordinates, components tiled left to right."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n = graph.shape[0]
    n_comp, labels = connected_components(graph, directed=False)
    coords = np.zeros((n, 2))
    x_offset = 0.0
    for comp in range(n_comp):
        members = np.where(labels == comp)[0]
        m = len(members)
        if m == 1:
            block = np.zeros((1, 2))
        elif m == 2:
            block = np.array([[0.0, 0.0], [1.0, 0.0]])
        elif m <= 4:
            block = _scale_to_box(rng.normal(size=(m, 2)), extent=2.0)
        else:
            sub = graph[members][:, members].tocsr()
            block = _scale_to_box(_component_spectral_coords(sub, rng))
        block = block - block.min(axis=0) if m > 1 else block
        block[:, 0] += x_offset
        coords[members] = block
        x_offset = coords[members, 0].max() + _COMPONENT_GAP
    return coords


def optimize_layout(graph: FuzzyGraph | sp.spmatrix, config: LayoutConfig,
                    init_coords: np.ndarray | None = None) -> np.ndarray:
    """Optimize 2D coordinates for the weighted graph. Deterministic per seed."""
    matrix = graph.matrix if isinstance(graph, FuzzyGraph) else graph
    n = matrix.shape[0]
    if n == 1:
        return np.zeros((1, 2))
    if n == 2:
        return np.array([[0.0, 0.0], [1.0, 0.0]])

    n_epochs = config.resolve_epochs(n)
    a, b = find_curve_params(config.min_dist)
    rng = np.random.Generator(np.random.PCG64(config.seed))

    if init_coords is not None:
        coords = np.array(init_coords, dtype=np.float64)
    elif config.init == "spectral":
        coords = spectral_init(matrix, config.seed)
        coords = coords + rng.normal(scale=1e-4, size=coords.shape)
    else:
        coords = rng.uniform(-10.0, 10.0, size=(n, 2))
    coords = _scale_to_box(coords)

    coo = matrix.tocoo()
    head = coo.row.astype(np.int64)
    tail = coo.col.astype(np.int64)
    weights = coo.data.astype(np.float64)
    keep = weights >= weights.max() / n_epochs  # edges too weak to ever fire
    head, tail, weights = head[keep], tail[keep], weights[keep]

    epochs_per_sample = weights.max() / weights
    epoch_of_next = epochs_per_sample.copy()
    nsr = config.negative_sample_rate

    for epoch in range(n_epochs):
        alpha = config.learning_rate * (1.0 - epoch / n_epochs)
        due = epoch_of_next <= epoch
        if due.any():
            h = head[due]
            t = tail[due]
            diff = coords[h] - coords[t]
            r2 = np.einsum("ij,ij->i", diff, diff)

            att = np.zeros_like(r2)
            pos = r2 > 0.0
            rp = r2[pos]
            att[pos] = (-2.0 * a * b * rp ** (b - 1.0)) / (a * rp ** b + 1.0)
            grad = np.clip(att[:, None] * diff, -GRAD_CLIP, GRAD_CLIP)

            upd_idx = [h, t]
            upd_val = [grad * alpha, -grad * alpha]

            negatives = rng.integers(0, n, size=(len(h), nsr))
            for c in range(nsr):
                neg = negatives[:, c]
                dn = coords[h] - coords[neg]
                r2n = np.einsum("ij,ij->i", dn, dn)
                rep = (2.0 * REPULSION_STRENGTH * b) / (
                    (0.001 + r2n) * (a * r2n ** b + 1.0))
                gn = np.clip(rep[:, None] * dn, -GRAD_CLIP, GRAD_CLIP)
                coincident = (r2n == 0.0) & (h != neg)
                gn[coincident] = GRAD_CLIP  # shove exactly-overlapping strangers apart
                gn[(r2n == 0.0) & (h == neg)] = 0.0
                upd_idx.append(h)
                upd_val.append(gn * alpha)

            all_idx = np.concatenate(upd_idx)
            all_val = np.concatenate(upd_val)
            delta = np.stack([np.bincount(all_idx, weights=all_val[:, 0], minlength=n),
                              np.bincount(all_idx, weights=all_val[:, 1], minlength=n)],
                             axis=1)
            coords += delta
            epoch_of_next[due] += epochs_per_sample[due]

    return np.nan_to_num(coords, copy=False)
