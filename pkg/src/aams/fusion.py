"""Attention map filtering, 1-D k-means over attention values, and stroke fusion."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, ValidationError
from .tensor_core import DTYPE, as_tensor, blur2d

log = logging.getLogger(__name__)


def attention_filter(a, sigma=1.0):
    """|A| -> channel mean -> Gaussian blur -> min-max to [0, 1].

    Returns a float64 (H, W) grid.  A constant grid before normalization maps
    to all zeros.
    """
    a = as_tensor(a, "attention feature")
    grid = np.abs(a.astype(np.float64)).mean(axis=0)
    grid = blur2d(grid, sigma)
    lo, hi = grid.min(), grid.max()
    if hi <= lo:
        return np.zeros_like(grid)
    out = (grid - lo) / (hi - lo)
    out[grid == lo] = 0.0
    out[grid == hi] = 1.0
    return out


def attention_to_uint8(attention_map):
    return np.clip(np.rint(255.0 * np.asarray(attention_map)), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class ClusterResult:
    centers: np.ndarray  # descending
    objective: float
    history: tuple  # objective after every Lloyd iteration, starting with the seed
    iterations: int


def _objective(x, centers):
    d = (x[:, None] - centers[None, :]) ** 2
    return float(d.min(axis=1).sum())


def _assign(x, centers):
    # argmin keeps the lowest index on ties
    return np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)


def _segment_cost(cw, cwx, cwx2, i, j):
    """Within-segment squared error of sorted unique values i..j-1 (weighted)."""
    w = cw[j] - cw[i]
    s = cwx[j] - cwx[i]
    return np.maximum((cwx2[j] - cwx2[i]) - s * s / w, 0.0)


def optimal_partition(x, k):
    """Exact 1-D k-means by dynamic programming over sorted unique values.

    Each layer of the recurrence is filled by divide and conquer on the
    (monotone) optimal split point.  Returns the cluster means, ascending.
    """
    u, counts = np.unique(np.asarray(x, dtype=np.float64), return_counts=True)
    n = len(u)
    w = counts.astype(np.float64)
    cw = np.concatenate([[0.0], np.cumsum(w)])
    cwx = np.concatenate([[0.0], np.cumsum(w * u)])
    cwx2 = np.concatenate([[0.0], np.cumsum(w * u * u)])

    prev = np.full(n + 1, np.inf)
    prev[0] = 0.0
    splits = []
    for layer in range(1, k + 1):
        cur = np.full(n + 1, np.inf)
        arg = np.zeros(n + 1, dtype=np.intp)
        # (j_lo, j_hi, i_lo, i_hi): fill cur[j] for j in [j_lo, j_hi] searching i in [i_lo, i_hi]
        stack = [(layer, n, layer - 1, n - 1)]
        while stack:
            j_lo, j_hi, i_lo, i_hi = stack.pop()
            if j_lo > j_hi:
                continue
            j = (j_lo + j_hi) // 2
            cand = np.arange(i_lo, min(i_hi, j - 1) + 1)
            vals = prev[cand] + _segment_cost(cw, cwx, cwx2, cand, j)
            best = int(np.argmin(vals))
            cur[j], arg[j] = vals[best], cand[best]
            stack.append((j_lo, j - 1, i_lo, arg[j]))
            stack.append((j + 1, j_hi, arg[j], i_hi))
        splits.append(arg)
        prev = cur

    bounds = [n]
    for arg in reversed(splits):
        bounds.append(int(arg[bounds[-1]]))
    bounds = bounds[::-1]
    return np.array(
        [(cwx[b] - cwx[a]) / (cw[b] - cw[a]) for a, b in zip(bounds[:-1], bounds[1:])], dtype=np.float64
    )


def _quantile_seed(x, k):
    return np.quantile(x, (np.arange(k) + 0.5) / k)


def kmeans_1d(values, clusters, max_iters=100, tol=1e-6, init="optimal"):
    """Lloyd iterations on scalar values.

    ``init="optimal"`` seeds from the exact optimal partition (Lloyd then only
    confirms it); ``init="quantile"`` seeds at evenly spaced quantiles.  An
    empty cluster is re-seated at the value farthest from its nearest center.
    The objective is recorded after every iteration and never increases.
    """
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if clusters < 1:
        raise ConfigurationError(f"need at least one cluster, got {clusters}")
    distinct = len(np.unique(x))
    if clusters > distinct:
        raise ValidationError(f"cannot form {clusters} clusters from {distinct} distinct values")
    if init == "optimal":
        centers = optimal_partition(x, clusters)
    elif init == "quantile":
        centers = _quantile_seed(x, clusters)
    else:
        raise ConfigurationError(f"unknown k-means init {init!r}")

    history = [_objective(x, centers)]
    it = 0
    for it in range(1, max_iters + 1):
        labels = _assign(x, centers)
        counts = np.bincount(labels, minlength=clusters)
        for empty in np.flatnonzero(counts == 0):
            dist = np.abs(x[:, None] - centers[None, :]).min(axis=1)
            centers[empty] = x[int(np.argmax(dist))]
            labels = _assign(x, centers)
            counts = np.bincount(labels, minlength=clusters)
        new = np.array(
            [x[labels == i].mean() if counts[i] else centers[i] for i in range(clusters)], dtype=np.float64
        )
        moved = float(np.max(np.abs(new - centers)))
        centers = new
        history.append(_objective(x, centers))
        if moved < tol:
            break
    centers = np.sort(centers)[::-1]
    return ClusterResult(centers=centers, objective=history[-1], history=tuple(history), iterations=it)


def stroke_weight_maps(attention_map, centers, gamma):
    """Per-stroke softmax weights ``exp(gamma * (1 - |A - m_k|))``, normalized over k.

    ``centers`` are taken in descending order, so the highest-attention
    center drives stroke 0 (finest) and the lowest drives the coarsest.
    Returns an array of shape (K+1, H, W).
    """
    if gamma < 0:
        raise ConfigurationError(f"gamma must be non-negative, got {gamma}")
    amap = np.asarray(attention_map, dtype=np.float64)
    m = np.asarray(getattr(centers, "centers", centers), dtype=np.float64)
    m = np.sort(m)[::-1]
    logits = gamma * (1.0 - np.abs(amap[None] - m[:, None, None]))
    logits -= logits.max(axis=0, keepdims=True)
    z = np.exp(logits)
    return z / z.sum(axis=0, keepdims=True)


def fuse(strokes, weights):
    """Per-pixel convex combination of the strokes, weights broadcast over channels."""
    feats = getattr(strokes, "strokes", strokes)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 3 or len(feats) != weights.shape[0]:
        raise DimensionError(f"{len(feats)} strokes but weight maps of shape {weights.shape}")
    c, h, w = np.shape(feats[0])
    if weights.shape[1:] != (h, w):
        raise DimensionError(f"weight maps {weights.shape[1:]} do not match stroke dims {(h, w)}")
    out = np.zeros((c, h, w))
    for f, wk in zip(feats, weights):
        if np.shape(f) != (c, h, w):
            raise DimensionError("strokes differ in shape")
        out += wk[None] * np.asarray(f, dtype=np.float64)
    return out.astype(DTYPE)
