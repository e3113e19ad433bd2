"""Seeded Lloyd K-means with k-means++ initialisation."""

from __future__ import annotations

import numpy as np


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = (x * x).sum(1)[:, None] - 2 * x @ centroids.T + (centroids * centroids).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = [x[rng.integers(n)]]
    closest = _sq_dists(x, np.asarray(centroids))[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        # all points coincide with a centroid already: any choice is equivalent
        idx = int(rng.integers(n)) if total <= 0 else int(rng.choice(n, p=closest / total))
        centroids.append(x[idx])
        closest = np.minimum(closest, _sq_dists(x, x[idx][None, :])[:, 0])
    return np.array(centroids)


def kmeans(x: np.ndarray, k: int, seed: int = 0, max_iter: int = 300) -> tuple[np.ndarray, np.ndarray]:
    """Cluster rows of ``x`` into ``k`` groups.

    Returns ``(assignments, centroids)``. Distance ties go to the lowest centroid
    index; an empty cluster is re-seeded at the point farthest from its centroid.
    Cluster ids are relabelled in order of first appearance so the output does
    not depend on initialisation order.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, x.shape[1]))
    k = min(k, n)
    rng = np.random.default_rng(seed)
    centroids = _plus_plus(x, k, rng)
    assign = None
    for _ in range(max_iter):
        d = _sq_dists(x, centroids)
        new = d.argmin(axis=1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        nearest = d[np.arange(n), assign]
        taken: set[int] = set()
        for c in range(k):
            members = assign == c
            if members.any():
                centroids[c] = x[members].mean(axis=0)
            else:
                far = nearest.copy()
                far[list(taken)] = -1
                idx = int(far.argmax())
                taken.add(idx)
                centroids[c] = x[idx]
    _, first = np.unique(assign, return_index=True)
    order = np.unique(assign)[np.argsort(first)]
    relabel = np.empty(k, dtype=np.int64)
    relabel[order] = np.arange(len(order))
    used = relabel[order]
    out_centroids = np.zeros((len(order), x.shape[1]))
    out_centroids[used] = centroids[order]
    return relabel[assign], out_centroids
