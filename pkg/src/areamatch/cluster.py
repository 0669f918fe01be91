"""Deterministic k-means with elbow selection of the cluster count."""

from __future__ import annotations

import numpy as np

MAX_ITER = 20


def _farthest_point_seeds(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    first = int(rng.integers(len(points)))
    idx = [first]
    d = np.sum((points - points[first]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d))  # first maximum -> deterministic
        idx.append(nxt)
        d = np.minimum(d, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[idx].copy()


def kmeans(points: np.ndarray, k: int, seed: int = 0) -> tuple[np.ndarray, float]:
    """Lloyd iterations from farthest-point seeds. Returns (labels, SSE)."""
    points = np.asarray(points, dtype=float)
    rng = np.random.default_rng(seed)
    centers = _farthest_point_seeds(points, k, rng)
    labels = np.zeros(len(points), dtype=int)
    for _ in range(MAX_ITER):
        d = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d, axis=1)
        for c in range(k):
            members = points[new == c]
            if len(members):
                centers[c] = members.mean(axis=0)
        if np.array_equal(new, labels):
            labels = new
            break
        labels = new
    sse = float(sum(((points[labels == c] - centers[c]) ** 2).sum() for c in range(k)))
    return labels, sse


def elbow_k(sse: list[float]) -> int:
    """k maximizing the second difference of SSE over k = 1..n (smallest on ties).

    ``sse[i]`` holds the SSE for k = i + 1.
    """
    n = len(sse)
    if n <= 2 or sse[0] <= 0:
        return 1
    best_k, best = 1, 0.0
    for k in range(2, n):
        d2 = sse[k - 2] - 2 * sse[k - 1] + sse[k]
        if d2 > best:
            best_k, best = k, d2
    return best_k


def cluster_orphans(centers, seed: int = 0) -> np.ndarray:
    """Cluster 2-D points, choosing k by the elbow rule. Labels are 0..k-1."""
    pts = np.asarray(centers, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=int)
    runs = [kmeans(pts, k, seed) for k in range(1, n + 1)]
    k = elbow_k([sse for _, sse in runs])
    labels = runs[k - 1][0]
    # relabel by first appearance so output does not depend on seeding order
    remap: dict[int, int] = {}
    for lab in labels:
        remap.setdefault(int(lab), len(remap))
    return np.array([remap[int(lab)] for lab in labels], dtype=int)
