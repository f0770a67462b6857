"""Seeded k-means on 2-D points.

Deterministic by construction: k-means++ initialization driven by a
caller-supplied seed, a fixed number of restarts, and nearest-center ties
broken by the lowest center index.
"""

from __future__ import annotations

import numpy as np

from .errors import TooFewCandidates

N_RESTARTS = 10
MAX_ITERS = 100


def _assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)  # argmin takes the lowest index on ties


def _sse(points: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> float:
    return float(((points - centers[labels]) ** 2).sum())


def _init_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++: draw a few D^2-weighted candidates per center and
    keep the one that lowers the total potential the most."""
    n = len(points)
    n_candidates = 2 + int(np.log(k))
    centers = np.empty((k, 2))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total == 0:
            centers[i] = points[rng.integers(n)]
        else:
            picks = rng.choice(n, size=n_candidates, p=d2 / total)
            cand_d2 = np.minimum(
                d2[None, :],
                ((points[None, :, :] - points[picks, None, :]) ** 2).sum(axis=2),
            )
            best = picks[cand_d2.sum(axis=1).argmin()]
            centers[i] = points[best]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def _refine_hartigan(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """First-improvement single-point reassignment until no move lowers the
    SSE.  Escapes most local optima Lloyd's algorithm converges to."""
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    improved = True
    while improved:
        improved = False
        for i, p in enumerate(points):
            src = labels[i]
            if counts[src] <= 1:
                continue
            loss = counts[src] / (counts[src] - 1) * \
                ((p - sums[src] / counts[src]) ** 2).sum()
            gains = counts / (counts + 1) * \
                ((p - sums / np.maximum(counts[:, None], 1)) ** 2).sum(axis=1)
            gains[src] = np.inf
            dst = int(gains.argmin())
            if gains[dst] < loss - 1e-12:
                labels[i] = dst
                counts[src] -= 1
                counts[dst] += 1
                sums[src] -= p
                sums[dst] += p
                improved = True
    return labels


def kmeans(points: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Cluster 2-D points into k groups.

    Returns (labels, centers, within-cluster SSE).  Runs N_RESTARTS restarts
    of Lloyd's algorithm from k-means++ starts, polishes each run with
    single-point reassignment, and keeps the lowest-SSE run.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n < k or k < 1:
        raise TooFewCandidates(f"{n} points cannot form {k} clusters")
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    root = np.random.default_rng(seed)
    for _ in range(N_RESTARTS):
        rng = np.random.default_rng(root.integers(2**63))
        centers = _init_plusplus(points, k, rng)
        labels = _assign(points, centers)
        for _ in range(MAX_ITERS):
            for c in range(k):
                members = points[labels == c]
                if len(members):
                    centers[c] = members.mean(axis=0)
                else:
                    # reassign an empty cluster to the farthest point
                    far = ((points - centers[labels]) ** 2).sum(axis=1).argmax()
                    centers[c] = points[far]
            new_labels = _assign(points, centers)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        labels = _refine_hartigan(points, labels, k)
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
        sse = _sse(points, centers, labels)
        if best is None or sse < best[2] - 1e-12:
            best = (labels, centers, sse)
    return best
