"""Cluster-count selection: Davies-Bouldin index, mean Silhouette value, and a
per-image sweep over candidate k.

Conventions for degenerate cases: a singleton cluster has within-cluster
distance 0 and silhouette a_i = 0; a point with max(a_i, b_i) = 0 gets
silhouette 0.  Neither index is defined for k = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClustering, TooFewCandidates
from .partdetect import CandidateMap, cluster_candidate_centroids


@dataclass
class ClusterValidityReport:
    per_k: dict[int, dict[str, float]]  # k -> {"db_index", "mean_silhouette", "sse"}
    best_k_db: int
    best_k_sil: int


def _check_clusters(points: np.ndarray, assignment: np.ndarray) -> list[np.ndarray]:
    ids = np.unique(assignment)
    if len(ids) < 2:
        raise DegenerateClustering("need at least 2 clusters")
    groups = [np.nonzero(assignment == c)[0] for c in ids]
    if any(len(g) == 0 for g in groups):
        raise DegenerateClustering("empty cluster")
    return groups


def davies_bouldin(
    points, assignment, centers
) -> float:
    """Mean over clusters of the worst (d_i + d_j) / d(center_i, center_j) ratio.

    Within-cluster spread is the mean distance of points to their own center.
    Lower is better.
    """
    points = np.asarray(points, dtype=np.float64)
    assignment = np.asarray(assignment)
    centers = np.asarray(centers, dtype=np.float64)
    ids = np.unique(assignment)
    groups = _check_clusters(points, assignment)
    if len(centers) != len(ids):
        raise DegenerateClustering("one center required per cluster")
    spread = np.array([
        np.linalg.norm(points[g] - centers[i], axis=1).mean()
        for i, g in enumerate(groups)
    ])
    k = len(ids)
    sep = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
    off_diag = ~np.eye(k, dtype=bool)
    if np.any(sep[off_diag] == 0):
        raise DegenerateClustering("coincident cluster centers")
    ratios = (spread[:, None] + spread[None, :]) / np.where(sep == 0, np.inf, sep)
    return float(np.where(off_diag, ratios, -np.inf).max(axis=1).mean())


def mean_silhouette(points, assignment) -> float:
    """Mean of (b_i - a_i) / max(a_i, b_i) over all points."""
    points = np.asarray(points, dtype=np.float64)
    assignment = np.asarray(assignment)
    groups = _check_clusters(points, assignment)
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    scores = np.empty(len(points))
    for gi, g in enumerate(groups):
        for i in g:
            a = dist[i, g].sum() / (len(g) - 1) if len(g) > 1 else 0.0
            b = min(
                dist[i, other].mean()
                for gj, other in enumerate(groups)
                if gj != gi
            )
            m = max(a, b)
            scores[i] = 0.0 if m == 0 else (b - a) / m
    return float(scores.mean())


def select_k(
    candidates: list[CandidateMap], k_range, seed: int
) -> ClusterValidityReport:
    """Cluster the candidate centroids for every k in k_range and score both
    validity indices; ties go to the smaller k."""
    ks = sorted(k_range)
    if not ks or ks[0] < 2:
        raise DegenerateClustering("k range must start at 2 or above")
    if len(candidates) <= ks[-1]:
        raise TooFewCandidates(
            f"{len(candidates)} candidates; need more than max k = {ks[-1]}"
        )
    points = np.array([c.centroid for c in candidates], dtype=np.float64)
    per_k: dict[int, dict[str, float]] = {}
    for k in ks:
        labels, centers, sse = cluster_candidate_centroids(candidates, k, seed)
        # centers come back in the order the clusters are labeled
        per_k[k] = {
            "db_index": davies_bouldin(points, labels, centers),
            "mean_silhouette": mean_silhouette(points, labels),
            "sse": sse,
        }
    best_k_db = min(ks, key=lambda k: (per_k[k]["db_index"], k))
    best_k_sil = min(ks, key=lambda k: (-per_k[k]["mean_silhouette"], k))
    return ClusterValidityReport(per_k, best_k_db, best_k_sil)
