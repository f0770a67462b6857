"""Part detection: feature-map selection by the connectedness and
centroid-containment constraints, centroid clustering, and per-cluster mask
aggregation.

A feature map is a useful part cue only if, after normalization, resizing and
thresholding, it lights up a single connected blob whose weighted centroid sits
inside the previously detected object region.  The surviving maps' centroids
are clustered and each cluster's maps are summed into one part mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import maskops
from .clustering import kmeans
from .errors import EmptyRegion, TooFewCandidates, UnknownLayer
from .maskops import BinaryMask
from .tensorio import FeatureStack

EIGHT_CONN = np.ones((3, 3), dtype=int)


@dataclass
class CandidateMap:
    layer_name: str
    map_index: int
    resized_map: np.ndarray  # normalized soft map at input resolution
    binary_map: BinaryMask
    centroid: tuple[float, float]  # (x, y) pixels


@dataclass
class Part:
    soft_mask: np.ndarray
    binary_mask: BinaryMask
    centroid: tuple[float, float]
    member_maps: frozenset[tuple[str, int]]
    area: int


@dataclass
class PartDetection:
    parts: list[Part]

    def __len__(self) -> int:
        return len(self.parts)

    def centroids(self) -> np.ndarray:
        return np.array([p.centroid for p in self.parts])


def weighted_centroid(soft: np.ndarray, region: BinaryMask) -> tuple[float, float]:
    """Soft-value-weighted mean (x, y) over the region's positive pixels.

    Pixel centers sit at integer coordinates.
    """
    pos = region.grid.astype(bool)
    if not pos.any():
        raise EmptyRegion("region has no positive pixels")
    ys, xs = np.nonzero(pos)
    w = np.asarray(soft, dtype=np.float64)[ys, xs]
    total = w.sum()
    if total == 0:
        # all weights zero: fall back to the unweighted centroid
        return float(xs.mean()), float(ys.mean())
    return float((xs * w).sum() / total), float((ys * w).sum() / total)


def connected_regions(mask: BinaryMask) -> int:
    """Number of positive connected regions under 8-connectivity."""
    _, count = ndimage.label(mask.grid, structure=EIGHT_CONN)
    return int(count)


def _round_pixel(v: float) -> int:
    return int(np.floor(v + 0.5))


def select_candidates(
    stack: FeatureStack,
    part_layers,
    t_parts: float,
    object_binary: BinaryMask,
    interpolation: str = "bilinear",
) -> list[CandidateMap]:
    """Accept maps with exactly one connected thresholded blob whose weighted
    centroid falls inside the object region.

    The blob itself may extend beyond the object region; only the centroid is
    constrained.  Output order follows the stack's layer/map order.
    """
    wanted = set(part_layers)
    missing = wanted - set(stack.layer_names())
    if missing:
        raise UnknownLayer(f"layers {sorted(missing)} not in stack {stack.image_id!r}")
    obj = object_binary.grid.astype(bool)
    accepted: list[CandidateMap] = []
    for block in stack.layers:
        if block.layer_name not in wanted:
            continue
        for idx in range(block.maps.shape[0]):
            soft = maskops.RESIZERS[interpolation](
                maskops.normalize(block.maps[idx]),
                stack.input_height,
                stack.input_width,
            )
            binary = maskops.threshold(soft, t_parts)
            if binary.area == 0 or connected_regions(binary) != 1:
                continue
            cx, cy = weighted_centroid(soft, binary)
            px, py = _round_pixel(cx), _round_pixel(cy)
            if not (0 <= py < obj.shape[0] and 0 <= px < obj.shape[1]):
                continue
            if not obj[py, px]:
                continue
            accepted.append(CandidateMap(block.layer_name, idx, soft, binary, (cx, cy)))
    return accepted


def cluster_candidate_centroids(
    candidates: list[CandidateMap], k: int, seed: int
) -> tuple[np.ndarray, np.ndarray, float]:
    """k-means over candidate centroids, permutation-stable.

    Points are fed to k-means in lexicographic (x, y) order so the result does
    not depend on the candidate ordering; labels are returned in the original
    candidate order.
    """
    points = np.array([c.centroid for c in candidates], dtype=np.float64)
    order = np.lexsort((points[:, 1], points[:, 0]))
    labels_sorted, centers, sse = kmeans(points[order], k, seed)
    labels = np.empty(len(points), dtype=int)
    labels[order] = labels_sorted
    return labels, centers, sse


def cluster_parts(
    candidates: list[CandidateMap], n_part: int, t_parts: float, seed: int
) -> PartDetection:
    """Group candidates into n_part clusters and aggregate each into one part."""
    if len(candidates) < n_part:
        raise TooFewCandidates(
            f"{len(candidates)} candidates for {n_part} parts"
        )
    if n_part == 1:
        labels = np.zeros(len(candidates), dtype=int)
    else:
        labels, _, _ = cluster_candidate_centroids(candidates, n_part, seed)
    parts: list[Part] = []
    for c in range(n_part):
        member_idx = np.nonzero(labels == c)[0]
        # sum in sorted-centroid order so the result is permutation-invariant
        ordered = sorted(
            member_idx,
            key=lambda i: (*candidates[i].centroid, candidates[i].layer_name,
                           candidates[i].map_index),
        )
        summed = np.zeros(candidates[0].resized_map.shape, dtype=np.float64)
        for i in ordered:
            summed += candidates[i].resized_map
        soft = maskops.normalize(summed)
        binary = maskops.threshold(soft, t_parts)
        centroid = weighted_centroid(soft, binary)
        parts.append(
            Part(
                soft_mask=soft.astype(np.float32),
                binary_mask=binary,
                centroid=centroid,
                member_maps=frozenset(
                    (candidates[i].layer_name, candidates[i].map_index)
                    for i in member_idx
                ),
                area=binary.area,
            )
        )
    return PartDetection(parts)
