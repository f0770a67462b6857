"""Synthetic planted scenes: feature stacks with known object/part geometry.

Each scene plants a small "head" blob and a larger "body" blob.  High-level
layers activate on the whole object (one of them also on a background
distractor, which the cross-layer product suppresses); mid-level layers carry
per-part candidate maps plus decoys that must fail the selection constraints.
Blobs are steep-edged super-Gaussians so the thresholded region boundary
barely moves with the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensorio import FeatureStack, LayerBlock

OBJECT_LAYERS = ("high_a", "high_b")
PART_LAYERS = ("mid_a", "mid_b")


def super_gaussian(h: int, w: int, center, sigma: float, power: int = 12) -> np.ndarray:
    """Steep-edged radial bump exp(-2 (r/sigma)^power) on an h x w grid."""
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    r = np.hypot(xs - center[0], ys - center[1])
    return np.exp(-2.0 * (r / sigma) ** power)


@dataclass
class PlantedScene:
    stack: FeatureStack
    image: np.ndarray  # (H, W, 1) uint8 rendering of the planted object
    head_center: tuple[float, float]  # mask (= CNN input) coordinates
    body_center: tuple[float, float]
    object_bbox_image: tuple[float, float, float, float]
    body_tail_extent_mask: tuple[float, float, float, float]
    tail_bias: bool


def _to_map(pt, input_hw, map_hw):
    # corner-aligned mapping from input coordinates to map coordinates
    sy = (map_hw[0] - 1) / (input_hw[0] - 1)
    sx = (map_hw[1] - 1) / (input_hw[1] - 1)
    return (pt[0] * sx, pt[1] * sy)


def make_scene(
    seed: int,
    tail_bias: bool = False,
    input_hw: tuple[int, int] = (64, 64),
    map_hw: tuple[int, int] = (32, 32),
    image_hw: tuple[int, int] = (128, 128),
    maps_per_part: int = 6,
) -> PlantedScene:
    rng = np.random.default_rng(seed)
    in_h, in_w = input_hw
    m_h, m_w = map_hw

    jit = lambda s: rng.uniform(-s, s)
    head = (16.0 + jit(1.0), 30.0 + jit(1.0))
    body = (40.0 + jit(1.0), 32.0 + jit(1.0))
    sigma_head, sigma_body = 5.0, 9.0
    # biased body maps sit closer to the head and miss the tail end
    body_det = (body[0] - 4.0, body[1]) if tail_bias else body
    sigma_det = 7.0 if tail_bias else sigma_body
    distractor = (54.0, 10.0)

    map_scale = lambda s: s * (m_w - 1) / (in_w - 1)

    def blob(center, sigma):
        return super_gaussian(m_h, m_w, _to_map(center, input_hw, map_hw),
                              map_scale(sigma))

    # the head end gets more and stronger votes, so the object saliency (and
    # with it the weighted object centroid) is biased toward the head
    obj_blob = np.maximum(blob(head, sigma_head + 4.0),
                          0.72 * blob(body, sigma_body))

    def noisy(grid):
        return (grid * rng.uniform(0.7, 1.0)).astype(np.float32)

    high_a = np.stack([
        noisy(np.maximum(obj_blob, blob(distractor, 5.0))) for _ in range(3)
    ])
    high_b = np.stack([noisy(obj_blob) for _ in range(3)])

    def part_maps(center, sigma):
        maps = []
        for _ in range(maps_per_part):
            c = (center[0] + jit(1.5), center[1] + jit(1.5))
            maps.append(noisy(blob(c, sigma + jit(1.0))))
        return maps

    decoys = [
        # two far-apart blobs: fails the single-connected-region constraint
        noisy(np.maximum(blob(head, 4.0), blob(distractor, 4.0))),
        # background blob: centroid outside the object region
        noisy(blob(distractor, 4.0)),
    ]
    mid_a = np.stack(part_maps(head, sigma_head) + [decoys[0]])
    mid_b = np.stack(part_maps(body_det, sigma_det) + [decoys[1]])

    stack = FeatureStack(
        f"scene_{seed:05d}", in_h, in_w,
        [
            LayerBlock("mid_a", mid_a),
            LayerBlock("mid_b", mid_b),
            LayerBlock("high_a", high_a),
            LayerBlock("high_b", high_b),
        ],
    )

    img_h, img_w = image_hw
    sx, sy = img_w / in_w, img_h / in_h
    render = super_gaussian(img_h, img_w, (head[0] * sx, head[1] * sy),
                            sigma_head * sx)
    render = np.maximum(render, super_gaussian(
        img_h, img_w, (body[0] * sx, body[1] * sy), sigma_body * sx))
    image = (render * 255).astype(np.uint8)[:, :, None]

    x0 = (head[0] - sigma_head) * sx
    y0 = min(head[1] - sigma_head, body[1] - sigma_body) * sy
    x1 = (body[0] + sigma_body) * sx
    y1 = max(head[1] + sigma_head, body[1] + sigma_body) * sy
    object_bbox_image = (x0, y0, x1 - x0, y1 - y0)

    # ground-truth body+tail extent: from the body proper out to the tail tip
    extent = (
        body[0] - 5.0, body[1] - 6.0,
        5.0 + sigma_body + 2.0, 12.0,
    )

    return PlantedScene(
        stack=stack,
        image=image,
        head_center=head,
        body_center=body,
        object_bbox_image=object_bbox_image,
        body_tail_extent_mask=extent,
        tail_bias=tail_bias,
    )
