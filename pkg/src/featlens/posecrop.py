"""Pose estimation from detection masks and generation of object/part-focused
crop rectangles.

The object region is summarized by its equivalent ellipse (same centroid,
second central moments and pixel area).  The pose is one or two displacement
vectors; by default one vector per part, from the object's weighted centroid to
that part's centroid.  Part crops can be shifted and extended along their pose
vector to compensate detection bias toward the visually busy end of the
object.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRegion, EmptyMask, WrongPartCount
from .maskops import BinaryMask
from .partdetect import Part, PartDetection, weighted_centroid


class PoseVariant(enum.Enum):
    FOCAL_VECTOR = "focal-vector"
    HEAD_BODY_VECTOR = "head-body-vector"
    TWO_VECTOR = "two-vector"


@dataclass
class Ellipse:
    center: tuple[float, float]  # (x, y)
    semi_axes: tuple[float, float]  # (a, b), a >= b
    orientation: float  # radians, major axis vs +x, in (-pi/2, pi/2]


@dataclass
class Pose:
    object_centroid: tuple[float, float]
    ellipse: Ellipse
    variant: PoseVariant
    vectors: list[tuple[float, float]]


@dataclass
class CropRegion:
    rect: tuple[float, float, float, float]  # (x, y, w, h) in image pixels
    kind: str  # "object" or "part"
    part_index: int | None = None
    shifted: bool = False


def fit_ellipse(mask: BinaryMask) -> Ellipse:
    """Equivalent ellipse of the positive region.

    Pixels are treated as unit squares (a 1/12 term per pixel enters the
    second moments), and the axes are scaled so the ellipse area equals the
    region's pixel area.
    """
    ys, xs = np.nonzero(mask.grid)
    n = len(xs)
    if n < 3:
        raise DegenerateRegion("need at least 3 positive pixels")
    cx, cy = xs.mean(), ys.mean()
    dx = xs - cx
    dy = ys - cy
    mu20 = (dx * dx).mean() + 1.0 / 12.0
    mu02 = (dy * dy).mean() + 1.0 / 12.0
    mu11 = (dx * dy).mean()
    cov = np.array([[mu20, mu11], [mu11, mu02]])
    evals, evecs = np.linalg.eigh(cov)  # ascending
    if evals[0] <= 1e-9:
        raise DegenerateRegion("positive pixels are collinear")
    a0, b0 = math.sqrt(evals[1]), math.sqrt(evals[0])
    scale = math.sqrt(n / (math.pi * a0 * b0))
    vx, vy = evecs[:, 1]
    theta = math.atan2(vy, vx)
    if theta <= -math.pi / 2:
        theta += math.pi
    elif theta > math.pi / 2:
        theta -= math.pi
    return Ellipse((float(cx), float(cy)), (a0 * scale, b0 * scale), theta)


def order_parts(parts: PartDetection) -> PartDetection:
    """Ascending region area, so the smaller (head-like) part comes first;
    ties broken by centroid y then x."""
    ordered = sorted(
        parts.parts, key=lambda p: (p.area, p.centroid[1], p.centroid[0])
    )
    return PartDetection(ordered)


def _head_body(parts: PartDetection) -> tuple[Part, Part]:
    if len(parts) != 2:
        raise WrongPartCount(f"variant needs exactly 2 parts, got {len(parts)}")
    ordered = order_parts(parts)
    return ordered.parts[0], ordered.parts[1]


def estimate_pose(
    object_soft: np.ndarray,
    object_binary: BinaryMask,
    parts: PartDetection,
    variant: PoseVariant = PoseVariant.TWO_VECTOR,
) -> Pose:
    """Derive the pose from the object mask and the detected parts.

    focal-vector: between the ellipse's focal points, from the focus nearer
    the smaller part toward the other.  head-body-vector: from the smaller
    part's centroid to the larger's.  two-vector: from the object's weighted
    centroid to each part centroid, in the parts' given order.
    """
    if len(parts) < 1:
        raise WrongPartCount("need at least one part")
    centroid = weighted_centroid(object_soft, object_binary)
    ellipse = fit_ellipse(object_binary)
    if variant is PoseVariant.TWO_VECTOR:
        vectors = [
            (p.centroid[0] - centroid[0], p.centroid[1] - centroid[1])
            for p in parts.parts
        ]
    elif variant is PoseVariant.HEAD_BODY_VECTOR:
        head, body = _head_body(parts)
        vectors = [
            (body.centroid[0] - head.centroid[0],
             body.centroid[1] - head.centroid[1])
        ]
    else:
        head, _ = _head_body(parts)
        a, b = ellipse.semi_axes
        c = math.sqrt(max(a * a - b * b, 0.0))
        ux, uy = math.cos(ellipse.orientation), math.sin(ellipse.orientation)
        f1 = (ellipse.center[0] + c * ux, ellipse.center[1] + c * uy)
        f2 = (ellipse.center[0] - c * ux, ellipse.center[1] - c * uy)
        d1 = math.dist(f1, head.centroid)
        d2 = math.dist(f2, head.centroid)
        start, end = (f1, f2) if d1 <= d2 else (f2, f1)
        vectors = [(end[0] - start[0], end[1] - start[1])]
    return Pose(centroid, ellipse, variant, vectors)


def _tight_bbox(mask: BinaryMask) -> tuple[float, float, float, float]:
    ys, xs = np.nonzero(mask.grid)
    if len(xs) == 0:
        raise EmptyMask("mask has no positive pixels")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    return x0, y0, x1 - x0 + 1.0, y1 - y0 + 1.0


def _extend(rect, margin):
    x, y, w, h = rect
    return (x - w * margin / 2, y - h * margin / 2, w * (1 + margin), h * (1 + margin))


def _shift_along(rect, vector, shift):
    """Translate by shift*vector and grow the rect on the side the vector
    points to, by the shifted components' magnitudes."""
    x, y, w, h = rect
    dx, dy = shift * vector[0], shift * vector[1]
    x += dx
    y += dy
    if dx >= 0:
        w += abs(dx)
    else:
        x -= abs(dx)
        w += abs(dx)
    if dy >= 0:
        h += abs(dy)
    else:
        y -= abs(dy)
        h += abs(dy)
    return (x, y, w, h)


def _to_image(rect, mask_shape, image_dims):
    img_w, img_h = image_dims
    sx = img_w / mask_shape[1]
    sy = img_h / mask_shape[0]
    x, y, w, h = rect
    return (x * sx, y * sy, w * sx, h * sy)


def _clamp(rect, image_dims):
    img_w, img_h = image_dims
    x, y, w, h = rect
    x0 = min(max(x, 0.0), img_w)
    y0 = min(max(y, 0.0), img_h)
    x1 = min(max(x + w, 0.0), img_w)
    y1 = min(max(y + h, 0.0), img_h)
    if x1 <= x0 or y1 <= y0:
        raise EmptyMask("crop falls entirely outside the image")
    return (x0, y0, x1 - x0, y1 - y0)


def crop_regions(
    object_binary: BinaryMask,
    parts: PartDetection,
    pose: Pose,
    image_dims: tuple[int, int],  # (width, height)
    margin: float = 0.05,
    shift: float = 0.5,
) -> list[CropRegion]:
    """Object and per-part crop rectangles in original-image coordinates.

    Each crop is the tight bbox of its binary mask with each side extended by
    `margin` symmetrically.  Part crops are additionally translated along
    their pose vector by `shift` and extended in that direction, then
    everything is scaled from mask to image coordinates and clamped.
    """
    mask_shape = object_binary.grid.shape
    crops = [CropRegion(
        _clamp(_to_image(_extend(_tight_bbox(object_binary), margin), mask_shape,
                         image_dims), image_dims),
        "object",
    )]
    vectors = _part_vectors(parts, pose)
    for idx, part in enumerate(parts.parts):
        rect = _extend(_tight_bbox(part.binary_mask), margin)
        shifted = False
        if shift != 0.0:
            rect = _shift_along(rect, vectors[idx], shift)
            shifted = True
        crops.append(CropRegion(
            _clamp(_to_image(rect, mask_shape, image_dims), image_dims),
            "part", idx, shifted,
        ))
    return crops


def _part_vectors(parts: PartDetection, pose: Pose) -> list[tuple[float, float]]:
    """Per-part displacement vectors implied by the pose.

    The two-vector pose already carries one vector per part.  Single-vector
    poses point head-to-body; the body part gets half that vector and the head
    part the opposite half.
    """
    if pose.variant is PoseVariant.TWO_VECTOR:
        if len(pose.vectors) != len(parts.parts):
            raise WrongPartCount("one pose vector required per part")
        return list(pose.vectors)
    if len(parts) != 2:
        raise WrongPartCount("single-vector poses require exactly 2 parts")
    vx, vy = pose.vectors[0]
    half = (vx / 2, vy / 2)
    areas = [p.area for p in parts.parts]
    head_idx = min(range(2), key=lambda i: (areas[i], parts.parts[i].centroid[1],
                                            parts.parts[i].centroid[0]))
    out = [(0.0, 0.0), (0.0, 0.0)]
    out[head_idx] = (-half[0], -half[1])
    out[1 - head_idx] = half
    return out


def pose_to_dict(pose: Pose) -> dict:
    return {
        "object_centroid": list(pose.object_centroid),
        "ellipse": {
            "center": list(pose.ellipse.center),
            "semi_axes": list(pose.ellipse.semi_axes),
            "orientation": pose.ellipse.orientation,
        },
        "variant": pose.variant.value,
        "vectors": [list(v) for v in pose.vectors],
    }


def crop_to_dict(crop: CropRegion) -> dict:
    return {
        "rect": list(crop.rect),
        "kind": crop.kind,
        "part_index": crop.part_index,
        "shifted": crop.shifted,
    }
