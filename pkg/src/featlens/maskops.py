"""Mask arithmetic: [0,1] normalization, bilinear resize, thresholding and the
multi-layer saliency aggregation that localizes the object.

Soft masks are plain 2-D float arrays with values in [0,1] at the CNN input
resolution; their thresholded counterparts carry the threshold that produced
them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyGrid, EmptyLayerSet, ThresholdOutOfRange, UnknownLayer
from .tensorio import FeatureStack


@dataclass
class BinaryMask:
    """0/1 grid plus the threshold that produced it."""

    grid: np.ndarray  # uint8, values in {0, 1}
    threshold_used: float

    @property
    def area(self) -> int:
        return int(self.grid.sum())


def normalize(grid: np.ndarray) -> np.ndarray:
    """Affinely rescale to [0,1]; a constant grid maps to all zeros.

    A constant map carries no localization signal, so zeros keep it neutral
    under thresholding.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise EmptyGrid("cannot normalize an empty grid")
    lo = grid.min()
    hi = grid.max()
    if hi == lo:
        return np.zeros_like(grid)
    return (grid - lo) / (hi - lo)


def resize_bilinear(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize.

    Output values never leave [grid.min(), grid.max()], and resizing to the
    input dimensions is the identity.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise EmptyGrid("cannot resize an empty grid")
    if out_h < 1 or out_w < 1:
        raise EmptyGrid("output dimensions must be >= 1")
    in_h, in_w = grid.shape
    if (out_h, out_w) == (in_h, in_w):
        return grid.copy()
    ys = np.linspace(0.0, in_h - 1, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0.0, in_w - 1, out_w) if out_w > 1 else np.zeros(1)
    y0 = np.minimum(ys.astype(int), in_h - 1)
    x0 = np.minimum(xs.astype(int), in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - fx) + grid[np.ix_(y0, x1)] * fx
    bot = grid[np.ix_(y1, x0)] * (1 - fx) + grid[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def resize_nearest(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize with the same corner-aligned sampling lattice."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise EmptyGrid("cannot resize an empty grid")
    if out_h < 1 or out_w < 1:
        raise EmptyGrid("output dimensions must be >= 1")
    in_h, in_w = grid.shape
    ys = np.linspace(0.0, in_h - 1, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0.0, in_w - 1, out_w) if out_w > 1 else np.zeros(1)
    yi = np.clip(np.floor(ys + 0.5).astype(int), 0, in_h - 1)
    xi = np.clip(np.floor(xs + 0.5).astype(int), 0, in_w - 1)
    return grid[np.ix_(yi, xi)]


RESIZERS = {"bilinear": resize_bilinear, "nearest": resize_nearest}


def threshold(mask: np.ndarray, t: float) -> BinaryMask:
    """Binarize with a strict inequality: 1 where value > t, else 0."""
    if not 0.0 < t < 1.0:
        raise ThresholdOutOfRange(f"threshold {t} outside (0, 1)")
    grid = np.asarray(mask, dtype=np.float64)
    return BinaryMask((grid > t).astype(np.uint8), t)


def layer_sum_mask(
    stack: FeatureStack, layer_name: str, interpolation: str = "bilinear"
) -> np.ndarray:
    """Sum all maps of one layer, normalize, and resize to the input resolution."""
    try:
        block = stack.layer(layer_name)
    except KeyError:
        raise UnknownLayer(f"layer {layer_name!r} not in stack {stack.image_id!r}")
    # pairwise-stable accumulation in double precision
    summed = np.add.reduce(block.maps.astype(np.float64), axis=0)
    resize = RESIZERS[interpolation]
    return resize(normalize(summed), stack.input_height, stack.input_width)


def detect_object(
    stack: FeatureStack,
    object_layers,
    t_object: float = 0.3,
    interpolation: str = "bilinear",
) -> tuple[np.ndarray, BinaryMask]:
    """Aggregate the named layers into the object saliency mask.

    Per layer: sum all maps, normalize, resize to the input resolution.  The
    per-layer masks are multiplied elementwise (an active region must be active
    in every layer), renormalized and thresholded.  Returns the soft mask
    (float32) and its binary version.
    """
    wanted = set(object_layers)
    if not wanted:
        raise EmptyLayerSet("object layer set is empty")
    missing = wanted - set(stack.layer_names())
    if missing:
        raise UnknownLayer(f"layers {sorted(missing)} not in stack {stack.image_id!r}")
    if not 0.0 < t_object < 1.0:
        raise ThresholdOutOfRange(f"t_object {t_object} outside (0, 1)")
    product = None
    for name in stack.layer_names():  # layer-file order, independent of set order
        if name not in wanted:
            continue
        mask = layer_sum_mask(stack, name, interpolation)
        product = mask if product is None else product * mask
    soft = normalize(product).astype(np.float32)
    return soft, threshold(soft, t_object)


def mask_to_u8(mask: np.ndarray) -> np.ndarray:
    """Scale a [0,1] soft mask to 0..255 with round-half-up, for PGM export."""
    return np.floor(np.asarray(mask, dtype=np.float64) * 255.0 + 0.5).astype(np.uint8)
