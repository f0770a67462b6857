"""Writers for the FMS1 feature-map container and its dataset manifest.

FMS1 layout (all integers little-endian):
    magic "FMS1"; u32 version (1), input_h, input_w, layer_count;
    per layer: u16 name length, UTF-8 name, u32 map_count, map_h, map_w,
    then map_count*map_h*map_w float32 values, row-major.

This is a deliberately independent implementation of the interchange format;
the consuming pipeline validates every emitted file with its own reader.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FMS1"
VERSION = 1


class WriteError(ValueError):
    pass


def write_stack(path, input_h: int, input_w: int,
                layers: list[tuple[str, np.ndarray]]) -> None:
    """Write one image's activations; `layers` maps name -> (count, h, w)."""
    if not layers:
        raise WriteError("a stack needs at least one layer")
    if input_h < 1 or input_w < 1:
        raise WriteError(f"bad input size {input_h}x{input_w}")
    names = [name for name, _ in layers]
    if len(set(names)) != len(names):
        raise WriteError("duplicate layer names")
    chunks = [MAGIC, struct.pack("<IIII", VERSION, input_h, input_w, len(layers))]
    for name, maps in layers:
        maps = np.ascontiguousarray(maps, dtype=np.float32)
        if maps.ndim != 3 or 0 in maps.shape:
            raise WriteError(f"layer {name!r}: need a non-empty (count, h, w) array")
        if not np.isfinite(maps).all():
            raise WriteError(f"layer {name!r}: non-finite activation values")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<III", *maps.shape))
        chunks.append(maps.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def write_manifest(path, entries: list[dict]) -> None:
    """Manifest JSON: {"entries": [{image_id, image_path, stack_path}, ...]}."""
    payload = {"entries": entries}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          "utf-8")


def write_metadata(path, metadata: dict) -> None:
    Path(path).write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n",
                          "utf-8")
