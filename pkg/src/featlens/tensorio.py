"""I/O for the FMS1 feature-stack container, dataset manifests and PGM/PPM images.

FMS1 layout (all integers little-endian):

    magic "FMS1"
    u32 version (=1), u32 input_height, u32 input_width, u32 layer_count
    per layer:
        u16 name_length, UTF-8 name
        u32 map_count, u32 map_height, u32 map_width
        map_count * map_height * map_width float32 values, row-major

Everything loaded by this module is immutable by convention: arrays are
returned with the writeable flag cleared.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FeatLensError

MAGIC = b"FMS1"
VERSION = 1


class TensorIOError(FeatLensError):
    pass


class BadMagic(TensorIOError):
    pass


class TruncatedFile(TensorIOError):
    pass


class NonFiniteValue(TensorIOError):
    pass


class DuplicateLayer(TensorIOError):
    pass


class InvalidStack(TensorIOError):
    pass


class UnsupportedFormat(TensorIOError):
    pass


class CorruptHeader(TensorIOError):
    pass


class IoFailure(TensorIOError):
    pass


@dataclass
class LayerBlock:
    """All feature maps of one hidden layer: a (map_count, h, w) float32 array."""

    layer_name: str
    maps: np.ndarray

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.float32)
        if self.maps.ndim != 3 or self.maps.shape[0] < 1:
            raise InvalidStack(
                f"layer {self.layer_name!r}: maps must be (count, h, w) with count >= 1"
            )


@dataclass
class FeatureStack:
    """Feature maps of the selected hidden layers for one image."""

    image_id: str
    input_height: int
    input_width: int
    layers: list[LayerBlock]

    def __post_init__(self):
        if self.input_height <= 0 or self.input_width <= 0:
            raise InvalidStack("input dimensions must be positive")
        if not self.layers:
            raise InvalidStack("stack must contain at least one layer")
        names = [b.layer_name for b in self.layers]
        if len(set(names)) != len(names):
            raise InvalidStack("layer names must be unique")

    def layer(self, name: str) -> LayerBlock:
        for block in self.layers:
            if block.layer_name == name:
                return block
        raise KeyError(name)

    def layer_names(self) -> list[str]:
        return [b.layer_name for b in self.layers]


def write_stack(stack: FeatureStack, path) -> None:
    """Serialize a stack to FMS1.  Byte-deterministic for identical input."""
    chunks = [MAGIC, struct.pack(
        "<IIII", VERSION, stack.input_height, stack.input_width, len(stack.layers)
    )]
    for block in stack.layers:
        if not np.all(np.isfinite(block.maps)):
            raise InvalidStack(f"layer {block.layer_name!r} contains NaN/Inf")
        name = block.layer_name.encode("utf-8")
        count, h, w = block.maps.shape
        chunks.append(struct.pack("<H", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<III", count, h, w))
        chunks.append(np.ascontiguousarray(block.maps, dtype="<f4").tobytes())
    try:
        Path(path).write_bytes(b"".join(chunks))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"{self.path}: expected {n} more bytes at offset {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def read_stack(path) -> FeatureStack:
    """Load an FMS1 file.  The byte count must match the header arithmetic exactly."""
    path = Path(path)
    data = path.read_bytes()
    r = _Reader(data, str(path))
    if r.take(4) != MAGIC:
        raise BadMagic(f"{path}: not an FMS1 file")
    version = r.u32()
    if version != VERSION:
        raise CorruptHeader(f"{path}: unsupported version {version}")
    input_h, input_w, layer_count = r.u32(), r.u32(), r.u32()
    if input_h == 0 or input_w == 0 or layer_count == 0:
        raise CorruptHeader(f"{path}: zero dimension or layer count in header")
    layers: list[LayerBlock] = []
    seen: set[str] = set()
    for _ in range(layer_count):
        name = r.take(r.u16()).decode("utf-8")
        if name in seen:
            raise DuplicateLayer(f"{path}: duplicate layer {name!r}")
        seen.add(name)
        count, h, w = r.u32(), r.u32(), r.u32()
        if count == 0 or h == 0 or w == 0:
            raise CorruptHeader(f"{path}: zero-sized layer {name!r}")
        payload = r.take(count * h * w * 4)
        maps = np.frombuffer(payload, dtype="<f4").reshape(count, h, w)
        if not np.all(np.isfinite(maps)):
            raise NonFiniteValue(f"{path}: NaN/Inf in layer {name!r}")
        maps = maps.copy()
        maps.flags.writeable = False
        layers.append(LayerBlock(name, maps))
    if r.pos != len(data):
        raise TruncatedFile(f"{path}: {len(data) - r.pos} trailing bytes")
    return FeatureStack(path.stem, input_h, input_w, layers)


# --- manifest ---

@dataclass
class PartAnnotation:
    part_id: int
    x: float
    y: float
    visible: bool


@dataclass
class GroundTruth:
    bbox: tuple[float, float, float, float] | None = None
    parts: list[PartAnnotation] = field(default_factory=list)


@dataclass
class ManifestEntry:
    image_id: str
    image_path: str
    stack_path: str
    ground_truth: GroundTruth | None = None


@dataclass
class Manifest:
    entries: list[ManifestEntry]

    def __post_init__(self):
        ids = [e.image_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise CorruptHeader("manifest: duplicate image_id")


def _parse_ground_truth(raw: dict) -> GroundTruth:
    gt = GroundTruth()
    if "bbox" in raw:
        x, y, w, h = raw["bbox"]
        if w <= 0 or h <= 0:
            raise CorruptHeader("manifest: ground-truth bbox must have positive size")
        gt.bbox = (float(x), float(y), float(w), float(h))
    for p in raw.get("parts", []):
        pid = int(p["part_id"])
        if not 1 <= pid <= 15:
            raise CorruptHeader(f"manifest: part_id {pid} outside 1..15")
        gt.parts.append(
            PartAnnotation(pid, float(p["x"]), float(p["y"]), bool(p["visible"]))
        )
    return gt


def read_manifest(path) -> Manifest:
    raw = json.loads(Path(path).read_text("utf-8"))
    entries = []
    for e in raw["entries"]:
        gt = _parse_ground_truth(e["ground_truth"]) if e.get("ground_truth") else None
        entries.append(
            ManifestEntry(e["image_id"], e["image_path"], e["stack_path"], gt)
        )
    return Manifest(entries)


def write_manifest(manifest: Manifest, path) -> None:
    entries = []
    for e in manifest.entries:
        raw = {
            "image_id": e.image_id,
            "image_path": e.image_path,
            "stack_path": e.stack_path,
        }
        if e.ground_truth is not None:
            gt = {}
            if e.ground_truth.bbox is not None:
                gt["bbox"] = list(e.ground_truth.bbox)
            if e.ground_truth.parts:
                gt["parts"] = [
                    {"part_id": p.part_id, "x": p.x, "y": p.y, "visible": p.visible}
                    for p in e.ground_truth.parts
                ]
            raw["ground_truth"] = gt
        entries.append(raw)
    Path(path).write_text(json.dumps({"entries": entries}, indent=2) + "\n", "utf-8")


# --- images (PGM P5 / PPM P6, PNG behind optional Pillow) ---

def _read_pnm_header(data: bytes, path: str):
    # header tokens may be separated by whitespace and '#' comments
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptHeader(f"{path}: truncated PNM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise CorruptHeader(f"{path}: bad PNM header token") from exc
    if width <= 0 or height <= 0 or not 0 < maxval < 256:
        raise CorruptHeader(f"{path}: unsupported PNM dimensions/maxval")
    return width, height, maxval, pos


def read_image(path) -> np.ndarray:
    """Decode a PGM/PPM (or PNG when Pillow is present) into an (H, W, C) uint8 array."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P6"):
        channels = 1 if data[:2] == b"P5" else 3
        width, height, _maxval, pos = _read_pnm_header(data, str(path))
        n = width * height * channels
        if len(data) - pos < n:
            raise CorruptHeader(f"{path}: pixel payload shorter than header implies")
        pixels = np.frombuffer(data[pos:pos + n], dtype=np.uint8)
        return pixels.reshape(height, width, channels)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        try:
            from PIL import Image
        except ImportError as exc:
            raise UnsupportedFormat(
                f"{path}: PNG support requires the optional Pillow dependency"
            ) from exc
        img = np.asarray(Image.open(path).convert("RGB"))
        return img.reshape(img.shape[0], img.shape[1], 3)
    raise UnsupportedFormat(f"{path}: not a PGM/PPM image")


def write_image(image: np.ndarray, path) -> None:
    """Write an (H, W), (H, W, 1) or (H, W, 3) uint8 array as PGM/PPM."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim == 2:
        image = image[:, :, None]
    h, w, c = image.shape
    if c == 1:
        header = f"P5\n{w} {h}\n255\n".encode()
    elif c == 3:
        header = f"P6\n{w} {h}\n255\n".encode()
    else:
        raise UnsupportedFormat(f"cannot encode {c}-channel image")
    try:
        Path(path).write_bytes(header + image.tobytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
