"""Batch activation extraction: forward hooks over a list of images, one FMS1
stack per image, plus manifest and metadata sidecars."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from . import fmswriter
from .models import LoadedModel, load_model, resolve_layers


@dataclass
class ExtractionSpec:
    model_name: str
    layer_names: list[str]
    input_size: tuple[int, int]  # (h, w)
    image_list: list[str]
    output_dir: str

    def __post_init__(self):
        if not self.layer_names:
            raise ValueError("at least one layer name required")
        if not self.image_list:
            raise ValueError("at least one image required")
        h, w = self.input_size
        if h < 1 or w < 1:
            raise ValueError(f"bad input size {h}x{w}")


@dataclass
class ExtractionResult:
    manifest_path: Path
    metadata_path: Path
    stack_paths: dict[str, Path] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)


def _preprocess(path: str, size: tuple[int, int],
                normalization) -> torch.Tensor:
    h, w = size
    image = Image.open(path).convert("RGB")
    # direct (non-aspect-preserving) resize to the network input size
    image = image.resize((w, h), Image.BILINEAR)
    array = np.asarray(image, dtype=np.float32) / 255.0
    tensor = torch.from_numpy(array).permute(2, 0, 1)
    if normalization is not None:
        mean, std = normalization
        tensor = (tensor - torch.tensor(mean)[:, None, None]) \
            / torch.tensor(std)[:, None, None]
    return tensor[None]


def _forward_capture(model: LoadedModel, hooked: dict, batch: torch.Tensor,
                     layer_names) -> list[tuple[str, np.ndarray]]:
    captured: dict[str, np.ndarray] = {}

    def make_hook(name):
        def hook(_module, _inputs, output):
            captured[name] = output.detach()[0].cpu().numpy().astype(np.float32)
        return hook

    handles = [module.register_forward_hook(make_hook(name))
               for name, module in hooked.items()]
    try:
        with torch.no_grad():
            model.module(batch)
    finally:
        for handle in handles:
            handle.remove()
    return [(name, captured[name]) for name in layer_names]


def extract(spec: ExtractionSpec) -> ExtractionResult:
    """Run the model over every image and write the FMS1 files, manifest, and
    metadata.  Per-image decode failures are recorded; the batch continues."""
    model = load_model(spec.model_name)
    hooked = resolve_layers(model, spec.layer_names)
    out_dir = Path(spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = ExtractionResult(out_dir / "manifest.json", out_dir / "metadata.json")
    entries = []
    layer_shapes: dict[str, tuple[int, ...]] = {}
    for image_path in spec.image_list:
        image_id = Path(image_path).stem
        try:
            batch = _preprocess(image_path, spec.input_size, model.normalization)
            layers = _forward_capture(model, hooked, batch, spec.layer_names)
        except (OSError, ValueError) as exc:
            result.failures[image_id] = f"{type(exc).__name__}: {exc}"
            continue
        for name, maps in layers:
            # at fixed input size every image must produce the same map dims
            previous = layer_shapes.setdefault(name, maps.shape)
            if previous != maps.shape:
                raise RuntimeError(
                    f"layer {name!r} shape changed: {previous} -> {maps.shape}")
        stack_path = out_dir / f"{image_id}.fms"
        fmswriter.write_stack(stack_path, spec.input_size[0], spec.input_size[1],
                              layers)
        result.stack_paths[image_id] = stack_path
        entries.append({
            "image_id": image_id,
            "image_path": str(image_path),
            "stack_path": str(stack_path),
        })
    fmswriter.write_manifest(result.manifest_path, entries)
    fmswriter.write_metadata(result.metadata_path, {
        "model": model.name,
        "layers": list(spec.layer_names),
        "input_size": list(spec.input_size),
        "activation_stage": "post-nonlinearity",
        "resize": "direct bilinear, non-aspect-preserving",
        "normalization": (
            None if model.normalization is None
            else {"mean": list(model.normalization[0]),
                  "std": list(model.normalization[1])}
        ),
        "layer_map_shapes": {k: list(v) for k, v in sorted(layer_shapes.items())},
        "failures": dict(sorted(result.failures.items())),
    })
    return result
