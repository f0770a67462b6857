"""featdump: dump pretrained-CNN hidden-layer activations to FMS1 stacks."""

from .extract import ExtractionResult, ExtractionSpec, extract
from .fmswriter import WriteError, write_manifest, write_metadata, write_stack
from .models import (
    REGISTRY,
    LoadedModel,
    ModelLoadFailure,
    TinyNet,
    UnknownLayerName,
    UnknownModel,
    load_model,
    resolve_layers,
)

__all__ = [
    "ExtractionResult",
    "ExtractionSpec",
    "extract",
    "WriteError",
    "write_manifest",
    "write_metadata",
    "write_stack",
    "REGISTRY",
    "LoadedModel",
    "ModelLoadFailure",
    "TinyNet",
    "UnknownLayerName",
    "UnknownModel",
    "load_model",
    "resolve_layers",
]
