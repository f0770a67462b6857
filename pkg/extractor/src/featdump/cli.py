"""Command-line entry point: dump hidden-layer activations for a set of images."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .extract import ExtractionSpec, extract
from .models import REGISTRY, ModelLoadFailure, UnknownLayerName


def parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise SystemExit(f"--size must be HxW, got {text!r}")
    return h, w


def parse_images(text: str) -> list[str]:
    path = Path(text)
    if path.suffix == ".txt" and path.exists():
        lines = path.read_text("utf-8").splitlines()
        return [line.strip() for line in lines if line.strip()]
    return [p for p in text.split(",") if p]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featdump",
        description="Dump CNN hidden-layer activations to FMS1 stacks",
    )
    parser.add_argument("--model", required=True, choices=sorted(REGISTRY))
    parser.add_argument("--layers", required=True,
                        help="comma-separated hidden-layer names")
    parser.add_argument("--images", required=True,
                        help="comma-separated image paths, or a .txt list file")
    parser.add_argument("--size", required=True, metavar="HxW",
                        help="network input size, e.g. 224x224")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExtractionSpec(
        model_name=args.model,
        layer_names=args.layers.split(","),
        input_size=parse_size(args.size),
        image_list=parse_images(args.images),
        output_dir=args.out,
    )
    try:
        result = extract(spec)
    except (UnknownLayerName, ModelLoadFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"extracted {len(result.stack_paths)} stacks, "
          f"{len(result.failures)} failures -> {result.manifest_path.parent}")
    for image_id, error in sorted(result.failures.items()):
        print(f"  FAILED {image_id}: {error}", file=sys.stderr)
    return 0 if not result.failures else 1


if __name__ == "__main__":
    sys.exit(main())
