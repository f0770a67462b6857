"""Command-line entry point for dataset batch runs and threshold sweeps."""

from __future__ import annotations

import argparse
import sys

from .pipeline import (
    PRESETS,
    PipelineConfig,
    run_batch,
    run_sweep,
)
from .posecrop import PoseVariant
from .tensorio import read_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featlens",
        description="Object/part localization from dumped CNN feature-map stacks",
    )
    parser.add_argument("--manifest", required=True, help="dataset manifest JSON")
    parser.add_argument("--config", help="JSON config mirroring PipelineConfig")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="named object/part layer preset")
    parser.add_argument("--object-layers", help="comma-separated layer names")
    parser.add_argument("--part-layers", help="comma-separated layer names")
    parser.add_argument("--n-part", default=None,
                        help="number of parts, or 'auto' for criterion-based selection")
    parser.add_argument("--t-object", type=float, default=None)
    parser.add_argument("--t-parts", type=float, default=None)
    parser.add_argument("--pose-variant", default=None,
                        choices=[v.value for v in PoseVariant])
    parser.add_argument("--margin", type=float, default=None)
    parser.add_argument("--shift", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--sweep", default=None, metavar="LO:HI:STEP",
                        help="threshold sweep, e.g. 0.2:0.45:0.05")
    parser.add_argument("--eval", action="store_true",
                        help="score against manifest ground truth")
    return parser


def config_from_args(args) -> PipelineConfig:
    if args.config:
        config = PipelineConfig.from_json(args.config)
    else:
        preset = PRESETS[args.preset] if args.preset else None
        object_layers = (args.object_layers.split(",") if args.object_layers
                         else (preset or {}).get("object_layers"))
        part_layers = (args.part_layers.split(",") if args.part_layers
                       else (preset or {}).get("part_layers"))
        if not object_layers or not part_layers:
            raise SystemExit(
                "layer sets required: pass --config, --preset, or "
                "--object-layers/--part-layers"
            )
        config = PipelineConfig(object_layers, part_layers)
    updates = {}
    if args.n_part is not None:
        updates["n_part"] = args.n_part if args.n_part == "auto" else int(args.n_part)
    if args.t_object is not None:
        updates["t_object"] = args.t_object
    if args.t_parts is not None:
        updates["t_parts"] = args.t_parts
    if args.pose_variant is not None:
        updates["pose_variant"] = PoseVariant(args.pose_variant)
    if args.margin is not None:
        updates["margin"] = args.margin
    if args.shift is not None:
        updates["shift"] = args.shift
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.sweep is not None:
        lo, hi, step = (float(v) for v in args.sweep.split(":"))
        updates["sweep"] = (lo, hi, step)
    if updates:
        from dataclasses import replace
        config = replace(config, **updates)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    manifest = read_manifest(args.manifest)
    if config.sweep is not None:
        batches = run_sweep(config, manifest, args.out,
                            evaluate=args.eval, workers=args.workers)
        n_failures = sum(len(b.failures) for b in batches.values())
        n_ok = sum(len(b.results) for b in batches.values())
        print(f"sweep: {len(batches)} thresholds, "
              f"{n_ok} image runs ok, {n_failures} failed")
    else:
        batch = run_batch(config, manifest, args.out,
                          evaluate=args.eval, workers=args.workers)
        n_failures = len(batch.failures)
        print(f"batch: {len(batch.results)} images ok, {n_failures} failed")
        for image_id, error in sorted(batch.failures.items()):
            print(f"  FAILED {image_id}: {error}", file=sys.stderr)
    return 0 if n_failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
