"""Batch orchestration: per-image detection pipeline, dataset runs, threshold
sweeps, and the summary artifacts written under an output directory.

One image's failure never aborts a batch; failures are collected into a JSON
report.  With a fixed seed and config, re-running a batch produces
byte-identical output trees.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import evalkit, maskops, partdetect, posecrop, tensorio
from .errors import FeatLensError
from .maskops import BinaryMask
from .modelselect import ClusterValidityReport, select_k
from .partdetect import PartDetection
from .posecrop import Pose, PoseVariant
from .tensorio import Manifest, ManifestEntry

# object/part layer pairs for the supported backbone dumps
PRESETS = {
    "googlenet": {
        "object_layers": ["inception_4e/output", "inception_5a/output"],
        "part_layers": ["inception_4d/output", "inception_4e/output"],
    },
    "vgg19": {
        "object_layers": ["conv5_4"],
        "part_layers": ["conv5_2", "conv5_3"],
    },
    "vgg-cnn-s": {
        "object_layers": ["conv5"],
        "part_layers": ["conv4", "conv5"],
    },
    "synthetic": {
        "object_layers": ["high_a", "high_b"],
        "part_layers": ["mid_a", "mid_b"],
    },
}

AUTO_K_RANGE = range(2, 7)


@dataclass
class PipelineConfig:
    object_layers: list[str]
    part_layers: list[str]
    t_object: float = 0.3
    t_parts: float = 0.3
    n_part: int | str = 2  # integer or "auto"
    pose_variant: PoseVariant = PoseVariant.TWO_VECTOR
    margin: float = 0.05
    shift: float = 0.5
    seed: int = 0
    interpolation: str = "bilinear"
    sweep: tuple[float, float, float] | None = None  # (t_min, t_max, t_step)

    def __post_init__(self):
        if not self.object_layers or not self.part_layers:
            raise ValueError("layer sets must be non-empty")
        for t in (self.t_object, self.t_parts):
            if not 0.0 < t < 1.0:
                raise ValueError(f"threshold {t} outside (0, 1)")
        if self.sweep is not None:
            lo, hi, step = self.sweep
            if not (0.0 < lo < hi < 1.0 and step > 0):
                raise ValueError("sweep bounds must satisfy 0 < lo < hi < 1, step > 0")

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text("utf-8"))
        if "preset" in raw:
            preset = PRESETS[raw.pop("preset")]
            raw.setdefault("object_layers", preset["object_layers"])
            raw.setdefault("part_layers", preset["part_layers"])
        if "pose_variant" in raw:
            raw["pose_variant"] = PoseVariant(raw["pose_variant"])
        if "sweep" in raw and raw["sweep"] is not None:
            raw["sweep"] = tuple(raw["sweep"])
        return cls(**raw)


@dataclass
class ImageResult:
    image_id: str
    object_soft: np.ndarray
    object_binary: BinaryMask
    parts: PartDetection
    pose: Pose
    crops: list[posecrop.CropRegion]
    validity: ClusterValidityReport | None
    n_candidates: int
    image_dims: tuple[int, int]  # (width, height)

    def object_bbox_image(self, margin: float = 0.0) -> tuple:
        """Tight object bbox in image coordinates, optionally margin-extended."""
        rect = posecrop._tight_bbox(self.object_binary)
        if margin:
            rect = posecrop._extend(rect, margin)
        return posecrop._to_image(rect, self.object_binary.grid.shape,
                                  self.image_dims)

    def part_centroids_image(self, shift: float = 0.0) -> list[tuple[float, float]]:
        """Part centroids in image coordinates, optionally shifted along the
        pose vectors (the post-shift detection variant)."""
        vectors = posecrop._part_vectors(self.parts, self.pose)
        mask_h, mask_w = self.object_binary.grid.shape
        sx = self.image_dims[0] / mask_w
        sy = self.image_dims[1] / mask_h
        out = []
        for part, vec in zip(self.parts.parts, vectors):
            x = part.centroid[0] + shift * vec[0]
            y = part.centroid[1] + shift * vec[1]
            out.append((x * sx, y * sy))
        return out


def run_image(config: PipelineConfig, entry: ManifestEntry,
              out_dir: Path | None = None) -> ImageResult:
    """Run the full detection pipeline on one manifest entry and optionally
    write its artifact bundle under out_dir/<image_id>/."""
    stack = tensorio.read_stack(entry.stack_path)
    image = tensorio.read_image(entry.image_path)
    image_dims = (image.shape[1], image.shape[0])

    soft, binary = maskops.detect_object(
        stack, config.object_layers, config.t_object, config.interpolation
    )
    candidates = partdetect.select_candidates(
        stack, config.part_layers, config.t_parts, binary, config.interpolation
    )
    validity = None
    if config.n_part == "auto":
        validity = select_k(candidates, AUTO_K_RANGE, config.seed)
        n_part = validity.best_k_sil
    else:
        n_part = int(config.n_part)
    parts = partdetect.cluster_parts(candidates, n_part, config.t_parts, config.seed)
    parts = posecrop.order_parts(parts)
    pose = posecrop.estimate_pose(soft, binary, parts, config.pose_variant)
    crops = posecrop.crop_regions(
        binary, parts, pose, image_dims, config.margin, config.shift
    )
    result = ImageResult(
        entry.image_id, soft, binary, parts, pose, crops, validity,
        len(candidates), image_dims,
    )
    if out_dir is not None:
        _write_image_bundle(result, Path(out_dir) / entry.image_id)
    return result


def _write_image_bundle(result: ImageResult, image_dir: Path) -> None:
    image_dir.mkdir(parents=True, exist_ok=True)
    tensorio.write_image(maskops.mask_to_u8(result.object_soft),
                         image_dir / "object_mask.pgm")
    for k, part in enumerate(result.parts.parts, start=1):
        tensorio.write_image(maskops.mask_to_u8(part.soft_mask),
                             image_dir / f"part_{k}_mask.pgm")
    _dump_json(image_dir / "crops.json",
               [posecrop.crop_to_dict(c) for c in result.crops])
    _dump_json(image_dir / "pose.json", posecrop.pose_to_dict(result.pose))
    report = {
        "image_id": result.image_id,
        "n_candidates": result.n_candidates,
        "n_parts": len(result.parts),
        "parts": [
            {
                "centroid": list(p.centroid),
                "area": p.area,
                "member_maps": sorted([list(m) for m in p.member_maps]),
            }
            for p in result.parts.parts
        ],
    }
    if result.validity is not None:
        report["cluster_validity"] = {
            "per_k": {str(k): v for k, v in sorted(result.validity.per_k.items())},
            "best_k_db": result.validity.best_k_db,
            "best_k_sil": result.validity.best_k_sil,
        }
    _dump_json(image_dir / "report.json", report)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", "utf-8")


@dataclass
class BatchResult:
    results: dict[str, ImageResult] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)


def run_batch(
    config: PipelineConfig,
    manifest: Manifest,
    out_dir,
    evaluate: bool = False,
    workers: int = 1,
) -> BatchResult:
    """Process every manifest entry; write per-image bundles plus dataset-level
    summaries under out_dir/summary/."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    batch = BatchResult()

    def one(entry: ManifestEntry):
        try:
            return entry.image_id, run_image(config, entry, out_dir), None
        except FeatLensError as exc:
            return entry.image_id, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, manifest.entries))
    else:
        outcomes = [one(e) for e in manifest.entries]
    for image_id, result, error in outcomes:
        if error is None:
            batch.results[image_id] = result
        else:
            batch.failures[image_id] = error

    summary = out_dir / "summary"
    summary.mkdir(exist_ok=True)
    _dump_json(summary / "failures.json",
               {k: batch.failures[k] for k in sorted(batch.failures)})
    _write_validity_csvs(batch, summary)
    if evaluate:
        _write_eval_csvs(batch, manifest, config, summary)
    return batch


def _write_validity_csvs(batch: BatchResult, summary: Path) -> None:
    rows = []
    best_counts: dict[str, dict[int, int]] = {"db": {}, "silhouette": {}}
    for image_id in sorted(batch.results):
        validity = batch.results[image_id].validity
        if validity is None:
            continue
        for k in sorted(validity.per_k):
            rows.append([image_id, k,
                         f"{validity.per_k[k]['db_index']:.9g}",
                         f"{validity.per_k[k]['mean_silhouette']:.9g}"])
        best_counts["db"][validity.best_k_db] = \
            best_counts["db"].get(validity.best_k_db, 0) + 1
        best_counts["silhouette"][validity.best_k_sil] = \
            best_counts["silhouette"].get(validity.best_k_sil, 0) + 1
    if not rows:
        return
    with open(summary / "cluster_validity.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "k", "db", "silhouette"])
        writer.writerows(rows)
    with open(summary / "best_k_histogram.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["criterion", "k", "count"])
        for criterion in ("db", "silhouette"):
            for k in sorted(best_counts[criterion]):
                writer.writerow([criterion, k, best_counts[criterion][k]])


def _write_eval_csvs(batch: BatchResult, manifest: Manifest,
                     config: PipelineConfig, summary: Path) -> None:
    gt_boxes = {
        e.image_id: e.ground_truth.bbox
        for e in manifest.entries
        if e.ground_truth is not None and e.ground_truth.bbox is not None
    }
    scored = sorted(set(batch.results) & set(gt_boxes))
    if scored:
        curves = []
        for label, margin in (("no-margin", 0.0), ("margin", config.margin)):
            preds = {i: batch.results[i].object_bbox_image(margin) for i in scored}
            curves.append(evalkit.recall_curve(
                preds, gt_boxes, variant_label=label))
        evalkit.write_recall_csv(curves, summary / "recall_curves.csv")
    has_parts = any(
        e.ground_truth is not None and e.ground_truth.parts
        for e in manifest.entries if e.image_id in batch.results
    )
    if has_parts:
        for label, shift in (("pre-shift", 0.0), ("post-shift", config.shift)):
            detections = {
                i: batch.results[i].part_centroids_image(shift)
                for i in sorted(batch.results)
            }
            table = evalkit.part_distance_table(detections, manifest)
            evalkit.write_part_distance_csv(
                table, summary / f"part_distance_{label}.csv")


def sweep_thresholds(sweep: tuple[float, float, float]) -> list[float]:
    lo, hi, step = sweep
    n = int(round((hi - lo) / step)) + 1
    values = [round(lo + i * step, 10) for i in range(n)]
    return [v for v in values if v <= hi + 1e-9]


def run_sweep(
    config: PipelineConfig,
    manifest: Manifest,
    out_dir,
    evaluate: bool = False,
    workers: int = 1,
) -> dict[float, BatchResult]:
    """Re-run the batch for every threshold in the sweep (applied to both
    t_object and t_parts) and emit a mask-stability summary."""
    if config.sweep is None:
        raise ValueError("config.sweep is not set")
    out_dir = Path(out_dir)
    thresholds = sweep_thresholds(config.sweep)
    batches: dict[float, BatchResult] = {}
    for t in thresholds:
        cfg = replace(config, t_object=t, t_parts=t, sweep=None)
        batches[t] = run_batch(cfg, manifest, out_dir / f"T_{t:.2f}",
                               evaluate=evaluate, workers=workers)
    summary = out_dir / "summary"
    summary.mkdir(parents=True, exist_ok=True)
    with open(summary / "sweep_stability.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "t_low", "t_high", "mask_iou",
                         "area_low", "area_high"])
        for lo, hi in zip(thresholds, thresholds[1:]):
            common = sorted(set(batches[lo].results) & set(batches[hi].results))
            for image_id in common:
                a = batches[lo].results[image_id].object_binary.grid.astype(bool)
                b = batches[hi].results[image_id].object_binary.grid.astype(bool)
                union = np.logical_or(a, b).sum()
                inter = np.logical_and(a, b).sum()
                writer.writerow([
                    image_id, f"{lo:.2f}", f"{hi:.2f}",
                    f"{(inter / union if union else 0.0):.6g}",
                    int(a.sum()), int(b.sum()),
                ])
    return batches
