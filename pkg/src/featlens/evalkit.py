"""Detection evaluation: Recall-vs-IoU curves for object boxes and the
bbox-normalized part-distance metric against the 15 annotated bird parts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import DegenerateBox, InvisiblePart, MissingGroundTruth, NoAnnotations
from .tensorio import Manifest

PART_NAMES = {
    1: "back", 2: "beak", 3: "belly", 4: "breast", 5: "crown",
    6: "forehead", 7: "left eye", 8: "left leg", 9: "left wing", 10: "nape",
    11: "right eye", 12: "right leg", 13: "right wing", 14: "tail", 15: "throat",
}

DEFAULT_IOU_THRESHOLDS = tuple(round(0.10 + 0.05 * i, 2) for i in range(17))  # 0.10..0.90


@dataclass
class RecallCurve:
    iou_thresholds: list[float]
    recall: list[float]
    n_images: int
    variant_label: str


@dataclass
class PartDistanceTable:
    # per detected part: gt part_id -> {"mean_norm_dist", "n_visible"}
    per_detected_part: list[dict[int, dict[str, float]]]


def iou(a, b) -> float:
    """Intersection over union of two (x, y, w, h) rectangles."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return inter / union


def recall_curve(
    predictions: dict[str, tuple],
    ground_truth: dict[str, tuple],
    thresholds=DEFAULT_IOU_THRESHOLDS,
    variant_label: str = "",
) -> RecallCurve:
    """Fraction of images whose predicted box reaches each IoU threshold."""
    missing = set(predictions) - set(ground_truth)
    if missing or not predictions:
        raise MissingGroundTruth(
            f"no ground truth for {sorted(missing)}" if missing else "no predictions"
        )
    ious = [iou(predictions[k], ground_truth[k]) for k in sorted(predictions)]
    thresholds = [float(t) for t in thresholds]
    recall = [sum(v >= t for v in ious) / len(ious) for t in thresholds]
    return RecallCurve(thresholds, recall, len(ious), variant_label)


def part_distance(pred_centroid, gt_part, gt_bbox, visible: bool = True) -> float:
    """Euclidean distance after normalizing x by the gt bbox width and y by
    its height."""
    if not visible:
        raise InvisiblePart("ground-truth part is not visible")
    _, _, w, h = gt_bbox
    if w <= 0 or h <= 0:
        raise DegenerateBox(f"bbox size {w}x{h}")
    px, py = pred_centroid
    gx, gy = gt_part
    return math.hypot((px - gx) / w, (py - gy) / h)


def part_distance_table(
    detections: dict[str, list[tuple[float, float]]],
    manifest: Manifest,
) -> PartDistanceTable:
    """Mean normalized distance from each detected part to each annotated
    ground-truth part, over all images where the gt part is visible.

    `detections` maps image_id to the detected part centroids in
    original-image pixel coordinates (same part count for every image).
    """
    n_detected = max((len(v) for v in detections.values()), default=0)
    sums = [{pid: 0.0 for pid in PART_NAMES} for _ in range(n_detected)]
    counts = [{pid: 0 for pid in PART_NAMES} for _ in range(n_detected)]
    any_annotation = False
    for entry in manifest.entries:
        if entry.image_id not in detections:
            continue
        gt = entry.ground_truth
        if gt is None or not gt.parts or gt.bbox is None:
            continue
        any_annotation = True
        for d_idx, centroid in enumerate(detections[entry.image_id]):
            for ann in gt.parts:
                if not ann.visible:
                    continue
                dist = part_distance(centroid, (ann.x, ann.y), gt.bbox)
                sums[d_idx][ann.part_id] += dist
                counts[d_idx][ann.part_id] += 1
    if not any_annotation:
        raise NoAnnotations("no manifest entry carries part annotations")
    table = []
    for d_idx in range(n_detected):
        row = {}
        for pid in PART_NAMES:
            n = counts[d_idx][pid]
            row[pid] = {
                "mean_norm_dist": sums[d_idx][pid] / n if n else float("nan"),
                "n_visible": n,
            }
        table.append(row)
    return PartDistanceTable(table)


def write_recall_csv(curves: list[RecallCurve], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "iou_threshold", "recall", "n_images"])
        for curve in curves:
            for t, r in zip(curve.iou_thresholds, curve.recall):
                writer.writerow([curve.variant_label, f"{t:.6g}", f"{r:.6g}",
                                 curve.n_images])


def write_part_distance_csv(table: PartDistanceTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["detected_part", "gt_part_id", "gt_part_name",
                         "mean_norm_dist", "n_visible"])
        for d_idx, row in enumerate(table.per_detected_part):
            for pid in sorted(row):
                cell = row[pid]
                writer.writerow([
                    d_idx + 1, pid, PART_NAMES[pid],
                    f"{cell['mean_norm_dist']:.6g}", cell["n_visible"],
                ])
