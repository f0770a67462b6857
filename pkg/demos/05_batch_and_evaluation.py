"""End-to-end batch run with evaluation artifacts.

Materializes a small planted corpus on disk (FMS1 stacks, PGM images, a JSON
manifest with ground truth), runs the batch pipeline, and reads back the
summary CSVs: Recall-vs-IoU for the object boxes (with and without the 5%
margin) and the normalized part distances before and after the pose shift.
The same run is also repeated over a threshold sweep to show mask stability.
"""

import csv
import tempfile
from pathlib import Path

from featlens import tensorio
from featlens.pipeline import PRESETS, PipelineConfig, run_batch, run_sweep
from featlens.synthetic import make_scene

workdir = Path(tempfile.mkdtemp(prefix="featlens_demo_"))
data = workdir / "data"
data.mkdir()

entries = []
for seed in range(8):
    scene = make_scene(seed)
    image_id = scene.stack.image_id
    tensorio.write_stack(scene.stack, data / f"{image_id}.fms")
    tensorio.write_image(scene.image[:, :, 0], data / f"{image_id}.pgm")
    sx = scene.image.shape[1] / scene.stack.input_width
    sy = scene.image.shape[0] / scene.stack.input_height
    entries.append(tensorio.ManifestEntry(
        image_id, str(data / f"{image_id}.pgm"), str(data / f"{image_id}.fms"),
        tensorio.GroundTruth(bbox=scene.object_bbox_image, parts=[
            tensorio.PartAnnotation(5, scene.head_center[0] * sx,
                                    scene.head_center[1] * sy, True),
            tensorio.PartAnnotation(1, scene.body_center[0] * sx,
                                    scene.body_center[1] * sy, True),
        ]),
    ))
manifest = tensorio.Manifest(entries)
tensorio.write_manifest(manifest, data / "manifest.json")

config = PipelineConfig(**PRESETS["synthetic"], seed=0)
batch = run_batch(config, manifest, workdir / "run", evaluate=True)
print(f"batch: {len(batch.results)} images ok, {len(batch.failures)} failed")

summary = workdir / "run" / "summary"
print("\nrecall at selected IoU thresholds:")
with open(summary / "recall_curves.csv") as fh:
    for row in csv.DictReader(fh):
        if row["iou_threshold"] in ("0.5", "0.7", "0.9"):
            print(f"  {row['variant']:>9} iou>={row['iou_threshold']}: "
                  f"recall {row['recall']}")

print("\nmean normalized distance to the annotated crown (part id 5):")
for label in ("pre-shift", "post-shift"):
    with open(summary / f"part_distance_{label}.csv") as fh:
        for row in csv.DictReader(fh):
            if row["gt_part_id"] == "5" and row["detected_part"] == "1":
                print(f"  {label:>10}: {row['mean_norm_dist']}")

sweep_config = PipelineConfig(**PRESETS["synthetic"], seed=0,
                              sweep=(0.2, 0.45, 0.05))
run_sweep(sweep_config, manifest, workdir / "sweep")
ious = []
with open(workdir / "sweep" / "summary" / "sweep_stability.csv") as fh:
    ious = [float(row["mask_iou"]) for row in csv.DictReader(fh)]
print(f"\nthreshold sweep 0.20..0.45: {len(ious)} adjacent-mask comparisons, "
      f"min IoU {min(ious):.3f} (steep planted edges barely move)")
print(f"\nartifacts under {workdir}")
