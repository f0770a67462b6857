import json
from pathlib import Path

import numpy as np
import pytest

from featlens import pipeline, tensorio
from featlens.cli import main as cli_main
from featlens.pipeline import PipelineConfig, run_batch, run_image, run_sweep
from featlens.posecrop import PoseVariant
from featlens.synthetic import make_scene
from featlens.tensorio import (
    GroundTruth,
    Manifest,
    ManifestEntry,
    PartAnnotation,
    write_image,
    write_manifest,
    write_stack,
)


def synthetic_config(**overrides) -> PipelineConfig:
    base = dict(pipeline.PRESETS["synthetic"], seed=0)
    base.update(overrides)
    return PipelineConfig(**base)


def write_dataset(root: Path, seeds, tail_bias=False) -> Path:
    """Materialize planted scenes as stack/image files plus a manifest."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for seed in seeds:
        scene = make_scene(seed, tail_bias=tail_bias)
        image_id = scene.stack.image_id
        stack_path = root / f"{image_id}.fms"
        image_path = root / f"{image_id}.pgm"
        write_stack(scene.stack, stack_path)
        write_image(scene.image[:, :, 0], image_path)
        img_h, img_w = scene.image.shape[:2]
        sx = img_w / scene.stack.input_width
        sy = img_h / scene.stack.input_height
        gt = GroundTruth(
            bbox=scene.object_bbox_image,
            parts=[
                PartAnnotation(5, scene.head_center[0] * sx,
                               scene.head_center[1] * sy, True),
                PartAnnotation(1, scene.body_center[0] * sx,
                               scene.body_center[1] * sy, True),
            ],
        )
        entries.append(ManifestEntry(image_id, str(image_path), str(stack_path), gt))
    manifest_path = root / "manifest.json"
    write_manifest(Manifest(entries), manifest_path)
    return manifest_path


def test_run_image_bundle(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0])
    manifest = tensorio.read_manifest(manifest_path)
    out = tmp_path / "out"
    result = run_image(synthetic_config(), manifest.entries[0], out)
    assert len(result.parts) == 2
    assert result.n_candidates >= 4
    bundle = out / result.image_id
    for name in ("object_mask.pgm", "part_1_mask.pgm", "part_2_mask.pgm",
                 "crops.json", "pose.json", "report.json"):
        assert (bundle / name).exists()
    crops = json.loads((bundle / "crops.json").read_text())
    assert crops[0]["kind"] == "object"
    assert [c["kind"] for c in crops[1:]] == ["part", "part"]
    report = json.loads((bundle / "report.json").read_text())
    assert report["n_parts"] == 2
    pose = json.loads((bundle / "pose.json").read_text())
    assert pose["variant"] == "two-vector"


def test_run_image_auto_k(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [1])
    manifest = tensorio.read_manifest(manifest_path)
    result = run_image(synthetic_config(n_part="auto"), manifest.entries[0])
    assert result.validity is not None
    assert len(result.parts) == result.validity.best_k_sil


def test_batch_continues_past_failures(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0, 1])
    manifest = tensorio.read_manifest(manifest_path)
    # corrupt one stack so its image fails while the other succeeds
    bad = Path(manifest.entries[0].stack_path)
    bad.write_bytes(bad.read_bytes()[:40])
    out = tmp_path / "out"
    batch = run_batch(synthetic_config(), manifest, out)
    assert len(batch.results) == 1
    assert len(batch.failures) == 1
    failures = json.loads((out / "summary" / "failures.json").read_text())
    assert list(failures) == [manifest.entries[0].image_id]
    assert "TruncatedFile" in failures[manifest.entries[0].image_id]


def test_batch_unknown_layers_fail_per_image(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0])
    manifest = tensorio.read_manifest(manifest_path)
    config = synthetic_config(object_layers=["nope"])
    batch = run_batch(config, manifest, tmp_path / "out")
    assert batch.results == {}
    assert "UnknownLayer" in next(iter(batch.failures.values()))


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_batch_reruns_byte_identical(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0, 1, 2])
    manifest = tensorio.read_manifest(manifest_path)
    config = synthetic_config(n_part="auto")
    run_batch(config, manifest, tmp_path / "out_a", evaluate=True)
    run_batch(config, manifest, tmp_path / "out_b", evaluate=True)
    a = tree_bytes(tmp_path / "out_a")
    b = tree_bytes(tmp_path / "out_b")
    assert a.keys() == b.keys()
    for name in a:
        assert a[name] == b[name], name


def test_batch_workers_match_serial(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0, 1, 2, 3])
    manifest = tensorio.read_manifest(manifest_path)
    run_batch(synthetic_config(), manifest, tmp_path / "serial", workers=1)
    run_batch(synthetic_config(), manifest, tmp_path / "parallel", workers=4)
    assert tree_bytes(tmp_path / "serial") == tree_bytes(tmp_path / "parallel")


def test_eval_outputs(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0, 1])
    manifest = tensorio.read_manifest(manifest_path)
    out = tmp_path / "out"
    run_batch(synthetic_config(), manifest, out, evaluate=True)
    summary = out / "summary"
    assert (summary / "recall_curves.csv").exists()
    assert (summary / "part_distance_pre-shift.csv").exists()
    assert (summary / "part_distance_post-shift.csv").exists()
    text = (summary / "recall_curves.csv").read_text()
    assert "no-margin" in text and "margin" in text


def test_sweep_thresholds_grid():
    values = pipeline.sweep_thresholds((0.2, 0.45, 0.05))
    assert values == pytest.approx([0.2, 0.25, 0.3, 0.35, 0.4, 0.45])


def test_run_sweep_layout(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0, 1])
    manifest = tensorio.read_manifest(manifest_path)
    config = synthetic_config(sweep=(0.2, 0.45, 0.05))
    out = tmp_path / "out"
    batches = run_sweep(config, manifest, out)
    assert len(batches) == 6
    for t in (0.20, 0.25, 0.30, 0.35, 0.40, 0.45):
        assert (out / f"T_{t:.2f}").is_dir()
    stability = (out / "summary" / "sweep_stability.csv").read_text().splitlines()
    assert stability[0] == "image_id,t_low,t_high,mask_iou,area_low,area_high"
    # 5 adjacent threshold pairs x 2 images
    assert len(stability) == 1 + 10
    for line in stability[1:]:
        assert float(line.split(",")[3]) > 0.5


def test_config_from_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "preset": "vgg19", "t_object": 0.35, "n_part": "auto",
        "pose_variant": "focal-vector",
    }))
    config = PipelineConfig.from_json(path)
    assert config.object_layers == ["conv5_4"]
    assert config.part_layers == ["conv5_2", "conv5_3"]
    assert config.t_object == 0.35
    assert config.n_part == "auto"
    assert config.pose_variant is PoseVariant.FOCAL_VECTOR


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig([], ["a"])
    with pytest.raises(ValueError):
        PipelineConfig(["a"], ["b"], t_object=1.5)
    with pytest.raises(ValueError):
        PipelineConfig(["a"], ["b"], sweep=(0.5, 0.2, 0.05))


def test_cli_batch(tmp_path, capsys):
    manifest_path = write_dataset(tmp_path / "data", [0, 1])
    out = tmp_path / "out"
    rc = cli_main([
        "--manifest", str(manifest_path), "--out", str(out),
        "--preset", "synthetic", "--seed", "0", "--eval",
    ])
    assert rc == 0
    assert "2 images ok, 0 failed" in capsys.readouterr().out
    assert (out / "summary" / "recall_curves.csv").exists()


def test_cli_flag_overrides(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0])
    out = tmp_path / "out"
    rc = cli_main([
        "--manifest", str(manifest_path), "--out", str(out),
        "--object-layers", "high_a,high_b", "--part-layers", "mid_a,mid_b",
        "--t-object", "0.25", "--t-parts", "0.25", "--n-part", "2",
        "--pose-variant", "head-body-vector", "--margin", "0.1",
        "--shift", "0.25", "--seed", "3",
    ])
    assert rc == 0
    pose = json.loads(next((out.glob("scene_*/pose.json"))).read_text())
    assert pose["variant"] == "head-body-vector"
    assert len(pose["vectors"]) == 1


def test_cli_failure_exit_code(tmp_path, capsys):
    manifest_path = write_dataset(tmp_path / "data", [0])
    manifest = tensorio.read_manifest(manifest_path)
    Path(manifest.entries[0].stack_path).write_bytes(b"FMS1 broken")
    rc = cli_main([
        "--manifest", str(manifest_path), "--out", str(tmp_path / "out"),
        "--preset", "synthetic",
    ])
    assert rc == 1


def test_cli_sweep(tmp_path, capsys):
    manifest_path = write_dataset(tmp_path / "data", [0])
    out = tmp_path / "out"
    rc = cli_main([
        "--manifest", str(manifest_path), "--out", str(out),
        "--preset", "synthetic", "--sweep", "0.25:0.35:0.05",
    ])
    assert rc == 0
    assert "3 thresholds" in capsys.readouterr().out
    assert (out / "summary" / "sweep_stability.csv").exists()


def test_cli_requires_layers(tmp_path):
    manifest_path = write_dataset(tmp_path / "data", [0])
    with pytest.raises(SystemExit):
        cli_main(["--manifest", str(manifest_path), "--out", str(tmp_path / "o")])
