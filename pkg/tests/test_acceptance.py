"""End-to-end acceptance gate.

Each test checks one shipping criterion and prints a single PASS/FAIL line so
the suite output doubles as a release checklist.  Tolerances are pinned here
and must not be loosened to make a failing criterion pass.
"""

import math
import time
from pathlib import Path

import numpy as np

from featlens import evalkit, maskops, partdetect, posecrop, tensorio
from featlens.clustering import kmeans
from featlens.modelselect import davies_bouldin, mean_silhouette, select_k
from featlens.pipeline import PRESETS, PipelineConfig, run_batch
from featlens.synthetic import OBJECT_LAYERS, PART_LAYERS, make_scene
from featlens.tensorio import FeatureStack, LayerBlock

from oracles import (
    accepts_map,
    brute_force_kmeans_sse,
    db_index_script,
    saliency_product,
    silhouette_script,
)


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: {status}{suffix}")


def scene_pipeline(seed, t=0.3, tail_bias=False, shift=0.5):
    """Run the in-memory pipeline on one planted scene; crops stay in mask
    (CNN input) coordinates."""
    scene = make_scene(seed, tail_bias=tail_bias)
    soft, binary = maskops.detect_object(scene.stack, OBJECT_LAYERS, t)
    candidates = partdetect.select_candidates(scene.stack, PART_LAYERS, t, binary)
    parts = posecrop.order_parts(
        partdetect.cluster_parts(candidates, 2, t, seed=0)
    )
    pose = posecrop.estimate_pose(soft, binary, parts)
    dims = (scene.stack.input_width, scene.stack.input_height)
    crops = posecrop.crop_regions(binary, parts, pose, dims, 0.05, shift)
    return scene, binary, parts, crops


def test_object_saliency_oracle_equivalence():
    """detect_object matches the loop-based reference aggregation within 1e-5
    per pixel on 50 random stacks, in under 10 seconds."""
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    binary_mismatch = 0
    for _ in range(50):
        n_layers = int(rng.integers(1, 4))
        in_h = int(rng.integers(8, 33))
        in_w = int(rng.integers(8, 33))
        layers = []
        layer_maps = []
        for i in range(n_layers):
            maps = rng.uniform(size=(int(rng.integers(1, 9)),
                                     int(rng.integers(2, 17)),
                                     int(rng.integers(2, 17)))).astype(np.float32)
            layers.append(LayerBlock(f"l{i}", maps))
            layer_maps.append([m for m in maps])
        stack = FeatureStack("acc", in_h, in_w, layers)
        t = float(rng.uniform(0.2, 0.45))
        soft, binary = maskops.detect_object(stack, [f"l{i}" for i in range(n_layers)], t)
        ref_soft, ref_binary = saliency_product(layer_maps, in_h, in_w, t)
        worst = max(worst, float(np.abs(soft - np.array(ref_soft)).max()))
        if not np.array_equal(binary.grid, np.array(ref_binary, np.uint8)):
            binary_mismatch += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and binary_mismatch == 0 and elapsed < 10.0
    report("eq1-6-saliency-oracle", ok,
           f"max|diff|={worst:.2e}, binary mismatches={binary_mismatch}, "
           f"{elapsed:.2f}s")
    assert ok


def test_part_constraint_fidelity():
    """Accept/reject decisions on 200 random maps agree exactly with an
    independent connectivity plus centroid-containment checker."""
    rng = np.random.default_rng(7)
    disagreements = 0
    total = 0
    while total < 200:
        maps = (rng.uniform(size=(8, 8, 8)).astype(np.float32)
                ** rng.uniform(1.0, 4.0))
        stack = FeatureStack("acc", 16, 16, [LayerBlock("m", maps)])
        obj = np.zeros((16, 16), np.uint8)
        y0, x0 = rng.integers(0, 8, size=2)
        obj[y0:y0 + 8, x0:x0 + 8] = 1
        object_binary = maskops.BinaryMask(obj, 0.3)
        t = float(rng.uniform(0.2, 0.45))
        got = {c.map_index for c in partdetect.select_candidates(
            stack, ["m"], t, object_binary)}
        for idx in range(maps.shape[0]):
            soft = maskops.resize_bilinear(maskops.normalize(maps[idx]), 16, 16)
            binary = (soft > t).astype(int).tolist()
            if accepts_map(soft.tolist(), binary, obj.tolist()) != (idx in got):
                disagreements += 1
            total += 1
    ok = disagreements == 0
    report("algorithm1-constraint-fidelity", ok,
           f"{disagreements}/{total} disagreements")
    assert ok


def test_kmeans_small_scale_optimality():
    """SSE matches the brute-force partition optimum within 1e-9 on at least
    99 of 100 random instances (n <= 12, k <= 3), in under 30 seconds."""
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    hits = 0
    for _ in range(100):
        n = int(rng.integers(4, 13))
        k = int(rng.integers(2, 4))
        pts = rng.uniform(0, 10, size=(n, 2))
        _, _, sse = kmeans(pts, k, seed=int(rng.integers(2**31)))
        if abs(sse - brute_force_kmeans_sse(pts, k)) <= 1e-9:
            hits += 1
    elapsed = time.perf_counter() - start
    ok = hits >= 99 and elapsed < 30.0
    report("kmeans-brute-force-optimality", ok, f"{hits}/100, {elapsed:.2f}s")
    assert ok


def test_model_selection_prefers_two_parts():
    """On 100 planted two-part scenes, both validity criteria pick k = 2 for
    at least 90% of images."""
    hits = 0
    for seed in range(100):
        scene = make_scene(seed)
        _, binary = maskops.detect_object(scene.stack, OBJECT_LAYERS, 0.3)
        candidates = partdetect.select_candidates(
            scene.stack, PART_LAYERS, 0.3, binary)
        rep = select_k(candidates, range(2, 7), seed=0)
        if rep.best_k_db == 2 and rep.best_k_sil == 2:
            hits += 1
    ok = hits >= 90
    report("model-selection-k2", ok, f"{hits}/100 images picked k=2")
    assert ok


def test_validity_indices_match_scripts_and_invariances():
    """DB and Silhouette agree with scripted references within 1e-9 on 50
    random clusterings and are invariant to similarity transforms."""
    rng = np.random.default_rng(23)
    worst_db = worst_sil = worst_inv = 0.0
    for _ in range(50):
        n = int(rng.integers(6, 16))
        k = int(rng.integers(2, 5))
        pts = rng.uniform(0, 10, size=(n, 2))
        while True:
            labels = rng.integers(0, k, size=n)
            if len(np.unique(labels)) == k:
                break
        centers = np.array([pts[labels == c].mean(axis=0) for c in range(k)])
        db = davies_bouldin(pts, labels, centers)
        sil = mean_silhouette(pts, labels)
        worst_db = max(worst_db, abs(
            db - db_index_script(pts.tolist(), labels.tolist(), centers.tolist())))
        worst_sil = max(worst_sil, abs(
            sil - silhouette_script(pts.tolist(), labels.tolist())))
        angle = rng.uniform(-np.pi, np.pi)
        rot = np.array([[np.cos(angle), -np.sin(angle)],
                        [np.sin(angle), np.cos(angle)]])
        scale = rng.uniform(0.5, 3.0)
        shift = rng.uniform(-20, 20, size=2)
        moved = (pts @ rot.T) * scale + shift
        moved_centers = (centers @ rot.T) * scale + shift
        worst_inv = max(
            worst_inv,
            abs(davies_bouldin(moved, labels, moved_centers) - db),
            abs(mean_silhouette(moved, labels) - sil),
        )
    ok = worst_db <= 1e-9 and worst_sil <= 1e-9 and worst_inv <= 1e-9
    report("validity-index-oracle", ok,
           f"max|db diff|={worst_db:.1e}, max|sil diff|={worst_sil:.1e}, "
           f"max invariance drift={worst_inv:.1e}")
    assert ok


def coverage(rect, extent):
    rx, ry, rw, rh = rect
    ex, ey, ew, eh = extent
    ix = max(0.0, min(rx + rw, ex + ew) - max(rx, ex))
    iy = max(0.0, min(ry + rh, ey + eh) - max(ry, ey))
    return (ix * iy) / (ew * eh)


def test_part_localization_and_shifted_crops():
    """Part centroids land within 5 mask pixels of the planted centers for at
    least 90% of scenes; in the tail-bias scenario the pose-shifted body crop
    covers >= 90% of the planted body+tail extent while the unshifted crop
    stays below 90%, for at least 80% of biased scenes."""
    centroid_hits = 0
    for seed in range(50):
        scene, _, parts, _ = scene_pipeline(seed)
        got = sorted(p.centroid for p in parts.parts)
        planted = sorted([scene.head_center, scene.body_center])
        if all(math.dist(g, p) <= 5.0 for g, p in zip(got, planted)):
            centroid_hits += 1

    bias_hits = 0
    for seed in range(50):
        scene, _, _, shifted = scene_pipeline(seed, tail_bias=True, shift=0.5)
        _, _, _, plain = scene_pipeline(seed, tail_bias=True, shift=0.0)
        extent = scene.body_tail_extent_mask
        cov_shifted = coverage(shifted[2].rect, extent)
        cov_plain = coverage(plain[2].rect, extent)
        if cov_shifted >= 0.9 and cov_plain < 0.9:
            bias_hits += 1

    ok = centroid_hits >= 45 and bias_hits >= 40
    report("part-localization-and-shift", ok,
           f"centroids {centroid_hits}/50 within 5px, "
           f"tail-bias {bias_hits}/50 fixed by shift")
    assert ok


def test_threshold_robustness():
    """Across T in 0.20..0.45, per-image object bbox IoU against ground truth
    varies by < 0.15 for >= 90% of scenes, and the positive-region area is
    non-increasing in T for all scenes."""
    thresholds = [0.20, 0.25, 0.30, 0.35, 0.40, 0.45]
    stable = 0
    monotone = 0
    n = 50
    for seed in range(n):
        scene = make_scene(seed)
        gt = tuple(v / 2.0 for v in scene.object_bbox_image)  # image -> mask px
        ious = []
        areas = []
        for t in thresholds:
            _, binary = maskops.detect_object(scene.stack, OBJECT_LAYERS, t)
            areas.append(binary.area)
            ious.append(evalkit.iou(posecrop._tight_bbox(binary), gt))
        if max(ious) - min(ious) < 0.15:
            stable += 1
        if all(a >= b for a, b in zip(areas, areas[1:])):
            monotone += 1
    ok = stable >= int(0.9 * n) and monotone == n
    report("threshold-robustness", ok,
           f"iou range <0.15 for {stable}/{n}, monotone areas {monotone}/{n}")
    assert ok


def test_evaluation_kit_reference_values():
    """iou and part_distance reproduce the hand-computed examples exactly, the
    margin arithmetic matches the worked example to 1e-9, and emitted recall
    curves are monotone non-increasing."""
    checks = [
        abs(evalkit.iou((0, 0, 2, 2), (0, 1, 2, 2)) - 2 / 6) == 0.0,
        evalkit.iou((3, 4, 10, 5), (3, 4, 10, 5)) == 1.0,
        evalkit.iou((0, 0, 2, 2), (5, 5, 2, 2)) == 0.0,
        abs(evalkit.part_distance((60, 35), (10, 10), (5, 5, 100, 50))
            - math.sqrt(0.5)) <= 1e-15,
        evalkit.part_distance((10, 10), (10, 10), (5, 5, 100, 50)) == 0.0,
    ]
    margin_rect = posecrop._extend((10.0, 10.0, 100.0, 50.0), 0.05)
    checks.append(max(abs(a - b) for a, b in
                      zip(margin_rect, (7.5, 8.75, 105.0, 52.5))) <= 1e-9)
    rng = np.random.default_rng(5)
    preds = {f"i{n}": (0.0, 0.0, 10.0, 10.0) for n in range(20)}
    gts = {f"i{n}": (float(rng.uniform(0, 8)), 0.0, 10.0, 10.0) for n in range(20)}
    curve = evalkit.recall_curve(preds, gts)
    checks.append(all(a >= b for a, b in zip(curve.recall, curve.recall[1:])))
    ok = all(checks)
    report("evaluation-kit-reference", ok, f"{sum(checks)}/{len(checks)} checks")
    assert ok


def write_corpus(root: Path, seeds):
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for seed in seeds:
        scene = make_scene(seed)
        stack_path = root / f"{scene.stack.image_id}.fms"
        image_path = root / f"{scene.stack.image_id}.pgm"
        tensorio.write_stack(scene.stack, stack_path)
        tensorio.write_image(scene.image[:, :, 0], image_path)
        entries.append(tensorio.ManifestEntry(
            scene.stack.image_id, str(image_path), str(stack_path),
            tensorio.GroundTruth(bbox=scene.object_bbox_image, parts=[
                tensorio.PartAnnotation(5, scene.head_center[0] * 2,
                                        scene.head_center[1] * 2, True),
                tensorio.PartAnnotation(1, scene.body_center[0] * 2,
                                        scene.body_center[1] * 2, True),
            ]),
        ))
    return tensorio.Manifest(entries)


def test_batch_determinism():
    """Two batch runs with the same seed and config produce byte-identical
    output trees."""
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        manifest = write_corpus(tmp / "data", range(5))
        config = PipelineConfig(**PRESETS["synthetic"], n_part="auto", seed=0)
        run_batch(config, manifest, tmp / "a", evaluate=True)
        run_batch(config, manifest, tmp / "b", evaluate=True)
        trees = []
        for name in ("a", "b"):
            trees.append({
                str(p.relative_to(tmp / name)): p.read_bytes()
                for p in sorted((tmp / name).rglob("*")) if p.is_file()
            })
        same_names = trees[0].keys() == trees[1].keys()
        diffs = [k for k in trees[0] if trees[0][k] != trees[1].get(k)]
    ok = same_names and not diffs
    report("batch-determinism", ok,
           f"{len(trees[0])} files compared, {len(diffs)} differ")
    assert ok


def test_fms1_round_trip_torture():
    """1000 randomized stacks survive write -> read bit-exactly."""
    import tempfile
    rng = np.random.default_rng(99)
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "s.fms"
        for _ in range(1000):
            layers = []
            for i in range(int(rng.integers(1, 4))):
                shape = (int(rng.integers(1, 5)), int(rng.integers(1, 7)),
                         int(rng.integers(1, 7)))
                layers.append(LayerBlock(
                    f"layer_{i}", rng.normal(scale=100, size=shape)
                    .astype(np.float32)))
            stack = FeatureStack("rt", int(rng.integers(1, 64)),
                                 int(rng.integers(1, 64)), layers)
            tensorio.write_stack(stack, path)
            loaded = tensorio.read_stack(path)
            same = (
                loaded.input_height == stack.input_height
                and loaded.input_width == stack.input_width
                and loaded.layer_names() == stack.layer_names()
                and all(np.array_equal(a.maps, b.maps)
                        and a.maps.dtype == b.maps.dtype
                        for a, b in zip(stack.layers, loaded.layers))
            )
            if not same:
                failures += 1
    ok = failures == 0
    report("fms1-round-trip", ok, f"{failures}/1000 failures")
    assert ok
