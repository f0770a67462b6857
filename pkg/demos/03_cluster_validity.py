"""Choosing the number of parts with cluster-validity criteria.

The candidate centroids are clustered for every k in 2..6 and scored with
the Davies-Bouldin index (lower is better) and the mean Silhouette value
(higher is better).  On two-part scenes both criteria should agree on k = 2.
"""

from featlens import maskops, partdetect
from featlens.modelselect import select_k
from featlens.synthetic import OBJECT_LAYERS, PART_LAYERS, make_scene

votes = {"db": {}, "silhouette": {}}
for seed in range(10):
    scene = make_scene(seed)
    _, object_mask = maskops.detect_object(scene.stack, OBJECT_LAYERS, 0.3)
    candidates = partdetect.select_candidates(
        scene.stack, PART_LAYERS, 0.3, object_mask)
    report = select_k(candidates, range(2, 7), seed=0)
    votes["db"][report.best_k_db] = votes["db"].get(report.best_k_db, 0) + 1
    votes["silhouette"][report.best_k_sil] = \
        votes["silhouette"].get(report.best_k_sil, 0) + 1
    if seed == 0:
        print(f"scene {scene.stack.image_id}: "
              f"{len(candidates)} candidate centroids")
        print(f"{'k':>3} {'davies-bouldin':>15} {'silhouette':>11}")
        for k in sorted(report.per_k):
            stats = report.per_k[k]
            print(f"{k:>3} {stats['db_index']:>15.4f} "
                  f"{stats['mean_silhouette']:>11.4f}")
        print(f"  -> best k: DB {report.best_k_db}, "
              f"Silhouette {report.best_k_sil}\n")

print("best-k votes over 10 scenes:")
for criterion in ("db", "silhouette"):
    tally = ", ".join(f"k={k}: {n}" for k, n in sorted(votes[criterion].items()))
    print(f"  {criterion:>10}: {tally}")
