"""featlens: object and part localization from dumped CNN feature-map stacks."""

from . import errors
from .clustering import kmeans
from .evalkit import (
    PartDistanceTable,
    RecallCurve,
    iou,
    part_distance,
    part_distance_table,
    recall_curve,
)
from .maskops import (
    BinaryMask,
    detect_object,
    normalize,
    resize_bilinear,
    threshold,
)
from .modelselect import (
    ClusterValidityReport,
    davies_bouldin,
    mean_silhouette,
    select_k,
)
from .partdetect import (
    CandidateMap,
    Part,
    PartDetection,
    cluster_parts,
    connected_regions,
    select_candidates,
    weighted_centroid,
)
from .pipeline import (
    PRESETS,
    BatchResult,
    ImageResult,
    PipelineConfig,
    run_batch,
    run_image,
    run_sweep,
)
from .posecrop import (
    CropRegion,
    Ellipse,
    Pose,
    PoseVariant,
    crop_regions,
    estimate_pose,
    fit_ellipse,
    order_parts,
)
from .tensorio import (
    FeatureStack,
    LayerBlock,
    Manifest,
    ManifestEntry,
    read_image,
    read_manifest,
    read_stack,
    write_image,
    write_manifest,
    write_stack,
)

__version__ = "0.1.0"
