"""Rotation-invariant point cloud encoder with linear-time sequence modeling."""

from .cloud_io import (
    DegenerateCloudError,
    FormatError,
    PointCloud,
    Prng,
    gen_cloud,
    load_cloud,
    normalize_cloud,
    save_cloud,
)
from .bench import BenchReport, fit_loglog_slope, ori_op_counts, run_bench, scan_timings
from .estimator import PointCloudEncoder
from .frames import DegenerateFrameError, RfcResult, align, patch_frames, rfc
from .geom3 import Frame, eig_sym3, random_rotation, relative_pose
from .learn_eval import (
    DEFAULT_TEMPERATURE,
    ROBUSTNESS_REGIMES,
    RetrievalRun,
    TrainingBatch,
    info_nce,
    load_embeddings,
    load_ground_truth,
    mean_average_precision,
    ndcg_at_k,
    rank,
    robustness_protocol,
    rr_at_k,
    save_embeddings,
    total_loss,
)
from .patcher import PatchSet, fps, knn_group
from .serializer import SerializedPatches, hilbert_decode, hilbert_encode, serialize
from .ssm_model import (
    EmbeddingRecord,
    ModelConfig,
    ModelWeights,
    ScanParams,
    block_forward,
    encode,
    init_weights,
    load_weights,
    save_weights,
    selective_scan,
)

__all__ = [
    "BenchReport",
    "DEFAULT_TEMPERATURE",
    "DegenerateCloudError",
    "DegenerateFrameError",
    "EmbeddingRecord",
    "FormatError",
    "Frame",
    "ModelConfig",
    "ModelWeights",
    "PatchSet",
    "PointCloud",
    "PointCloudEncoder",
    "Prng",
    "ROBUSTNESS_REGIMES",
    "RetrievalRun",
    "RfcResult",
    "ScanParams",
    "SerializedPatches",
    "TrainingBatch",
    "align",
    "block_forward",
    "eig_sym3",
    "encode",
    "fit_loglog_slope",
    "fps",
    "gen_cloud",
    "hilbert_decode",
    "hilbert_encode",
    "info_nce",
    "init_weights",
    "knn_group",
    "load_cloud",
    "load_embeddings",
    "load_ground_truth",
    "load_weights",
    "mean_average_precision",
    "ndcg_at_k",
    "normalize_cloud",
    "ori_op_counts",
    "patch_frames",
    "random_rotation",
    "rank",
    "relative_pose",
    "rfc",
    "robustness_protocol",
    "rr_at_k",
    "run_bench",
    "save_cloud",
    "save_embeddings",
    "save_weights",
    "scan_timings",
    "selective_scan",
    "serialize",
    "total_loss",
]

__version__ = "0.1.0"
