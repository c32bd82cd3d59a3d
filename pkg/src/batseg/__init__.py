"""Volumetric toolkit: tumor surface distance fields, boundary-aware losses,
segmentation metrics, and preprocessing for 3D medical volumes."""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED
from .dfield import FieldConfig, build_field, field_stats
from .edt import SignedDistanceVolume, edt_binary, edt_bruteforce
from .fileio import read_array, read_field, read_volume, write_array, write_volume
from .losses import (
    BaLossConfig,
    LossReport,
    boundary_aware,
    cross_entropy,
    soft_dice,
    softmax,
    total_loss,
)
from .metrics import (
    FoldManifest,
    MetricsReport,
    SubjectScore,
    dice_score,
    evaluate_directory,
    hd95,
    parse_manifest,
)
from .preprocess import ResampleSpec, resample, zscore
from .volume import DistanceField, LabelVolume, PredictionVolume, Volume3D, one_hot

__all__ = [
    "NUMBA_ENABLED",
    "__version__",
    "BaLossConfig",
    "DistanceField",
    "FieldConfig",
    "FoldManifest",
    "LabelVolume",
    "LossReport",
    "MetricsReport",
    "PredictionVolume",
    "ResampleSpec",
    "SignedDistanceVolume",
    "SubjectScore",
    "Volume3D",
    "boundary_aware",
    "build_field",
    "cross_entropy",
    "dice_score",
    "edt_binary",
    "edt_bruteforce",
    "evaluate_directory",
    "field_stats",
    "hd95",
    "one_hot",
    "parse_manifest",
    "read_array",
    "read_field",
    "read_volume",
    "resample",
    "soft_dice",
    "softmax",
    "total_loss",
    "write_array",
    "write_volume",
    "zscore",
]
