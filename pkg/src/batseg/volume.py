"""Dense-volume data model shared by every other module.

Axis convention: arrays are indexed ``[x, y, z]`` with dims ``(H, W, D)``.
Flat buffers (file payloads, foreign-array exchange) are x-fastest, i.e.
voxel ``(x, y, z)`` lives at linear index ``x + H*(y + W*z)``; in numpy terms
that is Fortran raveling of the ``(H, W, D)`` array. Fields and prediction
grids append a trailing class axis: ``(H, W, D, K)``, channel slowest on disk.

All types are immutable after construction (the backing arrays are frozen)
and therefore safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

Spacing = tuple[float, float, float]


def _check_spacing(spacing) -> Spacing:
    s = tuple(float(v) for v in spacing)
    if len(s) != 3:
        raise ShapeError(f"spacing must have 3 components, got {len(s)}")
    if not all(np.isfinite(v) and v > 0 for v in s):
        raise ValueError(f"spacing components must be finite and > 0, got {s}")
    return s


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Volume3D:
    """Scalar grid with per-axis physical spacing in mm."""

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeError(f"Volume3D expects 3 dims, got {arr.ndim}")
        if min(arr.shape) < 1:
            raise ShapeError(f"empty volume dims {arr.shape}")
        object.__setattr__(self, "data", _freeze(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def to_flat(self) -> np.ndarray:
        """Payload order: x fastest, index = x + H*(y + W*z)."""
        return self.data.ravel(order="F")

    @classmethod
    def from_flat(cls, flat, dims, spacing=(1.0, 1.0, 1.0)) -> "Volume3D":
        arr = np.asarray(flat, dtype=np.float64).reshape(dims, order="F")
        return cls(arr, spacing)


@dataclass(frozen=True)
class LabelVolume:
    """Integer class labels per voxel; class 0 is background."""

    labels: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)
    num_classes: int = 0  # 0 -> infer as max(label)+1, floor 2

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"labels must be integral, got dtype {arr.dtype}")
        if arr.ndim != 3:
            raise ShapeError(f"LabelVolume expects 3 dims, got {arr.ndim}")
        if arr.min() < 0:
            raise ValueError("labels must be non-negative")
        k = int(self.num_classes)
        if k == 0:
            k = max(2, int(arr.max()) + 1)
        if k < 2:
            raise ValueError(f"num_classes must be >= 2, got {k}")
        if int(arr.max()) >= k:
            raise ValueError(
                f"label {int(arr.max())} out of range for num_classes={k}"
            )
        object.__setattr__(self, "labels", _freeze(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "num_classes", k)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.labels.shape

    def class_mask(self, k: int) -> np.ndarray:
        return self.labels == k

    def to_flat(self) -> np.ndarray:
        return self.labels.ravel(order="F")


@dataclass(frozen=True)
class DistanceField:
    """Per-voxel, per-channel surface distance values in [0, 1]."""

    values: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 4:
            raise ShapeError(f"DistanceField expects 4 dims, got {arr.ndim}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("distance field values must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape[:3]

    @property
    def num_channels(self) -> int:
        return self.values.shape[3]

    def to_flat(self) -> np.ndarray:
        return self.values.ravel(order="F")


@dataclass(frozen=True)
class PredictionVolume:
    """Per-voxel multiclass network output, logits or probabilities."""

    values: np.ndarray
    mode: str = "logits"
    spacing: Spacing = field(default=(1.0, 1.0, 1.0))

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 4:
            raise ShapeError(f"PredictionVolume expects 4 dims, got {arr.ndim}")
        if self.mode not in ("logits", "probabilities"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "probabilities":
            if arr.size and arr.min() < 0.0:
                raise ValueError("probabilities must be >= 0")
            sums = arr.sum(axis=3)
            if arr.size and np.max(np.abs(sums - 1.0)) > 1e-5:
                raise ValueError("per-voxel probabilities must sum to 1 within 1e-5")
        object.__setattr__(self, "values", _freeze(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape[:3]

    @property
    def num_classes(self) -> int:
        return self.values.shape[3]


def one_hot(gt: LabelVolume) -> PredictionVolume:
    """Exact one-hot encoding of ``gt`` as a probabilities-mode prediction."""
    k = gt.num_classes
    out = np.zeros(gt.dims + (k,), dtype=np.float64)
    for c in range(k):
        out[..., c] = (gt.labels == c).astype(np.float64)
    return PredictionVolume(out, mode="probabilities", spacing=gt.spacing)
