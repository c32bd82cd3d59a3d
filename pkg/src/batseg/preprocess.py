"""Standardization pipeline: grid resampling and z-score intensity normalization.

Resampling uses a corner-anchored voxel-center grid: output center ``i`` sits
at physical position ``i * target_spacing`` along each axis, sharing the
input's origin. Samples beyond the last input center clamp to the edge.
Output dims are ``round(in_dim * in_spacing / target_spacing)`` with a floor
of 1. Intensities interpolate trilinearly; labels use nearest neighbor
(enforced).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kernels import nearest_gather, trilinear_gather
from .volume import LabelVolume, Spacing, Volume3D, _check_spacing

INTERPOLATIONS = ("trilinear", "nearest")


@dataclass(frozen=True)
class ResampleSpec:
    target_spacing: Spacing
    interpolation: str = "trilinear"

    def __post_init__(self):
        object.__setattr__(self, "target_spacing", _check_spacing(self.target_spacing))
        if self.interpolation not in INTERPOLATIONS:
            raise ConfigError(f"interpolation must be one of {INTERPOLATIONS}")


def _output_dims(dims, in_spacing, target) -> tuple[int, int, int]:
    out = []
    for n, s_in, s_out in zip(dims, in_spacing, target):
        out.append(max(1, int(np.floor(n * s_in / s_out + 0.5))))
    return tuple(out)


def _axis_coords(n_out: int, n_in: int, ratio: float) -> np.ndarray:
    u = np.arange(n_out, dtype=np.float64) * ratio
    return np.clip(u, 0.0, float(n_in - 1))


def resample(v: Volume3D | LabelVolume, spec: ResampleSpec):
    """Resample onto the target-spacing grid; returns the same volume type."""
    is_labels = isinstance(v, LabelVolume)
    if is_labels and spec.interpolation != "nearest":
        raise ConfigError("label volumes must be resampled with nearest interpolation")

    in_spacing = v.spacing
    dims = v.dims
    target = spec.target_spacing
    out_dims = _output_dims(dims, in_spacing, target)
    ratios = [t / s for t, s in zip(target, in_spacing)]
    coords = [
        _axis_coords(n_out, n_in, r)
        for n_out, n_in, r in zip(out_dims, dims, ratios)
    ]

    if spec.interpolation == "nearest":
        idx = [
            np.minimum(np.floor(u + 0.5).astype(np.int64), n_in - 1)
            for u, n_in in zip(coords, dims)
        ]
        source = v.labels if is_labels else v.data
        out = nearest_gather(source, idx)
        if is_labels:
            return LabelVolume(out, spacing=target, num_classes=v.num_classes)
        return Volume3D(out, spacing=target)

    axes = []
    for u, n_in in zip(coords, dims):
        i0 = np.floor(u).astype(np.int64)
        i0 = np.minimum(i0, n_in - 1)
        i1 = np.minimum(i0 + 1, n_in - 1)
        frac = u - i0
        axes.append((i0, i1, frac))
    out = trilinear_gather(v.data, axes)
    return Volume3D(out, spacing=target)


def zscore(v: Volume3D) -> Volume3D:
    """Subtract the volume mean and divide by its population standard deviation.

    Constant volumes map to all zeros (the divisor is floored at 1e-8).
    """
    mean = float(v.data.mean())
    std = float(v.data.std())
    return Volume3D((v.data - mean) / max(std, 1e-8), spacing=v.spacing)
