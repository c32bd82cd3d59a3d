"""Ground-truth tumor surface distance fields.

For each tumor class the signed EDT of the class mask is truncated outside
the object (background distances larger than ``m`` times the maximum interior
distance are zeroed) and the surviving values are mapped to [0, 1] by
``(d / M + 1) / 2`` where ``M`` is the 1x maximum interior distance; values
that land below 0 (possible only for ``m > 1``) are clamped to 0. Classes with
no foreground voxels, or covering the whole volume, produce an all-zero
channel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .edt import edt_binary
from .errors import ConfigError, DegenerateMaskError
from .volume import DistanceField, LabelVolume

logger = logging.getLogger("batseg.dfield")

CLASS_MODES = ("multiclass", "class_agnostic")


@dataclass(frozen=True)
class FieldConfig:
    """Knobs for field construction.

    truncation_multiplier: radius factor, in units of the maximum interior
        distance, beyond which exterior distances are zeroed. 1, 2 and 3 are
        the documented settings; other positive values work but are logged.
    class_mode: "multiclass" builds one channel per tumor class;
        "class_agnostic" builds a single channel from the union of all
        tumor classes.
    include_background_channel: prepend an all-zero channel 0 so the field
        has as many channels as the prediction head.
    unit_spacing: measure distances in voxel indices instead of mm.
    """

    truncation_multiplier: float = 1.0
    class_mode: str = "multiclass"
    include_background_channel: bool = False
    unit_spacing: bool = False

    def __post_init__(self):
        m = float(self.truncation_multiplier)
        if not np.isfinite(m) or m <= 0:
            raise ConfigError(f"truncation_multiplier must be positive, got {m}")
        if m not in (1.0, 2.0, 3.0):
            logger.info("non-standard truncation multiplier %g", m)
        if self.class_mode not in CLASS_MODES:
            raise ConfigError(f"class_mode must be one of {CLASS_MODES}")
        object.__setattr__(self, "truncation_multiplier", m)


def _channel_from_mask(fg: np.ndarray, spacing, m: float) -> np.ndarray:
    try:
        sdv = edt_binary(fg, spacing)
    except DegenerateMaskError:
        return np.zeros(fg.shape, dtype=np.float64)
    d = sdv.d
    max_interior = d[fg].max()
    norm = (d / max_interior + 1.0) / 2.0
    norm = np.maximum(norm, 0.0)
    truncated = ~fg & (np.abs(d) > m * max_interior)
    return np.where(truncated, 0.0, norm)


def build_field(gt: LabelVolume, cfg: FieldConfig | None = None) -> DistanceField:
    """Build the per-class truncated, normalized surface distance field."""
    cfg = cfg or FieldConfig()
    spacing = (1.0, 1.0, 1.0) if cfg.unit_spacing else gt.spacing
    if cfg.class_mode == "class_agnostic":
        masks = [gt.labels > 0]
    else:
        masks = [gt.labels == k for k in range(1, gt.num_classes)]

    channels = [
        _channel_from_mask(fg, spacing, cfg.truncation_multiplier) for fg in masks
    ]
    if cfg.include_background_channel:
        channels.insert(0, np.zeros(gt.dims, dtype=np.float64))
    values = np.stack(channels, axis=3)
    return DistanceField(values, spacing=gt.spacing)


def field_stats(f: DistanceField) -> list[dict]:
    """Per-channel summary: min, max, fraction of zeros, fraction above 0.5."""
    out = []
    n = f.values[..., 0].size
    for k in range(f.num_channels):
        ch = f.values[..., k]
        out.append(
            {
                "channel": k,
                "min": float(ch.min()),
                "max": float(ch.max()),
                "zero_fraction": float(np.count_nonzero(ch == 0.0) / n),
                "above_half_fraction": float(np.count_nonzero(ch > 0.5) / n),
            }
        )
    return out
