"""Evaluation protocol: per-class Dice and 95th-percentile Hausdorff distance.

Boundary voxels are foreground voxels with a 6-connected background or
out-of-volume neighbor. Directed surface distances are measured between
boundary voxel centers in mm, each direction's 95th percentile is taken with
linear interpolation, and HD95 is the maximum of the two. A subject whose
prediction lacks a class present in the ground truth scores Dice 0 and
HD95 450 mm; classes absent from the ground truth are excluded from the
aggregates.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._accel import worker_count
from .errors import ClassAbsentError, ManifestError, ShapeError
from .fileio import read_volume
from .kernels import sq_edt
from .volume import LabelVolume

MISSING_PREDICTION_HD = 450.0

STATUS_SCORED = "scored"
STATUS_MISSING_PRED = "missing_pred"
STATUS_CLASS_ABSENT = "class_absent"


def _check_dims(pred: LabelVolume, gt: LabelVolume, subject: str | None = None):
    if pred.dims != gt.dims:
        where = f" (subject {subject})" if subject else ""
        raise ShapeError(f"pred dims {pred.dims} != gt dims {gt.dims}{where}")


def dice_score(pred: LabelVolume, gt: LabelVolume, k: int) -> float:
    """Overlap 2|P^G| / (|P|+|G|) on the binary masks of class ``k``."""
    _check_dims(pred, gt)
    g = gt.class_mask(k)
    if not g.any():
        raise ClassAbsentError(k)
    p = pred.class_mask(k)
    inter = int(np.count_nonzero(p & g))
    total = int(np.count_nonzero(p)) + int(np.count_nonzero(g))
    return 2.0 * inter / total


def boundary_mask(mask: np.ndarray) -> np.ndarray:
    """Foreground voxels with a 6-connected background or out-of-volume neighbor."""
    fg = mask.astype(bool)
    padded = np.pad(fg, 1, mode="constant", constant_values=False)
    interior = np.ones_like(fg)
    for axis in range(3):
        lo = np.take(padded, range(0, fg.shape[axis]), axis=axis)
        hi = np.take(padded, range(2, fg.shape[axis] + 2), axis=axis)
        sl = [slice(1, -1)] * 3
        sl[axis] = slice(None)
        interior &= lo[tuple(sl)] & hi[tuple(sl)]
    return fg & ~interior


def _directed_p95(from_boundary: np.ndarray, to_boundary: np.ndarray, spacing) -> float:
    dist = np.sqrt(sq_edt(to_boundary, spacing))
    return float(np.percentile(dist[from_boundary], 95))


def hd95(pred: LabelVolume, gt: LabelVolume, k: int, spacing=None) -> float:
    """Symmetric 95th-percentile boundary distance in mm for class ``k``.

    Returns 450.0 exactly when the prediction mask is empty (missing
    prediction rule).
    """
    _check_dims(pred, gt)
    g = gt.class_mask(k)
    if not g.any():
        raise ClassAbsentError(k)
    p = pred.class_mask(k)
    if not p.any():
        return MISSING_PREDICTION_HD
    if spacing is None:
        spacing = gt.spacing
    pb = boundary_mask(p)
    gb = boundary_mask(g)
    return max(_directed_p95(pb, gb, spacing), _directed_p95(gb, pb, spacing))


@dataclass(frozen=True)
class ClassScore:
    class_id: int
    status: str
    dice: float | None = None
    hd95: float | None = None


@dataclass(frozen=True)
class SubjectScore:
    subject_id: str
    per_class: tuple[ClassScore, ...]


@dataclass(frozen=True)
class ClassAggregate:
    class_id: int
    n_subjects: int
    mean_dice: float
    mean_hd95: float


@dataclass(frozen=True)
class MetricsReport:
    subjects: tuple[SubjectScore, ...]
    per_class: tuple[ClassAggregate, ...]
    mean_dice: float
    mean_hd95: float

    def to_dict(self) -> dict:
        return {
            "subjects": [
                {
                    "subject": s.subject_id,
                    "classes": [
                        {
                            "class": c.class_id,
                            "status": c.status,
                            "dice": c.dice,
                            "hd95_mm": c.hd95,
                        }
                        for c in s.per_class
                    ],
                }
                for s in self.subjects
            ],
            "aggregates": {
                "per_class": [
                    {
                        "class": a.class_id,
                        "n_subjects": a.n_subjects,
                        "mean_dice": a.mean_dice,
                        "mean_hd95_mm": a.mean_hd95,
                    }
                    for a in self.per_class
                ],
                "mean_dice": self.mean_dice,
                "mean_hd95_mm": self.mean_hd95,
            },
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["subject", "class", "dice_pct", "hd95_mm", "status"])
            for s in self.subjects:
                for c in s.per_class:
                    writer.writerow(
                        [
                            s.subject_id,
                            c.class_id,
                            "" if c.dice is None else f"{100.0 * c.dice:.1f}",
                            "" if c.hd95 is None else f"{c.hd95:.1f}",
                            c.status,
                        ]
                    )


@dataclass(frozen=True)
class FoldManifest:
    """Subject list of one cross-validation fold.

    Plain-text format: optional ``# fold: N`` and ``# classes: a,b`` headers,
    then one ``subject_id`` or ``subject_id<TAB>class_label`` line per
    subject.
    """

    subjects: tuple[tuple[str, str | None], ...]
    fold_id: int | None = None
    vocabulary: tuple[str, ...] = field(default=())

    @property
    def subject_ids(self) -> list[str]:
        return [s for s, _ in self.subjects]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for _, label in self.subjects:
            if label is not None:
                out[label] = out.get(label, 0) + 1
        return out


def parse_manifest(path) -> FoldManifest:
    fold_id = None
    vocab: tuple[str, ...] = ()
    subjects: list[tuple[str, str | None]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("fold:"):
                try:
                    fold_id = int(body.split(":", 1)[1])
                except ValueError as exc:
                    raise ManifestError(f"{path}:{lineno}: bad fold header") from exc
            elif body.lower().startswith("classes:"):
                vocab = tuple(
                    v.strip() for v in body.split(":", 1)[1].split(",") if v.strip()
                )
            continue
        parts = line.split("\t")
        subject = parts[0].strip()
        label = parts[1].strip() if len(parts) > 1 else None
        if subject in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate subject {subject!r}")
        if label is not None and vocab and label not in vocab:
            raise ManifestError(
                f"{path}:{lineno}: label {label!r} not in declared vocabulary"
            )
        seen.add(subject)
        subjects.append((subject, label))
    if fold_id is not None and not 1 <= fold_id <= 5:
        raise ManifestError(f"{path}: fold id must be 1..5, got {fold_id}")
    return FoldManifest(tuple(subjects), fold_id=fold_id, vocabulary=vocab)


_FILE_SUFFIXES = (".nii.gz", ".nii", ".rawvol")


def _locate(directory: Path, subject: str) -> Path | None:
    for suffix in _FILE_SUFFIXES:
        candidate = directory / f"{subject}{suffix}"
        if candidate.exists():
            return candidate
    return None


def _score_subject(
    subject: str, pred_path: Path, gt_path: Path, classes: list[int]
) -> SubjectScore:
    gt = read_volume(gt_path, labels=True)
    pred = read_volume(pred_path, labels=True, num_classes=gt.num_classes)
    _check_dims(pred, gt, subject)
    scores = []
    for k in classes:
        if not gt.class_mask(k).any():
            scores.append(ClassScore(k, STATUS_CLASS_ABSENT))
            continue
        if not pred.class_mask(k).any():
            scores.append(
                ClassScore(k, STATUS_MISSING_PRED, dice=0.0, hd95=MISSING_PREDICTION_HD)
            )
            continue
        scores.append(
            ClassScore(
                k,
                STATUS_SCORED,
                dice=dice_score(pred, gt, k),
                hd95=hd95(pred, gt, k),
            )
        )
    return SubjectScore(subject, tuple(scores))


def evaluate_directory(pred_dir, gt_dir, manifest_path, classes=None) -> MetricsReport:
    """Score every manifest subject and aggregate per class.

    Per-class aggregates average over subjects whose ground truth contains
    the class (scored or missing-prediction); the overall mean is the mean of
    the per-class means.
    """
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    manifest = parse_manifest(manifest_path)

    missing = []
    pairs: list[tuple[str, Path, Path]] = []
    for subject in manifest.subject_ids:
        pred_path = _locate(pred_dir, subject)
        gt_path = _locate(gt_dir, subject)
        if pred_path is None or gt_path is None:
            missing.append(subject)
        else:
            pairs.append((subject, pred_path, gt_path))
    if missing:
        raise ManifestError(f"missing files for subjects: {', '.join(sorted(missing))}")

    if classes is None:
        present: set[int] = set()
        for _, _, gt_path in pairs:
            gt = read_volume(gt_path, labels=True)
            present.update(int(v) for v in np.unique(gt.labels) if v != 0)
        classes = sorted(present)
    classes = list(classes)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        subjects = list(
            pool.map(lambda args: _score_subject(args[0], args[1], args[2], classes), pairs)
        )
    subjects.sort(key=lambda s: s.subject_id)

    aggregates = []
    class_means_dice = []
    class_means_hd = []
    for k in classes:
        dices = []
        hds = []
        for s in subjects:
            for c in s.per_class:
                if c.class_id == k and c.status != STATUS_CLASS_ABSENT:
                    dices.append(c.dice)
                    hds.append(c.hd95)
        if not dices:
            continue
        mean_dice = float(np.mean(dices))
        mean_hd = float(np.mean(hds))
        aggregates.append(ClassAggregate(k, len(dices), mean_dice, mean_hd))
        class_means_dice.append(mean_dice)
        class_means_hd.append(mean_hd)

    return MetricsReport(
        subjects=tuple(subjects),
        per_class=tuple(aggregates),
        mean_dice=float(np.mean(class_means_dice)) if class_means_dice else float("nan"),
        mean_hd95=float(np.mean(class_means_hd)) if class_means_hd else float("nan"),
    )
