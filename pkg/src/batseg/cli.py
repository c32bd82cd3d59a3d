"""Batch command-line front end.

Subcommands: ``dfield`` (ground-truth field generation), ``loss`` (joint loss
audit), ``baloss`` (boundary-aware term between two stored fields),
``gradcheck`` (finite-difference validation), ``eval`` (fold evaluation with
CSV/JSON reports), ``resample`` and ``normalize`` (preprocessing).

Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .dfield import FieldConfig, build_field, field_stats
from .errors import BatsegError, ConfigError, ShapeError
from .fileio import read_array, read_volume, write_array, write_volume
from .losses import BaLossConfig, boundary_aware, cross_entropy, soft_dice, total_loss
from .metrics import evaluate_directory
from .preprocess import ResampleSpec, resample, zscore
from .volume import LabelVolume, PredictionVolume

GRADCHECK_MAX_SIZE = 6
GRADCHECK_TOLERANCE = 1e-4

_BA_BASE_FLAGS = {"l1": "abs", "l2": "squared", "ce": "bce"}


def _spacing_arg(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("spacing must be sx,sy,sz")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _gradcheck_size(text: str):
    n = int(text)
    if not 1 <= n <= GRADCHECK_MAX_SIZE:
        raise argparse.ArgumentTypeError(
            f"--size must be in 1..{GRADCHECK_MAX_SIZE}, got {n}"
        )
    return n


def _add_field_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trunc-mult", type=float, default=1.0,
                   help="truncation radius in units of the max interior distance")
    p.add_argument("--class-agnostic", action="store_true",
                   help="single channel from the union of all tumor classes")
    p.add_argument("--unit-spacing", action="store_true",
                   help="measure distances in voxel indices instead of mm")
    p.add_argument("--include-background", action="store_true",
                   help="prepend an all-zero background channel")


def _field_config(args) -> FieldConfig:
    return FieldConfig(
        truncation_multiplier=args.trunc_mult,
        class_mode="class_agnostic" if args.class_agnostic else "multiclass",
        include_background_channel=args.include_background,
        unit_spacing=args.unit_spacing,
    )


def _add_ba_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ba-base", choices=sorted(_BA_BASE_FLAGS), default="l1")
    p.add_argument("--no-squared-weight", action="store_true")
    p.add_argument("--stop-grad-weight", action="store_true")
    p.add_argument("--paper-sign", action="store_true",
                   help="audit-only literal sign convention (negated loss)")


def _ba_config(args) -> BaLossConfig:
    return BaLossConfig(
        base_term=_BA_BASE_FLAGS[args.ba_base],
        use_squared_weight=not args.no_squared_weight,
        stop_gradient_on_weight=args.stop_grad_weight,
        sign_convention="paper_literal" if args.paper_sign else "positive",
    )


def _read_4d(path) -> tuple[np.ndarray, tuple]:
    data, spacing, nchannels = read_array(path)
    if nchannels == 0:
        raise ShapeError(f"{path}: expected a 4D field file")
    return np.ascontiguousarray(data, dtype=np.float64), spacing


def cmd_dfield(args) -> int:
    gt = read_volume(args.gt, labels=True, num_classes=args.classes)
    field = build_field(gt, _field_config(args))
    write_volume(field, args.out)
    for stats in field_stats(field):
        print(
            "channel {channel}: min={min:.4f} max={max:.4f} "
            "zeros={zero_fraction:.4f} above_half={above_half_fraction:.4f}".format(
                **stats
            )
        )
    return 0


def cmd_loss(args) -> int:
    logits, spacing = _read_4d(args.pred_logits)
    pred_field, _ = _read_4d(args.pred_field)
    gt = read_volume(args.gt, labels=True, num_classes=args.classes)
    pred = PredictionVolume(logits, mode="logits", spacing=spacing)
    report = total_loss(pred, pred_field, gt, _field_config(args), _ba_config(args))
    if args.grad_out:
        write_array(args.grad_out, report.grad_ba, gt.spacing, dtype=np.float64)
    print(json.dumps(report.to_dict()))
    return 0


def cmd_baloss(args) -> int:
    pred_field, spacing = _read_4d(args.pred_field)
    gt_field, _ = _read_4d(args.gt_field)
    value, grad = boundary_aware(pred_field, gt_field, _ba_config(args))
    if args.grad_out:
        write_array(args.grad_out, grad, spacing, dtype=np.float64)
    print(json.dumps({"ba": value, "elements": int(grad.size)}))
    return 0


def _finite_difference(fn, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    grad = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        hi = fn(x)
        x[idx] = orig - step
        lo = fn(x)
        x[idx] = orig
        grad[idx] = (hi - lo) / (2.0 * step)
        it.iternext()
    return grad


def _rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / scale)


def _gradcheck_fields(rng, size: int, channels: int = 2):
    shape = (size, size, size, channels)
    fbar = rng.uniform(0.2, 0.8, size=shape)
    delta = rng.uniform(0.05, 0.15, size=shape) * rng.choice([-1.0, 1.0], size=shape)
    return fbar + delta, fbar


_GRADCHECK_VARIANTS = {
    "canonical": BaLossConfig(),
    "no-weight": BaLossConfig(use_squared_weight=False),
    "stop-grad": BaLossConfig(stop_gradient_on_weight=True),
    "l2": BaLossConfig(base_term="squared"),
    "ce": BaLossConfig(base_term="bce"),
}


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    size = args.size
    k = 3
    cfg = _GRADCHECK_VARIANTS[args.variant]

    labels = LabelVolume(
        rng.integers(0, k, size=(size, size, size)).astype(np.uint8), num_classes=k
    )
    logits = rng.normal(size=(size, size, size, k))
    _, ce_grad = cross_entropy(logits, labels)
    ce_fd = _finite_difference(lambda x: cross_entropy(x, labels)[0], logits)
    ce_err = _rel_error(ce_grad, ce_fd)

    probs = rng.uniform(0.1, 1.0, size=(size, size, size, k))
    _, dice_grad = soft_dice(probs, labels)
    dice_fd = _finite_difference(lambda x: soft_dice(x, labels)[0], probs)
    dice_err = _rel_error(dice_grad, dice_fd)

    f, fbar = _gradcheck_fields(rng, size)
    _, ba_grad = boundary_aware(f, fbar, cfg)
    if cfg.stop_gradient_on_weight:
        # the squared weight is detached, so the reference objective freezes
        # it at the evaluation point
        w0 = (f - fbar) ** 2

        def target(x, w0=w0):
            return float(np.mean(w0 * np.abs(x - fbar)))

    else:
        def target(x):
            return boundary_aware(x, fbar, cfg)[0]

    ba_fd = _finite_difference(target, f)
    ba_err = _rel_error(ba_grad, ba_fd)

    print(f"cross_entropy max relative error: {ce_err:.3e}")
    print(f"soft_dice     max relative error: {dice_err:.3e}")
    print(f"boundary_aware[{args.variant}] max relative error: {ba_err:.3e}")

    if args.variant == "stop-grad":
        _, full_grad = boundary_aware(f, fbar, BaLossConfig())
        ratio_dev = float(np.abs(full_grad - 3.0 * ba_grad).max())
        print(f"stop-grad 3x gradient-ratio deviation: {ratio_dev:.3e}")

    worst = max(ce_err, dice_err, ba_err)
    if worst >= GRADCHECK_TOLERANCE:
        print(f"worst relative error {worst:.3e} >= {GRADCHECK_TOLERANCE}",
              file=sys.stderr)
        return 1
    return 0


def cmd_eval(args) -> int:
    report = evaluate_directory(args.pred_dir, args.gt_dir, args.manifest)
    report.write_csv(args.out_csv)
    if args.out_json:
        report.write_json(args.out_json)
    for agg in report.per_class:
        print(
            f"class {agg.class_id}: dice {100.0 * agg.mean_dice:.1f} "
            f"HD {agg.mean_hd95:.1f} (n={agg.n_subjects})"
        )
    print(f"mean: dice {100.0 * report.mean_dice:.1f} HD {report.mean_hd95:.1f}")
    return 0


def cmd_resample(args) -> int:
    spec = ResampleSpec(target_spacing=args.spacing, interpolation=args.mode)
    if args.labels:
        vol = read_volume(args.infile, labels=True, num_classes=args.classes)
    else:
        vol = read_volume(args.infile)
    out = resample(vol, spec)
    write_volume(out, args.out)
    return 0


def cmd_normalize(args) -> int:
    vol = read_volume(args.infile)
    write_volume(zscore(vol), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batseg",
        description="Surface distance fields, boundary-aware losses, and "
                    "segmentation metrics for 3D volumes.",
    )
    parser.add_argument("--version", action="version", version=f"batseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dfield", help="build a ground-truth surface distance field")
    p.add_argument("--gt", required=True, help="label volume (.nii/.nii.gz/.rawvol)")
    p.add_argument("--out", required=True, help="output 4D field file")
    p.add_argument("--classes", type=int, default=0,
                   help="class count hint (default: max label + 1)")
    _add_field_flags(p)
    p.set_defaults(func=cmd_dfield)

    p = sub.add_parser("loss", help="joint loss report for a prediction")
    p.add_argument("--pred-logits", required=True)
    p.add_argument("--pred-field", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--classes", type=int, default=0)
    p.add_argument("--grad-out", help="write the boundary-aware gradient field")
    _add_field_flags(p)
    _add_ba_flags(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("baloss", help="boundary-aware loss between two field files")
    p.add_argument("--pred-field", required=True)
    p.add_argument("--gt-field", required=True)
    p.add_argument("--grad-out")
    _add_ba_flags(p)
    p.set_defaults(func=cmd_baloss)

    p = sub.add_parser("gradcheck", help="finite-difference gradient validation")
    p.add_argument("--size", type=_gradcheck_size, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=sorted(_GRADCHECK_VARIANTS), default="canonical")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("eval", help="evaluate a prediction directory against ground truth")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("resample", help="resample a volume to a target spacing")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--spacing", type=_spacing_arg, required=True)
    p.add_argument("--mode", choices=("trilinear", "nearest"), default="trilinear")
    p.add_argument("--labels", action="store_true", help="treat input as labels")
    p.add_argument("--classes", type=int, default=0)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("normalize", help="z-score intensity normalization")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_normalize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BatsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
