import numpy as np
import pytest

from batseg import LabelVolume, dice_score, evaluate_directory, hd95, parse_manifest, write_volume
from batseg.errors import ClassAbsentError, ManifestError, ShapeError
from batseg.metrics import (
    MISSING_PREDICTION_HD,
    STATUS_CLASS_ABSENT,
    STATUS_MISSING_PRED,
    STATUS_SCORED,
    boundary_mask,
)
from helpers import boundary_voxels_loops, hd95_bruteforce


def lv(mask_or_labels, spacing=(1.0, 1.0, 1.0), k=0):
    return LabelVolume(
        np.asarray(mask_or_labels, dtype=np.uint8), spacing=spacing, num_classes=k
    )


def block(dims, lo, hi, value=1):
    lab = np.zeros(dims, dtype=np.uint8)
    lab[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = value
    return lab


# --- dice -------------------------------------------------------------------


def test_dice_identity():
    g = lv(block((5, 5, 3), (1, 1, 0), (4, 4, 2)))
    assert dice_score(g, g, 1) == 1.0


def test_dice_disjoint():
    dims = (6, 4, 2)
    p = lv(block(dims, (0, 0, 0), (2, 2, 1)))
    g = lv(block(dims, (4, 2, 1), (6, 4, 2)))
    assert dice_score(p, g, 1) == 0.0


def test_dice_half_overlap_hand_counted():
    dims = (5, 4, 1)
    p = lv(block(dims, (0, 0, 0), (2, 2, 1)))   # 2x2 block
    g = lv(block(dims, (1, 0, 0), (3, 2, 1)))   # same block shifted by 1 in x
    assert dice_score(p, g, 1) == 0.5           # 2*2 / (4+4)


def test_dice_symmetric():
    rng = np.random.default_rng(0)
    a = lv(rng.integers(0, 2, size=(6, 6, 4)))
    b = lv(rng.integers(0, 2, size=(6, 6, 4)))
    if a.class_mask(1).any() and b.class_mask(1).any():
        assert dice_score(a, b, 1) == dice_score(b, a, 1)


def test_dice_class_absent():
    g = lv(np.zeros((3, 3, 3)), k=2)
    p = lv(block((3, 3, 3), (0, 0, 0), (1, 1, 1)))
    with pytest.raises(ClassAbsentError):
        dice_score(p, g, 1)


def test_dice_dim_mismatch():
    with pytest.raises(ShapeError):
        dice_score(lv(np.zeros((2, 2, 2)), k=2), lv(np.zeros((3, 3, 3)), k=2), 1)


# --- hd95 -------------------------------------------------------------------


def test_hd95_identity():
    g = lv(block((6, 6, 4), (1, 1, 1), (5, 5, 3)))
    assert hd95(g, g, 1) == 0.0


def test_hd95_missing_prediction():
    g = lv(block((4, 4, 4), (1, 1, 1), (3, 3, 3)))
    p = lv(np.zeros((4, 4, 4)), k=2)
    assert hd95(p, g, 1) == 450.0
    assert hd95(p, g, 1) == MISSING_PREDICTION_HD


def test_hd95_single_voxels():
    dims = (5, 2, 2)
    p = np.zeros(dims, dtype=np.uint8)
    p[0, 0, 0] = 1
    g = np.zeros(dims, dtype=np.uint8)
    g[3, 0, 0] = 1
    assert hd95(lv(p), lv(g), 1, spacing=(1.0, 1.0, 1.0)) == 3.0


def test_hd95_symmetric_when_nonempty():
    rng = np.random.default_rng(1)
    for _ in range(5):
        a = rng.random((6, 5, 4)) < 0.4
        b = rng.random((6, 5, 4)) < 0.4
        if not (a.any() and b.any()):
            continue
        spacing = tuple(rng.uniform(0.5, 2.0, 3))
        assert hd95(lv(a), lv(b), 1, spacing) == hd95(lv(b), lv(a), 1, spacing)


def test_hd95_ignores_other_classes():
    dims = (6, 6, 3)
    g1 = block(dims, (1, 1, 0), (3, 3, 2))
    p1 = block(dims, (2, 2, 0), (4, 4, 2))
    g2 = g1.copy()
    p2 = p1.copy()
    g2[5, 5, 2] = 3   # unrelated class appears
    p2[0, 5, 0] = 2
    a = hd95(lv(p1, k=4), lv(g1, k=4), 1)
    b = hd95(lv(p2, k=4), lv(g2, k=4), 1)
    assert a == b


def test_boundary_mask_matches_loop_oracle():
    rng = np.random.default_rng(2)
    for _ in range(10):
        mask = rng.random((5, 6, 4)) < rng.uniform(0.2, 0.8)
        fast = np.argwhere(boundary_mask(mask))
        slow = boundary_voxels_loops(mask)
        assert np.array_equal(
            sorted(map(tuple, fast)), sorted(map(tuple, slow))
        )


def test_hd95_matches_bruteforce_oracle():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 10:
        dims = tuple(int(rng.integers(2, 13)) for _ in range(3))
        a = rng.random(dims) < rng.uniform(0.1, 0.6)
        b = rng.random(dims) < rng.uniform(0.1, 0.6)
        if not (a.any() and b.any()):
            continue
        checked += 1
        spacing = tuple(rng.uniform(0.4, 3.0, 3))
        fast = hd95(lv(a), lv(b), 1, spacing)
        slow = hd95_bruteforce(a, b, spacing)
        assert abs(fast - slow) < 1e-9


# --- manifest ---------------------------------------------------------------


def test_manifest_plain_ids(tmp_path):
    path = tmp_path / "fold.txt"
    path.write_text("s1\ns2\ns3\n")
    m = parse_manifest(path)
    assert m.subject_ids == ["s1", "s2", "s3"]
    assert m.fold_id is None


def test_manifest_fold_table(tmp_path):
    path = tmp_path / "fold1.txt"
    path.write_text(
        "# fold: 1\n# classes: meningioma,ependymoma\n"
        "s1\tmeningioma\ns2\tependymoma\ns3\tmeningioma\n"
    )
    m = parse_manifest(path)
    assert m.fold_id == 1
    assert m.counts() == {"meningioma": 2, "ependymoma": 1}


def test_manifest_duplicate_subject(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("s1\ns1\n")
    with pytest.raises(ManifestError):
        parse_manifest(path)


def test_manifest_unknown_label(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# classes: a,b\ns1\tc\n")
    with pytest.raises(ManifestError):
        parse_manifest(path)


# --- evaluate_directory ------------------------------------------------------


def write_subject(directory, subject, labels, spacing=(1.0, 1.0, 1.0), k=0):
    write_volume(lv(labels, spacing=spacing, k=k), directory / f"{subject}.nii.gz")


def setup_dirs(tmp_path):
    pred = tmp_path / "pred"
    gt = tmp_path / "gt"
    pred.mkdir()
    gt.mkdir()
    return pred, gt


def test_evaluate_perfect_predictions(tmp_path):
    pred, gt = setup_dirs(tmp_path)
    dims = (6, 6, 4)
    for subject, value in (("s1", 1), ("s2", 2)):
        lab = block(dims, (1, 1, 1), (4, 4, 3), value)
        write_subject(pred, subject, lab, k=3)
        write_subject(gt, subject, lab, k=3)
    manifest = tmp_path / "fold.txt"
    manifest.write_text("s1\ns2\n")
    report = evaluate_directory(pred, gt, manifest)
    for agg in report.per_class:
        assert agg.mean_dice == 1.0
        assert agg.mean_hd95 == 0.0
    assert report.mean_dice == 1.0
    assert report.mean_hd95 == 0.0


def test_evaluate_missing_prediction_rule(tmp_path):
    pred, gt = setup_dirs(tmp_path)
    dims = (5, 5, 3)
    gt_lab = block(dims, (1, 1, 0), (4, 4, 2))
    write_subject(gt, "s1", gt_lab, k=2)
    write_subject(pred, "s1", np.zeros(dims), k=2)
    manifest = tmp_path / "fold.txt"
    manifest.write_text("s1\n")
    report = evaluate_directory(pred, gt, manifest)
    (score,) = report.subjects
    (cls,) = score.per_class
    assert cls.status == STATUS_MISSING_PRED
    assert cls.dice == 0.0
    assert cls.hd95 == 450.0
    (agg,) = report.per_class
    assert agg.mean_dice == 0.0
    assert agg.mean_hd95 == 450.0


def test_evaluate_class_absent_excluded(tmp_path):
    pred, gt = setup_dirs(tmp_path)
    dims = (5, 5, 3)
    s1 = block(dims, (1, 1, 0), (4, 4, 2), 1)
    s2 = block(dims, (1, 1, 0), (3, 3, 2), 2)  # class 1 absent in gt here
    write_subject(gt, "s1", s1, k=3)
    write_subject(gt, "s2", s2, k=3)
    write_subject(pred, "s1", s1, k=3)
    write_subject(pred, "s2", s2, k=3)
    manifest = tmp_path / "fold.txt"
    manifest.write_text("s1\ns2\n")
    report = evaluate_directory(pred, gt, manifest)
    s2_score = [s for s in report.subjects if s.subject_id == "s2"][0]
    class1 = [c for c in s2_score.per_class if c.class_id == 1][0]
    assert class1.status == STATUS_CLASS_ABSENT
    assert class1.dice is None and class1.hd95 is None
    agg1 = [a for a in report.per_class if a.class_id == 1][0]
    assert agg1.n_subjects == 1  # only s1 counts toward class 1


def test_evaluate_missing_file(tmp_path):
    pred, gt = setup_dirs(tmp_path)
    dims = (4, 4, 2)
    write_subject(gt, "s1", block(dims, (1, 1, 0), (3, 3, 1)), k=2)
    manifest = tmp_path / "fold.txt"
    manifest.write_text("s1\nsX\n")
    with pytest.raises(ManifestError) as exc:
        evaluate_directory(pred, gt, manifest)
    assert "sX" in str(exc.value)


def test_evaluate_dim_mismatch_names_subject(tmp_path):
    pred, gt = setup_dirs(tmp_path)
    write_subject(gt, "s1", block((4, 4, 2), (1, 1, 0), (3, 3, 1)), k=2)
    write_subject(pred, "s1", block((5, 5, 2), (1, 1, 0), (3, 3, 1)), k=2)
    manifest = tmp_path / "fold.txt"
    manifest.write_text("s1\n")
    with pytest.raises(ShapeError) as exc:
        evaluate_directory(pred, gt, manifest)
    assert "s1" in str(exc.value)


def test_evaluate_order_invariant(tmp_path):
    pred, gt = setup_dirs(tmp_path)
    rng = np.random.default_rng(4)
    dims = (5, 5, 3)
    for subject in ("a", "b", "c"):
        gt_lab = (rng.random(dims) < 0.3).astype(np.uint8)
        pr_lab = (rng.random(dims) < 0.3).astype(np.uint8)
        if not gt_lab.any():
            gt_lab[0, 0, 0] = 1
        write_subject(gt, subject, gt_lab, k=2)
        write_subject(pred, subject, pr_lab, k=2)
    m1 = tmp_path / "m1.txt"
    m2 = tmp_path / "m2.txt"
    m1.write_text("a\nb\nc\n")
    m2.write_text("c\na\nb\n")
    r1 = evaluate_directory(pred, gt, m1)
    r2 = evaluate_directory(pred, gt, m2)
    assert r1.per_class == r2.per_class
    assert [s.subject_id for s in r1.subjects] == [s.subject_id for s in r2.subjects]


def test_csv_formatting(tmp_path):
    pred, gt = setup_dirs(tmp_path)
    dims = (5, 4, 1)
    write_subject(gt, "s1", block(dims, (1, 0, 0), (3, 2, 1)), k=2)
    write_subject(pred, "s1", block(dims, (0, 0, 0), (2, 2, 1)), k=2)
    manifest = tmp_path / "fold.txt"
    manifest.write_text("s1\n")
    report = evaluate_directory(pred, gt, manifest)
    out = tmp_path / "scores.csv"
    report.write_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "subject,class,dice_pct,hd95_mm,status"
    subject, cls, dice_pct, hd, status = lines[1].split(",")
    assert (subject, cls, status) == ("s1", "1", STATUS_SCORED)
    assert dice_pct == "50.0"  # percentage with one decimal
    assert "." in hd and len(hd.split(".")[1]) == 1
