"""Shared test utilities: independent oracles and a minimal schema checker.

Everything here stays deliberately dumb: finite differences, exhaustive
pairwise scans, Python-loop boundary extraction. These are the reference
routes the fast implementations are checked against, so they must not share
code with them.
"""

from __future__ import annotations

import numpy as np


def finite_difference(fn, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of scalar ``fn`` at ``x``."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
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


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return float(np.abs(a - b).max() / scale)


def random_mask(rng, max_side: int = 16, require_both_sides: bool = True) -> np.ndarray:
    """Random boolean mask with at least one voxel on each side."""
    dims = tuple(int(rng.integers(1, max_side + 1)) for _ in range(3))
    while True:
        density = rng.uniform(0.05, 0.8)
        mask = rng.random(dims) < density
        if not require_both_sides:
            return mask
        n = mask.sum()
        if 0 < n < mask.size:
            return mask


def random_spacing(rng, lo: float = 0.3, hi: float = 4.0):
    return tuple(float(s) for s in rng.uniform(lo, hi, size=3))


def boundary_voxels_loops(mask: np.ndarray) -> np.ndarray:
    """(n, 3) coordinates of 6-connected boundary voxels, by explicit loops."""
    H, W, D = mask.shape
    out = []
    for x in range(H):
        for y in range(W):
            for z in range(D):
                if not mask[x, y, z]:
                    continue
                on_edge = False
                for dx, dy, dz in (
                    (1, 0, 0), (-1, 0, 0), (0, 1, 0),
                    (0, -1, 0), (0, 0, 1), (0, 0, -1),
                ):
                    u, v, w = x + dx, y + dy, z + dz
                    if not (0 <= u < H and 0 <= v < W and 0 <= w < D):
                        on_edge = True
                        break
                    if not mask[u, v, w]:
                        on_edge = True
                        break
                if on_edge:
                    out.append((x, y, z))
    return np.array(out, dtype=np.int64).reshape(-1, 3)


def hd95_bruteforce(pred_mask: np.ndarray, gt_mask: np.ndarray, spacing) -> float:
    """All-pairs boundary-to-boundary HD95 oracle."""
    scale = np.asarray(spacing, dtype=np.float64)
    pb = boundary_voxels_loops(pred_mask)
    gb = boundary_voxels_loops(gt_mask)
    diff = (pb[:, None, :] - gb[None, :, :]).astype(np.float64)
    dist = np.sqrt(
        (diff[..., 0] * scale[0]) ** 2
        + (diff[..., 1] * scale[1]) ** 2
        + (diff[..., 2] * scale[2]) ** 2
    )
    d_pg = dist.min(axis=1)
    d_gp = dist.min(axis=0)
    return max(
        float(np.percentile(d_pg, 95)),
        float(np.percentile(d_gp, 95)),
    )


def validate_schema(instance, schema, path="$"):
    """Tiny JSON-schema subset validator (type/properties/required/items/enum).

    Raises AssertionError with the offending path on mismatch.
    """
    stype = schema.get("type")
    if stype is not None:
        types = stype if isinstance(stype, list) else [stype]
        ok = False
        for t in types:
            if t == "object" and isinstance(instance, dict):
                ok = True
            elif t == "array" and isinstance(instance, list):
                ok = True
            elif t == "string" and isinstance(instance, str):
                ok = True
            elif t == "integer" and isinstance(instance, int) and not isinstance(instance, bool):
                ok = True
            elif t == "number" and isinstance(instance, (int, float)) and not isinstance(instance, bool):
                ok = True
            elif t == "boolean" and isinstance(instance, bool):
                ok = True
            elif t == "null" and instance is None:
                ok = True
        assert ok, f"{path}: expected {stype}, got {type(instance).__name__}"
    if "enum" in schema:
        assert instance in schema["enum"], f"{path}: {instance!r} not in enum"
    if isinstance(instance, dict):
        for key in schema.get("required", []):
            assert key in instance, f"{path}: missing required key {key!r}"
        props = schema.get("properties", {})
        for key, sub in props.items():
            if key in instance:
                validate_schema(instance[key], sub, f"{path}.{key}")
        if schema.get("additionalProperties") is False:
            extra = set(instance) - set(props)
            assert not extra, f"{path}: unexpected keys {sorted(extra)}"
    if isinstance(instance, list) and "items" in schema:
        for i, item in enumerate(instance):
            validate_schema(item, schema["items"], f"{path}[{i}]")
