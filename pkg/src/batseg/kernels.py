"""Hot numeric kernels: distance-transform sweeps, brute-force distance scans,
and interpolation gathers.

Every loop kernel here is compiled with numba unless ``BATSEG_NO_NUMBA=1``
(see :mod:`batseg._accel`); the brute-force scan additionally has a chunked
numpy implementation used on the fallback path, where Python-level O(n^2)
loops would be unusably slow. Both paths evaluate the same expressions in the
same order so results agree to the last bit in practice.
"""

from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, maybe_jit

# Large finite sentinel: behaves like +inf inside the parabola envelope while
# keeping intersection arithmetic free of inf-inf NaNs.
BIG = 1.0e30


@maybe_jit
def _edt_pass(f, n, delta, v, z, d):
    # One-dimensional squared-distance transform along a line of length n,
    # lower envelope of parabolas rooted at (q*delta, f[q]). Heights use the
    # finite BIG sentinel so intersection arithmetic never sees inf - inf;
    # envelope breakpoints use true infinities so an intersection can never
    # fall outside them.
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        qd = q * delta
        s = ((f[q] + qd * qd) - (f[v[k]] + (v[k] * delta) ** 2)) / (
            2.0 * delta * (q - v[k])
        )
        while s <= z[k]:
            k -= 1
            s = ((f[q] + qd * qd) - (f[v[k]] + (v[k] * delta) ** 2)) / (
                2.0 * delta * (q - v[k])
            )
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        qd = q * delta
        while z[k + 1] < qd:
            k += 1
        d[q] = ((q - v[k]) * delta) ** 2 + f[v[k]]


@maybe_jit
def _sq_edt_3d(src, sx, sy, sz):
    # Squared physical distance from every voxel to the nearest voxel with
    # src != 0. Three separable passes; exact for the anisotropic metric.
    H, W, D = src.shape
    g = np.empty((H, W, D), np.float64)
    for x in range(H):
        for y in range(W):
            for zz in range(D):
                if src[x, y, zz] != 0:
                    g[x, y, zz] = 0.0
                else:
                    g[x, y, zz] = BIG

    nmax = max(H, max(W, D))
    f = np.empty(nmax, np.float64)
    d = np.empty(nmax, np.float64)
    v = np.empty(nmax, np.int64)
    z = np.empty(nmax + 1, np.float64)

    for y in range(W):
        for zz in range(D):
            for x in range(H):
                f[x] = g[x, y, zz]
            _edt_pass(f, H, sx, v, z, d)
            for x in range(H):
                g[x, y, zz] = d[x]
    for x in range(H):
        for zz in range(D):
            for y in range(W):
                f[y] = g[x, y, zz]
            _edt_pass(f, W, sy, v, z, d)
            for y in range(W):
                g[x, y, zz] = d[y]
    for x in range(H):
        for y in range(W):
            for zz in range(D):
                f[zz] = g[x, y, zz]
            _edt_pass(f, D, sz, v, z, d)
            for zz in range(D):
                g[x, y, zz] = d[zz]
    return g


def sq_edt(source_mask: np.ndarray, spacing) -> np.ndarray:
    """Squared distance (mm^2) from every voxel to the nearest source voxel."""
    src = np.ascontiguousarray(source_mask.astype(np.uint8))
    sx, sy, sz = (float(s) for s in spacing)
    return _sq_edt_3d(src, sx, sy, sz)


@maybe_jit
def _bruteforce_signed_loops(fg, sx, sy, sz):
    H, W, D = fg.shape
    out = np.empty((H, W, D), np.float64)
    for x in range(H):
        for y in range(W):
            for zz in range(D):
                side = fg[x, y, zz]
                best = BIG
                for u in range(H):
                    for vv in range(W):
                        for w in range(D):
                            if fg[u, vv, w] != side:
                                dx = (x - u) * sx
                                dy = (y - vv) * sy
                                dz = (zz - w) * sz
                                dd = dx * dx + dy * dy + dz * dz
                                if dd < best:
                                    best = dd
                r = np.sqrt(best)
                out[x, y, zz] = r if side != 0 else -r
    return out


def _bruteforce_signed_numpy(fg: np.ndarray, sx: float, sy: float, sz: float):
    # Exhaustive pairwise scan, vectorized in chunks to bound memory.
    coords = np.argwhere(np.ones_like(fg, dtype=bool))
    flat_fg = fg.reshape(-1).astype(bool)
    fg_pts = coords[flat_fg]
    bg_pts = coords[~flat_fg]
    scale = np.array([sx, sy, sz], dtype=np.float64)

    def min_dist2(points, others):
        best = np.full(len(points), BIG, dtype=np.float64)
        step = max(1, 2_000_000 // max(1, len(others)))
        for start in range(0, len(points), step):
            chunk = points[start : start + step]
            diff = chunk[:, None, :] - others[None, :, :]
            dx = diff[..., 0] * scale[0]
            dy = diff[..., 1] * scale[1]
            dz = diff[..., 2] * scale[2]
            dd = dx * dx + dy * dy + dz * dz
            best[start : start + step] = dd.min(axis=1)
        return best

    out = np.empty(fg.shape, dtype=np.float64)
    flat = out.reshape(-1)
    flat_idx_fg = np.flatnonzero(flat_fg)
    flat_idx_bg = np.flatnonzero(~flat_fg)
    flat[flat_idx_fg] = np.sqrt(min_dist2(fg_pts, bg_pts))
    flat[flat_idx_bg] = -np.sqrt(min_dist2(bg_pts, fg_pts))
    return out


def bruteforce_signed(fg: np.ndarray, spacing) -> np.ndarray:
    """Signed distances by exhaustive scan over all opposite-label voxels."""
    sx, sy, sz = (float(s) for s in spacing)
    if NUMBA_ENABLED:
        return _bruteforce_signed_loops(
            np.ascontiguousarray(fg.astype(np.uint8)), sx, sy, sz
        )
    return _bruteforce_signed_numpy(fg, sx, sy, sz)


@maybe_jit
def _lerp(a, b, t):
    # Weighted form, clamped to the endpoint interval so interpolation can
    # never overshoot the data range even under floating-point rounding.
    val = (1.0 - t) * a + t * b
    lo = a if a < b else b
    hi = b if a < b else a
    if val < lo:
        return lo
    if val > hi:
        return hi
    return val


@maybe_jit
def _trilinear_gather_loops(src, i0x, i1x, fx, i0y, i1y, fy, i0z, i1z, fz):
    nx = i0x.shape[0]
    ny = i0y.shape[0]
    nz = i0z.shape[0]
    out = np.empty((nx, ny, nz), np.float64)
    for i in range(nx):
        ax0 = i0x[i]
        ax1 = i1x[i]
        tx = fx[i]
        for j in range(ny):
            ay0 = i0y[j]
            ay1 = i1y[j]
            ty = fy[j]
            for k in range(nz):
                az0 = i0z[k]
                az1 = i1z[k]
                tz = fz[k]
                v00 = _lerp(src[ax0, ay0, az0], src[ax1, ay0, az0], tx)
                v10 = _lerp(src[ax0, ay1, az0], src[ax1, ay1, az0], tx)
                v01 = _lerp(src[ax0, ay0, az1], src[ax1, ay0, az1], tx)
                v11 = _lerp(src[ax0, ay1, az1], src[ax1, ay1, az1], tx)
                v0 = _lerp(v00, v10, ty)
                v1 = _lerp(v01, v11, ty)
                out[i, j, k] = _lerp(v0, v1, tz)
    return out


def _trilinear_gather_numpy(src, i0x, i1x, fx, i0y, i1y, fy, i0z, i1z, fz):
    def lerp(a, b, t):
        val = (1.0 - t) * a + t * b
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        return np.clip(val, lo, hi)

    tx = fx[:, None, None]
    ty = fy[None, :, None]
    tz = fz[None, None, :]
    X0 = i0x[:, None, None]
    X1 = i1x[:, None, None]
    Y0 = i0y[None, :, None]
    Y1 = i1y[None, :, None]
    Z0 = i0z[None, None, :]
    Z1 = i1z[None, None, :]
    v00 = lerp(src[X0, Y0, Z0], src[X1, Y0, Z0], tx)
    v10 = lerp(src[X0, Y1, Z0], src[X1, Y1, Z0], tx)
    v01 = lerp(src[X0, Y0, Z1], src[X1, Y0, Z1], tx)
    v11 = lerp(src[X0, Y1, Z1], src[X1, Y1, Z1], tx)
    v0 = lerp(v00, v10, ty)
    v1 = lerp(v01, v11, ty)
    return lerp(v0, v1, tz)


def trilinear_gather(src, axes) -> np.ndarray:
    """Sample ``src`` on the tensor-product grid described by ``axes``.

    ``axes`` is a triple of (lower index, upper index, fraction) arrays,
    one per axis, as produced by the resampler.
    """
    (i0x, i1x, fx), (i0y, i1y, fy), (i0z, i1z, fz) = axes
    args = (
        np.ascontiguousarray(src, dtype=np.float64),
        i0x, i1x, fx, i0y, i1y, fy, i0z, i1z, fz,
    )
    if NUMBA_ENABLED:
        return _trilinear_gather_loops(*args)
    return _trilinear_gather_numpy(*args)


def nearest_gather(src, idx) -> np.ndarray:
    """Nearest-neighbor gather on a per-axis index grid."""
    ix, iy, iz = idx
    return src[np.ix_(ix, iy, iz)]
