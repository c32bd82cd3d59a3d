"""Benchmark the numba-compiled kernels against the pure numpy/Python fallback.

Run without arguments to get the comparison table; the script re-executes
itself once per path (the fallback is selected by BATSEG_NO_NUMBA=1 before
import, so each path needs a fresh interpreter).

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

CASES = ("edt_64", "bruteforce_16", "trilinear_64_to_96", "build_field_48")


def run_cases(repeats: int = 3) -> dict[str, float]:
    import numpy as np

    import batseg

    rng = np.random.default_rng(0)

    blob = np.zeros((64, 64, 64), dtype=bool)
    x, y, z = np.mgrid[:64, :64, :64]
    blob |= (x - 24) ** 2 + (y - 30) ** 2 + (z - 40) ** 2 < 180
    blob |= (x - 44) ** 2 + (y - 20) ** 2 + (z - 18) ** 2 < 90

    small = rng.random((16, 16, 16)) < 0.3
    small[0, 0, 0] = True
    small[1, 1, 1] = False

    vol = batseg.Volume3D(rng.normal(size=(64, 64, 64)), spacing=(1.5, 1.5, 1.5))
    spec = batseg.ResampleSpec(target_spacing=(1.0, 1.0, 1.0))

    lab48 = rng.integers(0, 3, size=(48, 48, 48)).astype(np.uint8)
    gt48 = batseg.LabelVolume(lab48, spacing=(0.47, 0.47, 3.3), num_classes=3)

    def bench(fn):
        fn()  # warm-up (numba compilation happens here)
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        return best

    return {
        "numba_enabled": batseg.NUMBA_ENABLED,
        "edt_64": bench(lambda: batseg.edt_binary(blob, (0.47, 0.47, 3.3))),
        "bruteforce_16": bench(lambda: batseg.edt_bruteforce(small, (1.0, 1.0, 1.0))),
        "trilinear_64_to_96": bench(lambda: batseg.resample(vol, spec)),
        "build_field_48": bench(lambda: batseg.build_field(gt48)),
    }


def main() -> int:
    if "--inner" in sys.argv:
        print(json.dumps(run_cases()))
        return 0

    results = {}
    for label, env_flag in (("numba", "0"), ("numpy fallback", "1")):
        env = dict(os.environ, BATSEG_NO_NUMBA=env_flag)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--inner"],
            capture_output=True,
            text=True,
            env=env,
        )
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return 1
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])

    assert results["numba"]["numba_enabled"] is True
    assert results["numpy fallback"]["numba_enabled"] is False

    print(f"{'kernel':<22} {'numba (s)':>12} {'fallback (s)':>14} {'speedup':>9}")
    for case in CASES:
        fast = results["numba"][case]
        slow = results["numpy fallback"][case]
        print(f"{case:<22} {fast:>12.4f} {slow:>14.4f} {slow / fast:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
