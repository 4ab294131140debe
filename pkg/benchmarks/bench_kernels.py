"""Benchmark the autoignition-integral kernels: numba-compiled scalar march
vs the vectorised pure-numpy path.

Usage: python benchmarks/bench_kernels.py [--points 400] [--repeats 5]

The numba path is what the package uses by default; exporting
DUALFUEL_DISABLE_NUMBA=1 switches the package to the numpy path benchmarked
here. Results also sanity-check that both backends agree.
"""

import argparse
import time

import numpy as np

import dualfuel as df
from dualfuel import _kernels
from dualfuel.plant import MISFIRE_LIMIT, _kernel_args


def sample_points(n, seed=0):
    rng = np.random.default_rng(seed)
    geom = df.default_geometry()
    coeffs = df.default_coefficients()
    cfg = df.PlantConfig(geom=geom, coeffs=coeffs)
    points = []
    for _ in range(n):
        op = df.OperatingPoint(
            speed=rng.uniform(1200.0, 1500.0),
            phi_ng=rng.uniform(0.2, 0.7),
            phi_di=rng.uniform(0.2, 0.5),
            egr=rng.uniform(0.0, 0.5),
            x_r=rng.uniform(0.02, 0.05),
            p_ivc=rng.uniform(2.85, 4.37),
            t_ivc=rng.uniform(372.56, 408.87),
        )
        soi = rng.uniform(-20.0, -10.0)
        points.append((soi, cfg.quad_step, MISFIRE_LIMIT) + _kernel_args(op, cfg))
    return points


def run(fn, points, repeats):
    # warm up (JIT compilation for the numba path)
    fn(*points[0])
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in points:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=400)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    points = sample_points(args.points)

    t_numpy = run(_kernels.march_numpy, points, args.repeats)
    print(f"numpy fallback : {t_numpy * 1e3:8.2f} ms "
          f"({t_numpy / args.points * 1e6:7.1f} us/point)")

    if _kernels.NUMBA_ENABLED:
        t_jit = run(_kernels.march_jit, points, args.repeats)
        print(f"numba njit     : {t_jit * 1e3:8.2f} ms "
              f"({t_jit / args.points * 1e6:7.1f} us/point)")
        print(f"speedup        : {t_numpy / t_jit:8.1f}x")
        worst = max(abs(_kernels.march_jit(*a)[0] - _kernels.march_numpy(*a)[0])
                    for a in points)
        print(f"max |SOC diff| : {worst:.3e} CAD")
    else:
        print("numba njit     : unavailable (disabled by env or not installed)")


if __name__ == "__main__":
    main()
