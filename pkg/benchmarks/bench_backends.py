"""Timing comparison of the compiled and pure-python stepping kernels.

Runs the same geodesic workload through both implementations of
``integrate_raw`` and reports wall-clock times and the speedup.  The
compiled kernel is optional at build time, so this doubles as a check
that the fallback stays usable.

    python3 benchmarks/bench_backends.py --t-max 50 --repeats 5
"""

import argparse
import importlib
import math
import time

import numpy as np


def load_backends():
    backends = {}
    py = importlib.import_module("ellipsax._kernel._stepper_py")
    backends[py.BACKEND] = py.integrate_raw
    try:
        cy = importlib.import_module("ellipsax._kernel._stepper")
        backends[cy.BACKEND] = cy.integrate_raw
    except ImportError:
        pass
    return backends


def workload(n):
    """A seeded unit-speed start point on a generic n-axis ellipsoid."""
    from ellipsax.geometry import (Ellipsoid, project_to_ellipsoid,
                                   random_unit_tangent)

    alphas = np.arange(n, 0, -1, dtype=float)
    E = Ellipsoid(alphas)
    x0 = project_to_ellipsoid(E, np.arange(1, n + 1, dtype=float))
    xi0 = random_unit_tangent(E, x0, seed=1)
    return E.ainv, np.concatenate([x0, xi0])


def time_one(fn, ainv, y0, t_max, repeats):
    best = math.inf
    steps = 0
    for _ in range(repeats):
        t0 = time.perf_counter()
        status, ts, ys, ks, hs = fn(ainv, y0, t_max, 1e-11, 1e-13, 0.5,
                                    1, 0.0, 0.0, 2_000_000)
        best = min(best, time.perf_counter() - t0)
        assert status == 0
        steps = len(hs)
    return best, steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-max", type=float, default=50.0)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--dims", default="3,4,6",
                    help="comma-separated ambient dimensions")
    args = ap.parse_args()

    backends = load_backends()
    dims = [int(d) for d in args.dims.split(",")]
    print(f"backends: {', '.join(sorted(backends))}   "
          f"t_max = {args.t_max:g}, best of {args.repeats}")
    print(f"{'n':>3s} {'backend':>9s} {'steps':>7s} {'time':>10s} {'per-step':>10s}")
    for n in dims:
        ainv, y0 = workload(n)
        times = {}
        for name in sorted(backends):
            dt, steps = time_one(backends[name], ainv, y0, args.t_max,
                                 args.repeats)
            times[name] = dt
            print(f"{n:3d} {name:>9s} {steps:7d} {dt * 1e3:9.2f}ms"
                  f" {dt / steps * 1e6:9.2f}us")
        if len(times) == 2:
            print(f"    speedup: {times['python'] / times['compiled']:.1f}x")


if __name__ == "__main__":
    main()
