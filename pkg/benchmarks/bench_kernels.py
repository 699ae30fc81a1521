"""Compare the compiled and numpy stencil kernels on evolution-sized grids.

Usage::

    python benchmarks/bench_kernels.py [--sizes 64x16 128x32 256x64] [--repeat 20]

Prints the median time per call for each kernel and backend together with the
maximum relative difference between the two backends.
"""
import argparse
import statistics
import time

import numpy as np

from kds_lab import scenarios
from kds_lab.evolution import kernels, solver


def _time(fn, repeat):
    fn()  # warm-up
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def bench(n_r, n_theta, repeat, rng):
    s = scenarios.make_setup(n_r=n_r, n_theta=n_theta)
    bg, g = s.background, s.grid
    u = rng.standard_normal((10, n_r, n_theta))
    v = rng.standard_normal((10, n_r, n_theta))
    par = bg.tensor_parity
    cases = {
        "dr1": lambda k: k.dr1(u, g.spacing_r),
        "dth2": lambda k: k.dth2(u, par, g.spacing_theta),
        "ko_dissipation": lambda k: k.ko_dissipation(u, par, 0.01, g.spacing_r,
                                                     g.spacing_theta),
        "scalar_rhs": lambda k: k.scalar_rhs(u, v, bg.coef, 0, g.spacing_r, g.spacing_theta,
                                             par),
    }
    names = ["python"] + (["cython"] if kernels._compiled is not None else [])
    backends = {n: kernels.Kernels(n) for n in names}
    rows = []
    for label, fn in cases.items():
        times = {n: _time(lambda: fn(k), repeat) for n, k in backends.items()}
        diff = float("nan")
        if len(backends) == 2:
            a, b = fn(backends["python"]), fn(backends["cython"])
            diff = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
        rows.append((label, times, diff))
    # one full RK4 step of the scalar system with the default backend
    rhs = solver.make_rhs("scalar", bg)
    state = scenarios.scalar_pulse(s)
    dt = solver.courant_dt(g, bg, 0.25)
    step = _time(lambda: solver.rk4_step(state, rhs, dt, 0.01), repeat)
    return rows, step


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", default=["64x16", "128x32", "256x64"])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    if kernels._compiled is None:
        print("compiled kernels unavailable; timing the numpy backend only")
    print(f"{'grid':>8} {'kernel':>15} {'python [ms]':>12} {'cython [ms]':>12} "
          f"{'speed-up':>9} {'rel diff':>9}")
    for size in args.sizes:
        n_r, n_theta = (int(x) for x in size.split("x"))
        rows, step = bench(n_r, n_theta, args.repeat, rng)
        for label, times, diff in rows:
            py = times["python"] * 1e3
            cy = times.get("cython", float("nan")) * 1e3
            print(f"{size:>8} {label:>15} {py:12.3f} {cy:12.3f} {py / cy:9.1f} {diff:9.1e}")
        print(f"{size:>8} {'rk4 step':>15} {'':>12} {step * 1e3:12.3f}  ({kernels.BACKEND})")


if __name__ == "__main__":
    main()
