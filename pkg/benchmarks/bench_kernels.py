"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Covers the per-step hot kernels (dynamics RHS, RK4 step, softmin) and an
end-to-end scenario integration with the backend switched both ways.
The control stack itself runs on dual numbers either way, so the
end-to-end gain is expected to be modest compared to the kernel-level
speedups; both numbers are reported.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--scenario fig3]
"""

import argparse
import time

import numpy as np

from fwrta import kernels
from fwrta.scenario import load_scenario
from fwrta.simulate import integrate


def time_call(fn, args, repeat, inner=1000):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_kernels(repeat):
    x = np.array([0.0, 0.0, -50.0, 0.2, 0.1, 1.3, 160.0])
    u = np.array([1.0, -0.02, 0.05])
    vals = np.array([3018.0, 2871.4, 5307.3])
    cases = [
        ("dubins_rhs", (x, u, 9.81), kernels.dubins_rhs_py, kernels.dubins_rhs_jit),
        ("rk4_step", (x, u, 0.01, 9.81), kernels.rk4_step_py, kernels.rk4_step_jit),
        ("softmin_weights", (vals, 0.007), kernels.softmin_weights_py, kernels.softmin_weights_jit),
    ]
    print(f"{'kernel':<18}{'numpy (us)':>12}{'numba (us)':>12}{'speedup':>9}")
    for name, args, py, jit in cases:
        t_py = time_call(py, args, repeat)
        if jit is None:
            print(f"{name:<18}{t_py * 1e6:>12.2f}{'n/a':>12}{'n/a':>9}")
            continue
        jit(*args)  # compile
        t_jit = time_call(jit, args, repeat)
        print(f"{name:<18}{t_py * 1e6:>12.2f}{t_jit * 1e6:>12.2f}{t_py / t_jit:>9.1f}")


def bench_end_to_end(scenario, horizon, repeat):
    print(f"\nend-to-end: scenario {scenario}, horizon {horizon}s")
    results = {}
    for backend in ("numpy", "numba"):
        if kernels.set_backend(backend) != backend:
            print(f"{backend:<8} unavailable")
            continue
        scn = load_scenario(scenario)
        scn.t_final = horizon
        integrate(scn)  # warm (jit compile, caches)
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            integrate(scn)
            best = min(best, time.perf_counter() - t0)
        results[backend] = best
        print(f"{backend:<8}{best:>10.3f} s")
    if len(results) == 2:
        print(f"speedup  {results['numpy'] / results['numba']:>8.2f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scenario", default="fig3")
    ap.add_argument("--horizon", type=float, default=20.0)
    args = ap.parse_args()
    print(f"numba available: {kernels.HAS_NUMBA}; active backend: {kernels.BACKEND}")
    bench_kernels(args.repeat)
    bench_end_to_end(args.scenario, args.horizon, args.repeat)
    kernels.set_backend("numba" if kernels.HAS_NUMBA else "numpy")


if __name__ == "__main__":
    main()
