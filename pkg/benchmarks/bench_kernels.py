#!/usr/bin/env python3
"""Timing comparison of the compiled and pure-Python evolution kernels.

Runs the long-trajectory workloads that dominate the experiment runtime
(the scalar oscillator loops) through both backends and reports the
speedup.  Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import numpy as np

from ldint import _kernels_py
from ldint import backend

try:
    from ldint import _kernels as compiled
except ImportError:
    compiled = None

CASES = [
    ("sho / ld2", _kernels_py.SYS_SHO, _kernels_py.M_LD2, 0.0),
    ("sho / ld4", _kernels_py.SYS_SHO, _kernels_py.M_LD4, 0.0),
    ("sho / rk4", _kernels_py.SYS_SHO, _kernels_py.M_RK4, 0.0),
    ("pendulum / ld2", _kernels_py.SYS_PENDULUM, _kernels_py.M_LD2, 0.0),
    ("pendulum / ld4", _kernels_py.SYS_PENDULUM, _kernels_py.M_LD4, 0.0),
    ("damped / ld4", _kernels_py.SYS_DAMPED, _kernels_py.M_LD4, 1e-4),
]


def run(module, system, method, gamma, steps):
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        q, p, _ = module.evolve_scalar(
            system, method, gamma, 1.0, 0.0, 0.0, 0.1, steps, 1e-14, 25, True
        )
        best = min(best, time.perf_counter() - t0)
    return best, q, p


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=314160,
                        help="steps per run (default: 5000 oscillator periods)")
    args = parser.parse_args()

    print(f"selected backend: {backend.BACKEND}")
    if compiled is None:
        print("compiled kernels not built; timing the pure-Python reference only")
    print(f"{'case':>16} {'python':>10} {'compiled':>10} {'speedup':>8}  identical")
    for label, system, method, gamma in CASES:
        t_py, q_py, p_py = run(_kernels_py, system, method, gamma, args.steps)
        if compiled is None:
            print(f"{label:>16} {t_py:>9.3f}s {'-':>10} {'-':>8}")
            continue
        t_c, q_c, p_c = run(compiled, system, method, gamma, args.steps)
        same = np.array_equal(q_py, q_c) and np.array_equal(p_py, p_c)
        print(
            f"{label:>16} {t_py:>9.3f}s {t_c:>9.3f}s {t_py / t_c:>7.1f}x  {same}"
        )


if __name__ == "__main__":
    main()
