"""Compiled vs pure-Python interaction-picture stepper.

    python benchmarks/bench_kernels.py [--repeat 3] [--T 60]

Prints wall time per kernel and the largest difference between the propagators.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mtlz import family_builder as fb
from mtlz import hamiltonian_engine as he
from mtlz import scattering_numeric as sn


def problems():
    # (name, H, window as a fraction of --T); the large magnet oscillates fastest
    yield "LZ 2-state", sn.lz_two_state(1.0, 0.3), 1.0
    cube = he.assemble(fb.build_cube((0.5, 0.3, 0.4), gammas=(0.1, 0.07, 0.05)))
    yield "cube 8-state", he.restrict(cube, he.choose_generic_path(cube, trials=50)), 1.0
    gm = he.assemble(fb.build_gamma_magnet(4, [0.5, 1.7, 4.1, 7.1], [0.14, 0.15, 0.17, 0.15]))
    yield "gamma-magnet 16-state", he.restrict(gm, he.TimePath((1.0, 0.0), (0.0, 1.0))), 0.1


def run(H, kernel, T, rtol, atol):
    a = np.diag(H.A).copy()
    cpl = np.ascontiguousarray(H.A - np.diag(a))
    return kernel(a, H.slopes, cpl, -T, T, rtol, atol)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--T", type=float, default=60.0)
    ap.add_argument("--rtol", type=float, default=1e-9)
    args = ap.parse_args(argv)
    kernels = {"python": sn.get_kernel("python")}
    try:
        kernels["cython"] = sn.get_kernel("cython")
    except RuntimeError:
        print("compiled kernel not built; timing the Python kernel only")
    print(f"{'problem':24s} {'kernel':8s} {'steps':>7s} {'best s':>9s}")
    for name, H, frac in problems():
        results = {}
        for kname, k in kernels.items():
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                U, steps, _ = run(H, k, frac * args.T, args.rtol, args.rtol * 1e-3)
                best = min(best, time.perf_counter() - t0)
            results[kname] = (U, best)
            print(f"{name:24s} {kname:8s} {steps:7d} {best:9.4f}")
        if len(results) == 2:
            diff = np.max(np.abs(results["python"][0] - results["cython"][0]))
            speed = results["python"][1] / results["cython"][1]
            print(f"{'':24s} speedup {speed:6.1f}x   max |dU| = {diff:.2e}")


if __name__ == "__main__":
    main()
