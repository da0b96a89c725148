#!/usr/bin/env python3
"""Benchmark the compiled core against the pure-Python fallback.

Times the two hot kernels (pairwise mollified drift, mollified deposit) on
identical inputs at a few problem sizes and reports speedups plus the maximum
discrepancy between the backends.
"""

from __future__ import annotations

import time

import numpy as np

from kinchaos._backend import HAVE_COMPILED, get_core
from kinchaos.grid import PhaseGrid
from kinchaos.kernels import MollifierSpec, _bump_mass, scaled_quadrature


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_drift(core, n, rng, moll):
    xs = rng.normal(0.0, 0.12, n)
    vs = rng.normal(0.0, 0.35, n)
    node_x, node_v, wq = scaled_quadrature(moll, n)
    out = np.zeros(n)

    def run():
        out[:] = 0.0
        core.pairwise_drift_1d(
            xs, vs, xs, vs, 0.125, node_x[:, 0], node_v[:, 0], wq,
            1, 1.0, 0.5, 1.0, 1e-3, out,
        )

    return run, out


def bench_deposit(core, n, rng, moll, grid):
    xs = rng.normal(0.0, 0.12, n)
    vs = rng.normal(0.0, 0.35, n)
    out = np.zeros((grid.n_x, grid.n_v))

    def run():
        out[:] = 0.0
        core.deposit_1d(
            xs, vs, 0.125, moll.scale(n), moll.alpha, moll.r_x, moll.r_v,
            _bump_mass(), -grid.box_x, grid.dx, -grid.box_v, grid.dv, out,
        )

    return run, out


def main():
    print(f"compiled backend available: {HAVE_COMPILED}")
    if not HAVE_COMPILED:
        print("nothing to compare: only the pure-Python backend is importable")
        return
    compiled = get_core()
    fallback = get_core(force_python=True)
    moll = MollifierSpec(alpha=2.0, dim=1, zeta=0.169, quad_order=3)
    grid = PhaseGrid(n_x=1024, n_v=256, box_x=0.75, box_v=4.0)
    rng = np.random.default_rng(0)

    print(f"{'kernel':<22}{'n':>8}{'compiled':>12}{'fallback':>12}"
          f"{'speedup':>9}{'max|diff|':>12}")
    for n in (512, 2048, 8192):
        run_c, out_c = bench_drift(compiled, n, np.random.default_rng(1), moll)
        run_p, out_p = bench_drift(fallback, n, np.random.default_rng(1), moll)
        tc, tp = _time(run_c), _time(run_p)
        diff = float(np.max(np.abs(out_c - out_p)))
        print(f"{'pairwise_drift_1d':<22}{n:>8}{tc:>11.4f}s{tp:>11.4f}s"
              f"{tp / tc:>8.1f}x{diff:>12.3e}")
    for n in (4096, 65536):
        run_c, out_c = bench_deposit(compiled, n, np.random.default_rng(2), moll, grid)
        run_p, out_p = bench_deposit(fallback, n, np.random.default_rng(2), moll, grid)
        tc, tp = _time(run_c), _time(run_p)
        diff = float(np.max(np.abs(out_c - out_p)))
        print(f"{'deposit_1d':<22}{n:>8}{tc:>11.4f}s{tp:>11.4f}s"
              f"{tp / tc:>8.1f}x{diff:>12.3e}")


if __name__ == "__main__":
    main()
