"""Timing of the hot kernels, numba against the numpy fallback, plus one full
BFGS solve.

    python benchmarks/bench_kernels.py [--n 500] [--repeat 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cosshear import Params, make_grid
from cosshear import _kernels as K
from cosshear.discretize import BoundarySpec
from cosshear.presets import initial_state
from cosshear.solve import SolveOptions, minimize_bfgs


def best_of(fn, repeat):
    fn()  # warm up (triggers compilation for the jitted variant)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    p, a, ap_ = rng.normal(size=args.n), rng.normal(size=args.n), rng.normal(size=args.n)
    h = 1.0 / (args.n - 1)
    m = 2 * args.n
    H = np.eye(m)
    s, y = rng.normal(size=m), rng.normal(size=m)
    y += 2 * s

    cases = {
        "full_terms": (lambda: K.full_terms_np(p, a, ap_, 1.0, 0.3, 0.1),
                       lambda: K.full_terms_nb(p, a, ap_, 1.0, 0.3, 0.1)),
        "reduced_terms": (lambda: K.reduced_terms_np(p, a, ap_, 1.0, 0.3, 0.1, True),
                          lambda: K.reduced_terms_nb(p, a, ap_, 1.0, 0.3, 0.1, True)),
        "ddx_T": (lambda: K.ddx_T_np(p, h), lambda: K.ddx_T_nb(p, h)),
        "bfgs_update": (lambda: K.bfgs_update_np(H.copy(), s, y),
                        lambda: K.bfgs_update_nb(H.copy(), s, y)),
    }
    print(f"backend in use: {'numba' if K.USE_NUMBA else 'numpy'}  (n={args.n})")
    print(f"{'kernel':<16}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>10}")
    for name, (f_np, f_nb) in cases.items():
        t_np = best_of(f_np, args.repeat)
        if K.nb is None:
            print(f"{name:<16}{t_np * 1e6:12.1f}{'n/a':>12}")
            continue
        t_nb = best_of(f_nb, args.repeat)
        print(f"{name:<16}{t_np * 1e6:12.1f}{t_nb * 1e6:12.1f}{t_np / t_nb:10.2f}")

    prm = Params(mu=1.0, mu_c=0.02, gamma=0.8)
    g = make_grid(args.n)
    t = time.perf_counter()
    rep = minimize_bfgs(initial_state("near-zero", g, prm), prm, BoundarySpec("consistent", gamma=0.8),
                        "full", SolveOptions(grad_tol=1e-9, h0="hessian"))
    print(f"\nBFGS solve n={args.n}, mu_c=0.02: {time.perf_counter() - t:.2f}s, "
          f"{rep.iterations} iterations, E={rep.energy:.10f}")


if __name__ == "__main__":
    main()
