"""Time the numba and numpy kernel backends on one 500-agent population.

    python3 benchmarks/bench_kernels.py [--n 500] [--repeat 200]

Prints per-kernel timings and the speedup, and whether both backends
return the same arrays.
"""

import argparse
import time

import numpy as np

from stagnet import _accel, kernels
from stagnet.dynamics import ModelParams, run_to_convergence
from stagnet.experiments import DEFAULT_MODEL, DEFAULT_PLACEMENT
from stagnet.population import build_population


def timed(fn, args, repeat):
    fn(*args)  # warm-up, triggers compilation
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeat, out


def compare(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    if all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b)):
        return "exact"
    # reductions may sum in a different order
    if all(np.allclose(x, y, rtol=1e-12, atol=0) for x, y in zip(a, b)):
        return "close"
    return "DIFFER"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--radius", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    pop = build_population(args.n, args.radius, 2, DEFAULT_PLACEMENT, seed=0)
    phys = pop.physical
    indptr, indices = pop.merged_csr()
    rng = np.random.default_rng(0)
    s = pop.strategies
    u = rng.random((2, phys.n_edges))
    payoff = rng.random(pop.n)
    opt = kernels.neighbour_means(indptr, indices, s)
    best = kernels.best_neighbour(phys.indptr, phys.indices, payoff)
    table = ModelParams().payoff.table()
    cases = {
        "play_pairs": (s, phys.pairs_i, phys.pairs_j, 0.8**phys.pair_dist, u[0], u[1], table, False, pop.n),
        "neighbour_sums": (indptr, indices, s),
        "best_neighbour": (phys.indptr, phys.indices, payoff),
        "revise": (s, opt, best, rng.random(pop.n), 0.7, 0.01, 1e-4),
        "deviation_terms": (indptr, indices, s, opt, kernels.SQUARED),
    }
    print(f"n={pop.n} physical edges={phys.n_edges} merged entries={indices.size}")
    print(f"{'kernel':<18}{'numpy us':>12}{'numba us':>12}{'speedup':>10}  match")
    for name, a in cases.items():
        res = {}
        for b in ("numpy", "numba"):
            _accel.set_backend(b)
            res[b] = timed(getattr(kernels, name), a, args.repeat)
        tn, tb = res["numpy"][0], res["numba"][0]
        eq = compare(res["numpy"][1], res["numba"][1])
        print(f"{name:<18}{tn * 1e6:>12.1f}{tb * 1e6:>12.1f}{tn / tb:>10.2f}  {eq}")

    print("\nfull run to convergence (calibrated defaults):")
    pop = build_population(args.n, DEFAULT_MODEL.radius, 2, DEFAULT_PLACEMENT, seed=1)
    for b in ("numpy", "numba"):
        _accel.set_backend(b)
        run_to_convergence(pop, DEFAULT_MODEL, np.random.default_rng(0))
        t0 = time.perf_counter()
        state, trace = run_to_convergence(pop, DEFAULT_MODEL, np.random.default_rng(0))
        dt = time.perf_counter() - t0
        print(f"  {b:<6} {dt * 1e3:8.1f} ms  epochs={trace.final_epoch}  checksum={state.strategies.sum():.12f}")


if __name__ == "__main__":
    main()
