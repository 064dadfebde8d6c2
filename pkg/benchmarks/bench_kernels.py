"""Compare the compiled and numpy interference kernels.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat R]

Prints the best-of-R wall time per backend, the speed-up and the largest
relative difference between the two results.
"""
import argparse
import time

import numpy as np

from molnet import kernels
from molnet.params import table1
from molnet.simulator import TrialConfig, run_error_trials


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_kernel(n, repeat, rng):
    prm = table1()
    d = prm.r0 + rng.exponential(60.0, size=n)
    slot = rng.integers(0, prm.L, size=n)
    weight = rng.choice(prm.constellation, size=n)
    t_slot = np.array([(prm.L - c) * prm.T for c in range(prm.L)])
    n_groups = 1000
    group = np.sort(rng.integers(0, n_groups, size=n))
    res = {}
    for backend in kernels.available_backends():
        res[backend] = _best(lambda: kernels.accumulate_interference(
            d, slot, weight, t_slot, group, n_groups, prm.D, prm.mu, prm.r0, backend=backend), repeat)
    return res


def bench_simulation(trials, repeat):
    res = {}
    for backend in kernels.available_backends():
        cfg = TrialConfig(table1(), trials=trials, backend=backend)
        res[backend] = _best(lambda: run_error_trials(cfg).error_rate, repeat)
    return res


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--points", type=int, default=2_000_000)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(1)

    print(f"kernel: {args.points} transmitter distances")
    res = bench_kernel(args.points, args.repeat, rng)
    for name, (t, _) in res.items():
        print(f"  {name:7s} {t * 1e3:9.1f} ms  {args.points / t / 1e6:7.1f} Mpts/s")
    if "cython" in res:
        a, b = res["python"][1], res["cython"][1]
        diff = np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300))
        print(f"  speed-up {res['python'][0] / res['cython'][0]:.2f}x, max rel diff {diff:.2e}")
    else:
        print("  compiled backend not built; only the numpy kernel was timed")

    print(f"end-to-end Monte Carlo: {args.trials} trials at the reference point")
    res = bench_simulation(args.trials, 1)
    for name, (t, rate) in res.items():
        print(f"  {name:7s} {t:7.2f} s  error rate {rate:.4f}")


if __name__ == "__main__":
    main()
