"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 8,12,16] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from dtn_incentive import _kernels_py, kernels


def _case(n, seed=0):
    rng = np.random.default_rng(seed)
    lam = np.ascontiguousarray(rng.uniform(0.05, 5, n))
    mu = np.ascontiguousarray(rng.uniform(0.05, 5, n))
    x = np.ascontiguousarray(rng.uniform(0, 1, n))
    y = np.ascontiguousarray(rng.uniform(0, 1, n))
    vals = np.ascontiguousarray(rng.uniform(0, 1, 1 << n))
    return lam, mu, x, y, vals


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="6,10,14,18")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    try:
        from dtn_incentive import _kernels as compiled
    except ImportError:
        compiled = None
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':<12}{'N':>4}{'compiled ms':>14}{'numpy ms':>12}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        lam, mu, x, y, vals = _case(n)
        jobs = {
            "race_table": lambda mod: mod.race_table(lam, mu, 0),
            "subset_sum": lambda mod: mod.subset_sum(x, y, vals, n // 2),
        }
        for name, job in jobs.items():
            number = max(1, 2 ** max(0, 14 - n))
            t_py = min(timeit.repeat(lambda: job(_kernels_py), number=number, repeat=args.repeat)) / number
            if compiled is not None:
                t_c = min(timeit.repeat(lambda: job(compiled), number=number, repeat=args.repeat)) / number
                print(f"{name:<12}{n:>4}{t_c * 1e3:>14.4f}{t_py * 1e3:>12.4f}{t_py / t_c:>10.1f}")
            else:
                print(f"{name:<12}{n:>4}{'-':>14}{t_py * 1e3:>12.4f}{'-':>10}")


if __name__ == "__main__":
    main()
