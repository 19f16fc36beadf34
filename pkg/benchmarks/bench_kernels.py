"""Throughput of the compiled and numpy batch simulators.

    python benchmarks/bench_kernels.py [--K 4000] [--N 100] [--steps 400]

Prints mode-steps per second for each backend and control variant, the
speedup of the compiled kernel, and compiled throughput per thread count.
Both backends are also checked to agree on exit flags and steps.
"""

import argparse
import os
import time

import numpy as np

from spdeis import SchemeConfig, SimConfig, preset
from spdeis import _backend
from spdeis.dynamics import simulate


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=4000)
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--T", type=float, default=4.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, nargs="*")
    args = ap.parse_args()

    model = preset("integer-squares", args.N)
    sim = SimConfig(args.eps, args.T, steps=args.steps)
    backends = _backend.available()
    print(f"backends: {', '.join(backends)}; cpus: {os.cpu_count()}")
    print(f"K={args.K} N={args.N} steps={args.steps} eps={args.eps} T={args.T}")
    print(f"{'variant':<10}{'backend':<10}{'seconds':>10}{'Mmode-steps/s':>16}")

    for variant in ("none", "scheme2", "scheme1"):
        scheme = SchemeConfig(variant)
        rates = {}
        results = {}
        for b in backends:
            # the numpy path is slow, so it runs on a tenth of the paths
            k = args.K if b == "compiled" else max(2, args.K // 10)
            sec, res = timed(lambda: simulate(model, sim, scheme, 7, k, threads=1, backend=b), args.repeat)
            # exited paths stop early, so count the steps actually taken
            taken = np.where(res.exited, res.exit_step + 1, args.steps).sum()
            rates[b] = taken * args.N / sec
            results[b] = res
            print(f"{variant:<10}{b:<10}{sec:>10.3f}{rates[b] / 1e6:>16.2f}")
        if "compiled" in rates:
            print(f"{'':<10}compiled speedup {rates['compiled'] / rates['python']:.1f}x")
            k = results["python"].exited.size
            c, p = results["compiled"], results["python"]
            same = np.array_equal(c.exited[:k], p.exited) and np.array_equal(c.exit_step[:k], p.exit_step)
            gap = float(np.max(np.abs(c.log_weight[:k] - p.log_weight))) if k else 0.0
            print(f"{'':<10}backends agree on exits: {same}; max |log-weight gap| = {gap:.2e}")

    if "compiled" in backends:
        threads = args.threads or sorted({1, 2, 4, os.cpu_count() or 1})
        scheme = SchemeConfig("scheme2")
        print("\ncompiled scheme2 throughput by thread count")
        base = None
        for t in threads:
            sec, res = timed(lambda: simulate(model, sim, scheme, 7, args.K, threads=t), args.repeat)
            taken = np.where(res.exited, res.exit_step + 1, args.steps).sum()
            rate = taken * args.N / sec
            base = base or rate
            print(f"  threads={t:<3} {rate / 1e6:8.2f} Mmode-steps/s  ({rate / base:.2f}x of 1 thread)")


if __name__ == "__main__":
    main()
