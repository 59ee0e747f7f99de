#!/usr/bin/env python3
"""Benchmark the retarded-integral backends: compiled vs numpy vs spectral.

The shell accumulation dominates the positivity iteration's runtime.  This
script times one full retarded-potential evaluation per backend on a few
grid sizes and prints a table.  Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from torwave import _retarded_np
from torwave.kernels import retarded_potential
from torwave.positivity import lebedev_quadrature

try:
    from torwave import _retarded as compiled
except ImportError:
    compiled = None


def time_call(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_shell(n: int, quad) -> dict:
    rng = np.random.default_rng(0)
    g = rng.normal(size=(n, n, n))
    out = np.zeros_like(g)
    res = {}
    res["numpy"] = time_call(_retarded_np.accumulate_shell, g, 0.4, quad.nodes, quad.weights, 1.0, out)
    if compiled is not None:
        res["compiled"] = time_call(compiled.accumulate_shell, g, 0.4, quad.nodes, quad.weights, 1.0, out)
    return res


def bench_full(n: int, nt: int, quad) -> dict:
    rng = np.random.default_rng(0)
    g = rng.normal(size=(nt, n, n, n))
    times = np.linspace(0.0, 1.0, nt)
    res = {}
    import torwave.kernels as K

    import os

    os.environ["TORWAVE_KERNEL"] = "python"
    res["numpy"] = time_call(retarded_potential, g, times, quad.nodes, quad.weights, 0.05, "trilinear", repeat=1)
    os.environ.pop("TORWAVE_KERNEL")
    if compiled is not None:
        res["compiled"] = time_call(retarded_potential, g, times, quad.nodes, quad.weights, 0.05, "trilinear", repeat=1)
    res["spectral"] = time_call(retarded_potential, g, times, quad.nodes, quad.weights, 0.05, "spectral", repeat=1)
    return res


def main() -> None:
    quad = lebedev_quadrature()
    print(f"sphere rule: {len(quad.weights)} nodes")
    print("\nsingle shell accumulation (one quadrature node, 230 sphere points):")
    print(f"{'n':>4} {'numpy':>12} {'compiled':>12} {'speedup':>9}")
    for n in (8, 16, 24):
        r = bench_shell(n, quad)
        comp = r.get("compiled")
        speedup = f"{r['numpy'] / comp:7.1f}x" if comp else "      --"
        comp_s = f"{comp*1e3:9.2f}ms" if comp else "       --"
        print(f"{n:>4} {r['numpy']*1e3:9.2f}ms {comp_s} {speedup}")

    print("\nfull retarded potential (all times, trilinear vs spectral scheme):")
    print(f"{'n':>4} {'nt':>4} {'numpy':>10} {'compiled':>10} {'spectral':>10}")
    for n, nt in ((8, 21), (16, 21)):
        r = bench_full(n, nt, quad)
        comp = f"{r['compiled']:8.2f}s" if "compiled" in r else "      --"
        print(f"{n:>4} {nt:>4} {r['numpy']:8.2f}s {comp} {r['spectral']:8.2f}s")
    print("\nnote: the spectral scheme is also the most accurate in space;")
    print("the trilinear backends are kept for cross-checks and large grids.")


if __name__ == "__main__":
    main()
