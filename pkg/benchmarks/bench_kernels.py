"""Benchmark: compiled transport kernels vs the NumPy fallback.

Runs the raw gather/accumulate kernels across sizes and one end-to-end
characteristic evolution with each backend patched in. Usage:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from portflow import _transport_py, kernels
from portflow.flow_solver import evolve
from portflow.scenarios import compile_scenario, telegraph_dirichlet

try:
    from portflow import _transport
except ImportError:
    _transport = None


def best_of(fn, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def micro_bench():
    rng = np.random.default_rng(0)
    impls = [("numpy", _transport_py)]
    if _transport is not None:
        impls.append(("cython", _transport))
    print(f"{'size':>8}  {'kernel':<18}" + "".join(f"{name:>12}" for name, _ in impls))
    for n in (257, 1025, 4097, 16385):
        samples = rng.standard_normal(n)
        queries = rng.uniform(0, 1, size=n)
        out = np.zeros(n)
        rows = {
            "gather_linear": [
                best_of(lambda impl=impl: impl.gather_linear(samples, queries))
                for _, impl in impls
            ],
            "interp_accumulate": [
                best_of(lambda impl=impl: impl.interp_accumulate(out, samples, queries, 0.5))
                for _, impl in impls
            ],
        }
        for kernel, times in rows.items():
            cells = "".join(f"{t * 1e6:>10.1f}us" for t in times)
            print(f"{n:>8}  {kernel:<18}{cells}")


def end_to_end(impl):
    kernels.gather_linear = impl.gather_linear
    kernels.interp_accumulate = impl.interp_accumulate
    c = compile_scenario(telegraph_dirichlet(), grid=4096)
    state = c.initial_state()
    # misaligned window so every read interpolates (the hot path)
    t_step = 0.37 * c.ttm.window
    return best_of(
        lambda: evolve(state, c.gfm.b, c.ttm, 20 * t_step, max_step=t_step), repeats=3
    )


def flow_bench():
    saved = (kernels.gather_linear, kernels.interp_accumulate)
    try:
        t_np = end_to_end(_transport_py)
        print(f"\nend-to-end evolve (G=4096, 20 windows): numpy  {t_np * 1e3:8.1f} ms")
        if _transport is not None:
            t_cy = end_to_end(_transport)
            print(f"end-to-end evolve (G=4096, 20 windows): cython {t_cy * 1e3:8.1f} ms")
            print(f"speedup: {t_np / t_cy:.2f}x")
    finally:
        kernels.gather_linear, kernels.interp_accumulate = saved


if __name__ == "__main__":
    print(f"default backend: {kernels.BACKEND}")
    micro_bench()
    flow_bench()
