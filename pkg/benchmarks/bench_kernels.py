"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--skip-dd]

Each kernel is timed in-process with both implementations after one warm-up
call (so numba compile time is excluded and reported separately).  The full
facet enumeration at n=4 is timed in a fresh interpreter per backend, since
the backend is fixed at import time through BELLPOLY_BACKEND.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from bellpoly.kernels import get_impl
from bellpoly.polytope import _PRIMES


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench_sweep(impls, repeat):
    rng = np.random.default_rng(0)
    for n in (6, 7, 8):
        coeffs = rng.integers(-5, 6, 2 + 2 * (n // 2) + n - 1).astype(np.int64)
        row = [f"strategy_sweep n={n}"]
        results = []
        for name, impl in impls:
            t, out = best_of(lambda: impl.strategy_sweep(coeffs, n), repeat)
            row.append(f"{name} {t * 1e3:9.2f} ms")
            results.append((int(out[0]), int(out[1])))
        assert len(set(results)) == 1, results
        print("  ".join(row))


def bench_rank(impls, repeat):
    rng = np.random.default_rng(1)
    for size in (10, 20, 40):
        mats = [(rng.integers(-4, 5, (size, 6)) @ rng.integers(-4, 5, (6, size))).astype(np.int64)
                for _ in range(200)]
        row = [f"rank_mod_primes {size}x{size} x200"]
        results = []
        for name, impl in impls:
            t, out = best_of(lambda: [impl.rank_mod_primes(m, size, _PRIMES) for m in mats], repeat)
            row.append(f"{name} {t * 1e3:9.2f} ms")
            results.append(tuple(out))
        assert len(set(results)) == 1
        print("  ".join(row))


def bench_dd(backend):
    code = ("import time; from bellpoly import polytope;"
            "vs = polytope.ti_vertices(4); t = time.perf_counter();"
            "fl = polytope.facet_enum(vs); print(len(fl), time.perf_counter() - t)")
    env = dict(os.environ, BELLPOLY_BACKEND=backend)
    t = time.perf_counter()
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    wall = time.perf_counter() - t
    count, inner = out.stdout.split()
    return int(count), float(inner), wall


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-dd", action="store_true", help="skip the n=4 facet enumeration")
    args = ap.parse_args(argv)

    numpy_impl, numba_impl = get_impl("numpy"), get_impl("numba")
    t = time.perf_counter()
    numba_impl.strategy_sweep(np.ones(6, dtype=np.int64), 3)
    numba_impl.rank_mod_primes(np.eye(3, dtype=np.int64), 3, _PRIMES)
    print(f"numba compile/warm-up: {time.perf_counter() - t:.2f} s")
    impls = [("numpy", numpy_impl), ("numba", numba_impl)]
    bench_sweep(impls, args.repeat)
    bench_rank(impls, args.repeat)
    if not args.skip_dd:
        for backend in ("numpy", "numba"):
            count, inner, wall = bench_dd(backend)
            print(f"facet_enum n=4 [{backend}]: {count} facets, {inner:.2f} s "
                  f"(process wall {wall:.2f} s incl. import/compile)")


if __name__ == "__main__":
    main()
