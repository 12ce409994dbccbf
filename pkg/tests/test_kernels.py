"""Both kernel backends must agree bit for bit."""
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from bellpoly import kernels
from bellpoly.polytope import _PRIMES

numba_impl = pytest.importorskip("bellpoly.kernels._numba_impl")
numpy_impl = kernels.get_impl("numpy")


def fraction_rank(rows):
    m = [[Fraction(int(v)) for v in r] for r in rows]
    rank, cols = 0, len(m[0]) if m else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][c]:
                f = m[i][c] / m[rank][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def test_backend_flag():
    assert kernels.BACKEND in ("numba", "numpy")
    with pytest.raises(ValueError):
        kernels.get_impl("fortran")


@pytest.mark.parametrize("seed", range(6))
def test_rank_backends_agree_with_exact(seed):
    rng = np.random.default_rng(seed)
    r, c = rng.integers(2, 9, 2)
    k = rng.integers(1, min(r, c) + 1)
    rows = (rng.integers(-6, 7, (r, k)) @ rng.integers(-6, 7, (k, c))).astype(np.int64)
    exact = fraction_rank(rows)
    target = min(r, c)
    assert numpy_impl.rank_mod_primes(rows, target, _PRIMES) == exact
    assert numba_impl.rank_mod_primes(rows, target, _PRIMES) == exact


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_strategy_sweep_backends_agree(n):
    rng = np.random.default_rng(n)
    dim = 2 + 2 * (n // 2) + n - 1
    for _ in range(4):
        coeffs = rng.integers(-5, 6, dim).astype(np.int64)
        a = numpy_impl.strategy_sweep(coeffs, n)
        b = numba_impl.strategy_sweep(coeffs, n)
        assert (int(a[0]), int(a[1])) == (int(b[0]), int(b[1]))


def _facets_under(backend):
    code = ("import hashlib; from bellpoly import polytope, kernels;"
            "assert kernels.BACKEND == %r;"
            "fl = polytope.facet_enum(polytope.ti_vertices(4));"
            "print(hashlib.sha256(fl.array.tobytes()).hexdigest(), len(fl))" % backend)
    env = dict(os.environ, BELLPOLY_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_facet_enumeration_identical_across_backends():
    a, b = _facets_under("numpy"), _facets_under("numba")
    assert a == b
    assert a.endswith(" 1038")


def test_bad_backend_rejected():
    env = dict(os.environ, BELLPOLY_BACKEND="cuda")
    out = subprocess.run([sys.executable, "-c", "import bellpoly.kernels"], env=env, capture_output=True)
    assert out.returncode != 0
