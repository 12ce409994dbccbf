"""Reference implementations in plain numpy."""
from __future__ import annotations

import numpy as np


def rank_mod_primes(rows: np.ndarray, target: int, primes: np.ndarray) -> int:
    """Rank of an integer matrix, taking the maximum of its ranks modulo ``primes``.

    Returns early once ``target`` is reached.  The result equals the rational
    rank whenever the product of the primes exceeds every nonzero minor of
    size ``<= target`` (the caller chooses primes from a Hadamard bound).
    """
    best = 0
    for p in primes:
        p = int(p)
        w = np.mod(rows, p).astype(np.int64)
        nr, nc = w.shape
        rank = 0
        for col in range(nc):
            if rank == nr:
                break
            nz = np.nonzero(w[rank:, col])[0]
            if nz.size == 0:
                continue
            piv = rank + nz[0]
            if piv != rank:
                w[[rank, piv]] = w[[piv, rank]]
            inv = pow(int(w[rank, col]), p - 2, p)
            w[rank] = (w[rank] * inv) % p
            below = w[rank + 1:, col].copy()
            if below.any():
                w[rank + 1:] = (w[rank + 1:] - np.outer(below, w[rank]) % p) % p
            rank += 1
        best = max(best, rank)
        if best >= target:
            break
    return best


def _bit_indices(words: np.ndarray) -> np.ndarray:
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    return np.nonzero(bits)[0]


def adjacent_pairs(Z, pos, neg, rows, d, primes):
    """Pairs ``(p, q)`` of rays on opposite sides of the new constraint that are adjacent.

    ``Z`` holds the zero sets as little-endian bit words, ``rows`` the constraint
    matrix; adjacency is the algebraic test rank(rows[Z_p & Z_q]) == d - 2.
    """
    out_p, out_q = [], []
    need = d - 2
    if len(pos) == 0 or len(neg) == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    Zn = Z[neg]
    for p in pos:
        inter = Zn & Z[p]
        cnt = np.bitwise_count(inter).sum(axis=1)
        for c in np.nonzero(cnt >= need)[0]:
            idx = _bit_indices(inter[c])
            if rank_mod_primes(rows[idx], need, primes) == need:
                out_p.append(p)
                out_q.append(neg[c])
    return np.asarray(out_p, dtype=np.int64), np.asarray(out_q, dtype=np.int64)


def strategy_sweep(coeffs: np.ndarray, n: int):
    """Minimum of the TI expression over all ``4**n`` strategies and the first argmin ID."""
    from ..core import strategy_array, ti_project_array

    best, arg = None, -1
    chunk = 1 << 16
    total = 4 ** n
    for start in range(0, total, chunk):
        ids = range(start, min(total, start + chunk))
        vals = ti_project_array(strategy_array(n, ids)) @ coeffs
        i = int(np.argmin(vals))
        if best is None or vals[i] < best:
            best, arg = int(vals[i]), start + i
    return best, arg
