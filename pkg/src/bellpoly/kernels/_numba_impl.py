"""numba versions of the kernels in :mod:`._numpy_impl`."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True)
def _modinv(a, p):
    # Fermat inverse, p prime
    result = 1
    e = p - 2
    base = a % p
    while e > 0:
        if e & 1:
            result = (result * base) % p
        base = (base * base) % p
        e >>= 1
    return result


@njit(cache=True)
def _rank_mod(work, nr, nc, p, target):
    rank = 0
    for col in range(nc):
        if rank == nr or rank >= target:
            break
        piv = -1
        for r in range(rank, nr):
            if work[r, col] != 0:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for c in range(nc):
                t = work[rank, c]
                work[rank, c] = work[piv, c]
                work[piv, c] = t
        inv = _modinv(work[rank, col], p)
        for c in range(col, nc):
            work[rank, c] = (work[rank, c] * inv) % p
        for r in range(rank + 1, nr):
            f = work[r, col]
            if f != 0:
                for c in range(col, nc):
                    work[r, c] = (work[r, c] - f * work[rank, c]) % p
        rank += 1
    return rank


@njit(cache=True)
def _rank_rows(rows, idx, nidx, target, primes, work):
    nc = rows.shape[1]
    best = 0
    for pi in range(primes.shape[0]):
        p = primes[pi]
        for r in range(nidx):
            for c in range(nc):
                work[r, c] = rows[idx[r], c] % p
        rk = _rank_mod(work, nidx, nc, p, target)
        if rk > best:
            best = rk
        if best >= target:
            break
    return best


@njit(cache=True)
def rank_mod_primes(rows, target, primes):
    idx = np.arange(rows.shape[0])
    work = np.empty(rows.shape, dtype=np.int64)
    return _rank_rows(rows, idx, rows.shape[0], target, primes, work)


@njit(cache=True)
def adjacent_pairs(Z, pos, neg, rows, d, primes):
    need = d - 2
    nw = Z.shape[1]
    cap = 1024
    out_p = np.empty(cap, dtype=np.int64)
    out_q = np.empty(cap, dtype=np.int64)
    count = 0
    idx = np.empty(rows.shape[0], dtype=np.int64)
    work = np.empty(rows.shape, dtype=np.int64)
    for a in range(pos.shape[0]):
        p = pos[a]
        for b in range(neg.shape[0]):
            q = neg[b]
            cnt = 0
            for w in range(nw):
                cnt += _popcount(Z[p, w] & Z[q, w])
            if cnt < need:
                continue
            nidx = 0
            for w in range(nw):
                word = Z[p, w] & Z[q, w]
                bit = 0
                while word != 0:
                    if word & np.uint64(1):
                        idx[nidx] = w * 64 + bit
                        nidx += 1
                    word >>= np.uint64(1)
                    bit += 1
            if _rank_rows(rows, idx, nidx, need, primes, work) == need:
                if count == cap:
                    cap *= 2
                    np2 = np.empty(cap, dtype=np.int64)
                    nq2 = np.empty(cap, dtype=np.int64)
                    np2[:count] = out_p[:count]
                    nq2[:count] = out_q[:count]
                    out_p, out_q = np2, nq2
                out_p[count] = p
                out_q[count] = q
                count += 1
    return out_p[:count].copy(), out_q[:count].copy()


@njit(cache=True)
def strategy_sweep(coeffs, n):
    # TI correlators computed on the fly from the strategy bits; no tables materialised
    h = n // 2
    total = 1 << (2 * n)
    o0 = np.empty(n, dtype=np.int64)
    o1 = np.empty(n, dtype=np.int64)
    best = np.iinfo(np.int64).max
    arg = -1
    for sid in range(total):
        for i in range(n):
            shift = 2 * (n - 1 - i)
            o0[i] = 1 - 2 * ((sid >> (shift + 1)) & 1)
            o1[i] = 1 - 2 * ((sid >> shift) & 1)
        s0 = 0
        s1 = 0
        for i in range(n):
            s0 += o0[i]
            s1 += o1[i]
        val = coeffs[0] * s0 + coeffs[1] * s1
        for k in range(1, h + 1):
            t00 = 0
            t11 = 0
            for m in range(n):
                t00 += o0[m] * o0[(m + k) % n]
                t11 += o1[m] * o1[(m + k) % n]
            val += coeffs[1 + k] * t00 + coeffs[n + h + k] * t11
        for k in range(1, n):
            t01 = 0
            for m in range(n):
                t01 += o0[m] * o1[(m + k) % n]
            val += coeffs[1 + h + k] * t01
        if val < best:
            best = val
            arg = sid
    return best, arg
