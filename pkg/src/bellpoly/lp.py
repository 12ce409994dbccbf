"""Exact two-phase simplex over the rationals (Bland's rule)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class LPError(Exception):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class LPResult:
    value: Fraction
    x: list[Fraction]
    duals: list[Fraction]      # one multiplier per equality row; dropped redundant rows get 0
    basis: list[int]
    pivots: int


def _pivot(T: list[list[Fraction]], r: int, c: int) -> None:
    row = T[r]
    pv = row[c]
    if pv != 1:
        T[r] = row = [v / pv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b if b else a for a, b in zip(other, row)]


def _bland_loop(T, basis, ncols, cost_row, max_pivots):
    """Run primal simplex on tableau rows T[:-1] with objective row T[cost_row]."""
    m = len(basis)
    pivots = 0
    while True:
        obj = T[cost_row]
        enter = next((j for j in range(ncols) if obj[j] < 0), None)
        if enter is None:
            return pivots
        best, leave = None, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise Unbounded("objective unbounded below")
        _pivot(T, leave, enter)
        basis[leave] = enter
        pivots += 1
        if pivots > max_pivots:
            raise LPError("pivot limit exceeded")


def solve_standard_form(A: Sequence[Sequence], b: Sequence, c: Sequence,
                        max_pivots: int = 100_000) -> LPResult:
    """Minimise ``c.x`` subject to ``A x = b``, ``x >= 0`` in exact arithmetic."""
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    m, n = len(A), len(c)
    sign = []
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
            sign.append(-1)
        else:
            sign.append(1)
    # phase 1 tableau: [A | I | b], objective row last
    T = [A[i] + [Fraction(int(i == k)) for k in range(m)] + [b[i]] for i in range(m)]
    phase1 = [Fraction(0)] * (n + m + 1)
    for i in range(m):
        for j in range(n):
            phase1[j] -= T[i][j]
        phase1[-1] -= T[i][-1]
    T.append(phase1)
    basis = list(range(n, n + m))
    pivots = _bland_loop(T, basis, n + m, m, max_pivots)
    if T[m][-1] != 0:
        raise Infeasible(f"phase 1 optimum {-T[m][-1]} > 0")

    # drive artificials out of the basis, dropping redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if T[i][j] != 0), None)
            if col is None:
                continue
            _pivot(T, i, col)
            basis[i] = col
            pivots += 1
        keep.append(i)
    rows = [T[i][:n] + [T[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]

    obj = c + [Fraction(0)]
    for i, bv in enumerate(basis):
        cb = c[bv]
        if cb:
            obj = [o - cb * v for o, v in zip(obj, rows[i])]
    rows.append(obj)
    pivots += _bland_loop(rows, basis, n, len(basis), max_pivots)

    x = [Fraction(0)] * n
    for i, bv in enumerate(basis):
        x[bv] = rows[i][-1]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))

    # multipliers: solve B^T pi = c_B on the kept rows, then undo the row signs
    Bt = [[A[keep[r]][bv] for r in range(len(keep))] for bv in basis]
    pi_kept = _solve(Bt, [c[bv] for bv in basis])
    duals = [Fraction(0)] * m
    for r, i in enumerate(keep):
        duals[i] = pi_kept[r] * sign[i]
    return LPResult(value, x, duals, basis, pivots)


def _solve(M: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    k = len(M)
    aug = [list(row) + [v] for row, v in zip(M, rhs)]
    for col in range(k):
        piv = next(r for r in range(col, k) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][-1] for r in range(k)]
