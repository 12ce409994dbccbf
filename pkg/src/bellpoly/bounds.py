"""Exact classical and nonsignalling bounds of TI inequalities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import kernels
from .core import (
    DeterministicStrategy,
    SizeError,
    TIInequality,
    format_fraction,
    full_correlators_array,
    strategy_array,
    ternary_table,
)
from .lp import LPError, solve_standard_form

MAX_CLASSICAL_PARTIES = 8
MAX_NS_PARTIES = 5


@dataclass
class BoundsRecord:
    beta_c: Fraction
    beta_n: Fraction | None = None
    beta_q: float | None = None
    beta_q_ti: float | None = None
    classical_witness: int | None = None          # strategy ID
    ns_witness: list[Fraction] | None = None      # full correlator vector
    notes: list[str] = field(default_factory=list)

    def check(self, tol: float = 1e-6) -> None:
        if self.beta_n is not None and self.beta_c > self.beta_n:
            raise AssertionError("beta_C > beta_N")
        if self.beta_q is not None and self.beta_n is not None:
            if not float(self.beta_c) - tol <= self.beta_q <= float(self.beta_n) + tol:
                raise AssertionError("beta_Q outside [beta_C, beta_N]")
        if self.beta_q is not None and self.beta_q_ti is not None:
            if self.beta_q_ti > self.beta_q + tol:
                raise AssertionError("beta_Q^TI exceeds beta_Q")


def _integer_coeffs(q: TIInequality) -> tuple[np.ndarray, int]:
    c = q.coefficients()
    den = math.lcm(*(x.denominator for x in c))
    return np.array([int(x * den) for x in c], dtype=np.int64), den


def classical_bound(q: TIInequality) -> tuple[Fraction, DeterministicStrategy]:
    """``-min`` of the Bell expression over all deterministic strategies, with an argmin."""
    if q.n > MAX_CLASSICAL_PARTIES:
        raise SizeError(f"classical_bound supports n <= {MAX_CLASSICAL_PARTIES}")
    coeffs, den = _integer_coeffs(q)
    best, sid = kernels.strategy_sweep(coeffs, q.n)
    return Fraction(-int(best), den), DeterministicStrategy.from_id(q.n, int(sid))


def with_classical_bound(q: TIInequality) -> TIInequality:
    return q.with_beta_c(classical_bound(q)[0])


# --------------------------------------------------------------------------
# nonsignalling LP
# --------------------------------------------------------------------------

@dataclass
class NSCertificate:
    """Primal point and dual multipliers proving ``beta_N`` exactly.

    ``point`` is a full correlator vector satisfying every positivity
    constraint with Bell value ``-beta_n``; ``multipliers`` are nonnegative
    weights, one per constraint ``(settings, outcomes)``, whose combination of
    constraint rows equals the objective and whose sum is ``beta_n``.
    """

    n: int
    beta_n: Fraction
    point: list[Fraction]
    multipliers: dict[int, Fraction]   # constraint row -> weight (zeros omitted)

    def verify(self, q: TIInequality) -> bool:
        G = positivity_matrix(self.n)
        c = q.expand().full_vector()
        x = self.point
        # primal feasibility and value
        for row in G:
            if 1 + sum((int(g) * xi for g, xi in zip(row, x) if g), Fraction(0)) < 0:
                return False
        if sum((ci * xi for ci, xi in zip(c, x)), Fraction(0)) != -self.beta_n:
            return False
        # dual feasibility and value
        if any(w < 0 for w in self.multipliers.values()):
            return False
        comb = [Fraction(0)] * len(c)
        for r, w in self.multipliers.items():
            for j, g in enumerate(G[r]):
                if g:
                    comb[j] += w * int(g)
        if comb != c:
            return False
        return sum(self.multipliers.values(), Fraction(0)) == self.beta_n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "beta_n": format_fraction(self.beta_n),
            "point": [format_fraction(v) for v in self.point],
            "multipliers": {str(k): format_fraction(v) for k, v in sorted(self.multipliers.items())},
        }


@lru_cache(maxsize=None)
def positivity_matrix(n: int) -> np.ndarray:
    """Rows ``g`` with ``1 + g.x >= 0`` for each (settings, outcomes) pair.

    Row index ``r = settings_code * 2**n + outcome_code`` where bit ``i`` (party
    ``i``, most significant first) of settings selects observable 1 and of
    outcomes selects result ``-1``.  Columns follow the full correlator order.
    """
    if n > MAX_NS_PARTIES:
        raise SizeError(f"nonsignalling LP supports n <= {MAX_NS_PARTIES}")
    table = ternary_table(n)                          # (3^n - 1, n)
    rows = []
    for xs in range(2 ** n):
        x = [(xs >> (n - 1 - i)) & 1 for i in range(n)]
        for os_ in range(2 ** n):
            a = [1 - 2 * ((os_ >> (n - 1 - i)) & 1) for i in range(n)]
            row = np.ones(len(table), dtype=np.int64)
            for i in range(n):
                t = table[:, i]
                compatible = (t == 0) | (t == x[i] + 1)
                row = np.where(compatible, row * np.where(t == 0, 1, a[i]), 0)
            rows.append(row)
    G = np.array(rows, dtype=np.int64)
    G.setflags(write=False)
    return G


def _rotate_assignment_codes(n: int) -> np.ndarray:
    """Index of each full-correlator entry after shifting parties by one."""
    table = ternary_table(n)
    rot = np.roll(table, 1, axis=1)
    codes = (rot * (3 ** np.arange(n))).sum(axis=1)
    return codes - 1


def _rotate_constraint_rows(n: int) -> np.ndarray:
    idx = np.arange(4 ** n)
    xs, os_ = idx // 2 ** n, idx % 2 ** n

    def rot(bits):
        # party i -> i+1: MSB-first codes, so rotate right by one
        return (bits >> 1) | ((bits & 1) << (n - 1))

    return rot(xs) * 2 ** n + rot(os_)


def _orbits(perm: np.ndarray) -> list[list[int]]:
    seen = np.zeros(len(perm), dtype=bool)
    out = []
    for s in range(len(perm)):
        if seen[s]:
            continue
        orb, cur = [], s
        while not seen[cur]:
            seen[cur] = True
            orb.append(int(cur))
            cur = int(perm[cur])
        out.append(orb)
    return out


@lru_cache(maxsize=None)
def _reduced_system(n: int):
    G = positivity_matrix(n)
    var_orbits = _orbits(_rotate_assignment_codes(n))
    row_orbits = _orbits(_rotate_constraint_rows(n))
    H = np.zeros((len(row_orbits), len(var_orbits)), dtype=np.int64)
    for a, ro in enumerate(row_orbits):
        g = G[ro[0]]
        for b, vo in enumerate(var_orbits):
            H[a, b] = g[vo].sum()
    return H, var_orbits, row_orbits


def ns_bound(q: TIInequality, symmetric: bool = True) -> tuple[Fraction, NSCertificate]:
    """Maximal violation by nonsignalling correlations, exact, with a certificate.

    With ``symmetric`` the LP is solved over shift-invariant correlators only,
    which is exact because the objective and the feasible set are both
    invariant under the cyclic shift (average any optimum over the orbit).
    """
    n = q.n
    if n > MAX_NS_PARTIES:
        raise SizeError(f"ns_bound supports n <= {MAX_NS_PARTIES}")
    c = q.expand().full_vector()
    if symmetric:
        H, var_orbits, row_orbits = _reduced_system(n)
        c_red = [sum((c[s] for s in vo), Fraction(0)) for vo in var_orbits]
        # min 1.w  s.t.  H^T w = c_red, w >= 0   (dual of  min c.z  s.t.  H z >= -1)
        res = solve_standard_form(H.T.tolist(), c_red, [1] * H.shape[0])
        z = [-p for p in res.duals]
        point = [Fraction(0)] * len(c)
        for val, vo in zip(z, var_orbits):
            for s in vo:
                point[s] = val
        mult = {}
        for w, ro in zip(res.x, row_orbits):
            if w:
                for r in ro:
                    mult[r] = w / len(ro)
    else:
        G = positivity_matrix(n)
        res = solve_standard_form(G.T.tolist(), c, [1] * G.shape[0])
        point = [-p for p in res.duals]
        mult = {r: w for r, w in enumerate(res.x) if w}
    beta_n = res.value
    cert = NSCertificate(n, beta_n, point, mult)
    if beta_n < 0:
        raise LPError("negative nonsignalling bound; LP inconsistent")
    return beta_n, cert


def is_trivial(q: TIInequality) -> bool:
    """True when no nonsignalling correlation violates the inequality."""
    return ns_bound(q)[0] == classical_bound(q)[0]


def bounds_record(q: TIInequality) -> BoundsRecord:
    bc, strat = classical_bound(q)
    rec = BoundsRecord(beta_c=bc, classical_witness=strat.id)
    if q.n <= MAX_NS_PARTIES:
        bn, cert = ns_bound(q)
        rec.beta_n = bn
        rec.ns_witness = cert.point
        rec.notes.append("NS witness is a shift-invariant optimum; optimal points need not be unique")
    return rec


def strategy_full_vector(s: DeterministicStrategy) -> list[Fraction]:
    return [Fraction(int(v)) for v in full_correlators_array(s.as_array()[None])[0]]


__all__ = [
    "BoundsRecord", "NSCertificate", "classical_bound", "ns_bound", "is_trivial",
    "bounds_record", "positivity_matrix", "with_classical_bound", "strategy_array",
]
