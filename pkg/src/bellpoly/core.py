"""Strategies, correlator vectors and translationally invariant (TI) inequalities.

Conventions used throughout the package:

* A deterministic strategy for ``n`` parties assigns an outcome ``+1`` or ``-1``
  to each of the two observables of each party.  Strategy IDs are the
  big-endian binary encoding of the ``2n`` outcome bits, party 1 first and
  observable 0 before observable 1; bit value 0 means ``+1``, 1 means ``-1``.
  ID 0 is therefore the all ``+1`` strategy.
* TI correlator vectors and TI inequality coefficients share the internal order
  ``(S0, S1, T00(1..h), T01(1..n-1), T11(1..h))`` with ``h = n // 2``.
* Full correlator vectors are indexed by the ternary little-endian code
  ``sum_i t_i 3**i`` (``t_i`` = 0 absent, 1 observable 0, 2 observable 1) minus
  one, so that the empty product is excluded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

MAX_STRATEGY_PARTIES = 12


class BellPolyError(Exception):
    """Base class for errors raised by this package."""


class SizeError(BellPolyError, ValueError):
    """A party count or matrix size is outside the supported range."""


class DimensionError(BellPolyError, ValueError):
    """Objects of mismatched dimension or degenerate geometry."""


def ti_dimension(n: int) -> int:
    return n + 1 + 2 * (n // 2)


def _check_n(n: int, lo: int = 2, hi: int = MAX_STRATEGY_PARTIES) -> None:
    if not isinstance(n, (int, np.integer)) or not lo <= n <= hi:
        raise SizeError(f"party count n={n!r} outside supported range [{lo}, {hi}]")


def to_fraction(x) -> Fraction:
    """Parse an exact rational: int, Fraction, or a ``"p/q"`` string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not x.is_integer():
            raise TypeError(f"refusing inexact float {x!r}; pass a 'p/q' string")
        return Fraction(int(x))
    raise TypeError(f"cannot interpret {x!r} as a rational")


def format_fraction(x: Fraction) -> str | int:
    """JSON/CSV form of a rational: plain int when integral, else ``"p/q"``."""
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# --------------------------------------------------------------------------
# strategies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DeterministicStrategy:
    n: int
    outcomes: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.outcomes) != self.n:
            raise DimensionError(f"expected {self.n} outcome pairs, got {len(self.outcomes)}")
        for pair in self.outcomes:
            if len(pair) != 2 or any(o not in (1, -1) for o in pair):
                raise ValueError(f"outcomes must be pairs of +1/-1, got {pair!r}")

    @classmethod
    def from_id(cls, n: int, sid: int) -> "DeterministicStrategy":
        _check_n(n)
        if not 0 <= sid < 4 ** n:
            raise ValueError(f"strategy id {sid} out of range for n={n}")
        return cls(n, tuple(tuple(int(o) for o in row) for row in strategy_array(n, [sid])[0]))

    @property
    def id(self) -> int:
        sid = 0
        for o0, o1 in self.outcomes:
            sid = (sid << 2) | ((o0 < 0) << 1) | (o1 < 0)
        return sid

    def as_array(self) -> np.ndarray:
        return np.array(self.outcomes, dtype=np.int64)

    def rotate(self, shift: int = 1) -> "DeterministicStrategy":
        """Relabel party i as party i + shift (mod n)."""
        k = shift % self.n
        return DeterministicStrategy(self.n, self.outcomes[-k:] + self.outcomes[:-k] if k else self.outcomes)

    def reflect(self) -> "DeterministicStrategy":
        return DeterministicStrategy(self.n, self.outcomes[::-1])


def strategy_array(n: int, ids: Iterable[int] | None = None) -> np.ndarray:
    """Outcome table of shape ``(count, n, 2)`` with entries +1/-1."""
    _check_n(n)
    if ids is None:
        sid = np.arange(4 ** n, dtype=np.int64)
    else:
        sid = np.asarray(list(ids), dtype=np.int64)
    shifts = np.arange(2 * n - 1, -1, -1, dtype=np.int64)
    bits = (sid[:, None] >> shifts[None, :]) & 1
    return (1 - 2 * bits).reshape(len(sid), n, 2)


def enumerate_strategies(n: int) -> list[DeterministicStrategy]:
    """All ``4**n`` deterministic strategies in ID order."""
    arr = strategy_array(n)
    return [DeterministicStrategy(n, tuple((int(a), int(b)) for a, b in row)) for row in arr]


# --------------------------------------------------------------------------
# correlator vectors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TICorrelatorVector:
    n: int
    s0: int
    s1: int
    t00: tuple[int, ...]
    t01: tuple[int, ...]
    t11: tuple[int, ...]

    def __post_init__(self):
        h = self.n // 2
        if len(self.t00) != h or len(self.t11) != h or len(self.t01) != self.n - 1:
            raise DimensionError("TI correlator component lengths do not match n")

    @classmethod
    def from_components(cls, n: int, comps: Sequence[int]) -> "TICorrelatorVector":
        h = n // 2
        comps = [int(c) for c in comps]
        if len(comps) != ti_dimension(n):
            raise DimensionError(f"expected {ti_dimension(n)} components, got {len(comps)}")
        return cls(n, comps[0], comps[1], tuple(comps[2:2 + h]),
                   tuple(comps[2 + h:1 + h + n]), tuple(comps[1 + h + n:]))

    def components(self) -> tuple[int, ...]:
        return (self.s0, self.s1) + self.t00 + self.t01 + self.t11

    @property
    def dim(self) -> int:
        return ti_dimension(self.n)


def ti_project_array(outcomes: np.ndarray) -> np.ndarray:
    """Vectorised TI projection of an outcome table ``(count, n, 2)``."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    n = outcomes.shape[1]
    h = n // 2
    o0, o1 = outcomes[:, :, 0], outcomes[:, :, 1]
    cols = [o0.sum(axis=1), o1.sum(axis=1)]
    cols += [(o0 * np.roll(o0, -k, axis=1)).sum(axis=1) for k in range(1, h + 1)]
    cols += [(o0 * np.roll(o1, -k, axis=1)).sum(axis=1) for k in range(1, n)]
    cols += [(o1 * np.roll(o1, -k, axis=1)).sum(axis=1) for k in range(1, h + 1)]
    return np.stack(cols, axis=1)


def ti_project(s: DeterministicStrategy) -> TICorrelatorVector:
    return TICorrelatorVector.from_components(s.n, ti_project_array(s.as_array()[None])[0])


@dataclass(frozen=True)
class NNCorrelatorVector:
    n: int
    s0: int
    s1: int
    t00_1: int
    t01_1: int
    t01_last: int
    t11_1: int

    def components(self) -> tuple[int, ...]:
        return (self.s0, self.s1, self.t00_1, self.t01_1, self.t01_last, self.t11_1)


def nn_indices(n: int) -> list[int]:
    """Positions of ``(S0, S1, T00(1), T01(1), T01(n-1), T11(1))`` in the TI order."""
    h = n // 2
    return [0, 1, 2, 2 + h, 2 + h + n - 2, 1 + h + n]


def nn_project(v: TICorrelatorVector) -> NNCorrelatorVector:
    if v.n < 3:
        raise SizeError("nearest-neighbour projection needs n >= 3")
    c = v.components()
    return NNCorrelatorVector(v.n, *(c[i] for i in nn_indices(v.n)))


@dataclass(frozen=True)
class FullCorrelatorVector:
    n: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != 3 ** self.n - 1:
            raise DimensionError(f"full correlator vector needs {3 ** self.n - 1} entries")

    def __getitem__(self, assignment: Sequence[int]) -> object:
        return self.entries[ternary_index(assignment) - 1]


def ternary_index(assignment: Sequence[int]) -> int:
    """Code of a per-party assignment (0 absent, 1 observable 0, 2 observable 1)."""
    return sum(int(t) * 3 ** i for i, t in enumerate(assignment))


def ternary_table(n: int) -> np.ndarray:
    """Row ``r`` holds the assignment of full-correlator entry ``r``; shape ``(3**n - 1, n)``."""
    codes = np.arange(1, 3 ** n)
    return np.stack([(codes // 3 ** i) % 3 for i in range(n)], axis=1)


def full_correlators_array(outcomes: np.ndarray) -> np.ndarray:
    """Full correlator entries for an outcome table, shape ``(count, 3**n - 1)``."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    count, n, _ = outcomes.shape
    table = ternary_table(n)
    # factor per party: 1 if absent, else the selected outcome
    ext = np.concatenate([np.ones((count, n, 1), dtype=np.int64), outcomes], axis=2)
    prod = np.ones((count, len(table)), dtype=np.int64)
    for i in range(n):
        prod *= ext[:, i, table[:, i]]
    return prod


def full_correlators(s: DeterministicStrategy) -> FullCorrelatorVector:
    row = full_correlators_array(s.as_array()[None])[0]
    return FullCorrelatorVector(s.n, tuple(int(x) for x in row))


# --------------------------------------------------------------------------
# inequalities
# --------------------------------------------------------------------------

def _gcd_normalize(values: Sequence[Fraction]) -> list[Fraction]:
    den = reduce(math.lcm, (v.denominator for v in values), 1)
    ints = [int(v * den) for v in values]
    g = reduce(math.gcd, ints, 0)
    if g == 0:
        return [Fraction(0)] * len(values)
    return [Fraction(i // g) for i in ints]


@dataclass(frozen=True)
class TIInequality:
    """``I + beta_c >= 0`` with ``I`` the TI combination of S_j and T_ij^(k)."""

    n: int
    alpha: Fraction
    beta: Fraction
    gamma: tuple[Fraction, ...]
    omega: tuple[Fraction, ...]
    epsilon: tuple[Fraction, ...]
    beta_c: Fraction | None = field(default=None)

    def __post_init__(self):
        _check_n(self.n)
        set_ = object.__setattr__
        set_(self, "alpha", to_fraction(self.alpha))
        set_(self, "beta", to_fraction(self.beta))
        set_(self, "gamma", tuple(to_fraction(x) for x in self.gamma))
        set_(self, "omega", tuple(to_fraction(x) for x in self.omega))
        set_(self, "epsilon", tuple(to_fraction(x) for x in self.epsilon))
        if self.beta_c is not None:
            set_(self, "beta_c", to_fraction(self.beta_c))
        h = self.n // 2
        if len(self.gamma) != h or len(self.epsilon) != h or len(self.omega) != self.n - 1:
            raise DimensionError(
                f"n={self.n} needs {h} gamma, {self.n - 1} omega and {h} epsilon coefficients")

    # construction helpers -------------------------------------------------
    @classmethod
    def from_coefficients(cls, n: int, coeffs: Sequence, beta_c=None) -> "TIInequality":
        """Build from the internal order ``(alpha, beta, gamma.., omega.., epsilon..)``."""
        h = n // 2
        coeffs = list(coeffs)
        if len(coeffs) != ti_dimension(n):
            raise DimensionError(f"expected {ti_dimension(n)} coefficients, got {len(coeffs)}")
        return cls(n, coeffs[0], coeffs[1], tuple(coeffs[2:2 + h]),
                   tuple(coeffs[2 + h:1 + h + n]), tuple(coeffs[1 + h + n:]), beta_c)

    @classmethod
    def zero(cls, n: int) -> "TIInequality":
        return cls.from_coefficients(n, [0] * ti_dimension(n), 0)

    @classmethod
    def nearest_neighbour(cls, n: int, alpha, beta, gamma, omega_1, omega_last, epsilon,
                          beta_c=None) -> "TIInequality":
        """Inequality using only S_j, T00(1), T01(1), T01(n-1), T11(1)."""
        h = n // 2
        g = [0] * h
        e = [0] * h
        w = [0] * (n - 1)
        g[0], e[0] = gamma, epsilon
        w[0] = omega_1
        w[n - 2] = to_fraction(w[n - 2]) + to_fraction(omega_last)
        return cls(n, alpha, beta, tuple(g), tuple(w), tuple(e), beta_c)

    def coefficients(self) -> tuple[Fraction, ...]:
        return (self.alpha, self.beta) + self.gamma + self.omega + self.epsilon

    def with_beta_c(self, beta_c) -> "TIInequality":
        return TIInequality(self.n, self.alpha, self.beta, self.gamma, self.omega,
                            self.epsilon, beta_c)

    def normalized(self) -> "TIInequality":
        """Integer coefficients (and bound) with collective gcd 1."""
        vals = list(self.coefficients())
        if self.beta_c is not None:
            vals.append(self.beta_c)
        vals = _gcd_normalize(vals)
        bc = vals.pop() if self.beta_c is not None else None
        return TIInequality.from_coefficients(self.n, vals, bc)

    def integer_coefficients(self) -> np.ndarray:
        c = self.coefficients()
        if any(x.denominator != 1 for x in c):
            raise ValueError("coefficients are not integral; call normalized() first")
        return np.array([int(x) for x in c], dtype=np.int64)

    @property
    def is_nearest_neighbour(self) -> bool:
        n, h = self.n, self.n // 2
        far = list(self.gamma[1:]) + list(self.epsilon[1:]) + list(self.omega[1:n - 2])
        return all(x == 0 for x in far) and h >= 1

    # n=4 report layout -------------------------------------------------------
    TABLE2_LABELS = ("alpha", "beta", "gamma1", "omega1", "omega3", "epsilon1",
                     "gamma2", "omega2", "epsilon2")

    @classmethod
    def from_table2_row(cls, coeffs: Sequence, beta_c=None) -> "TIInequality":
        """N=4 coefficients in the column order (α, β, γ1, ω1, ω3, ε1, γ2, ω2, ε2)."""
        a, b, g1, w1, w3, e1, g2, w2, e2 = coeffs
        return cls(4, a, b, (g1, g2), (w1, w2, w3), (e1, e2), beta_c)

    def table2_row(self) -> tuple[Fraction, ...]:
        if self.n != 4:
            raise DimensionError("the n=4 report layout exists only for n=4")
        g, w, e = self.gamma, self.omega, self.epsilon
        return (self.alpha, self.beta, g[0], w[0], w[2], e[0], g[1], w[1], e[1])

    # serialisation ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": format_fraction(self.alpha),
            "beta": format_fraction(self.beta),
            "gamma": [format_fraction(x) for x in self.gamma],
            "omega": [format_fraction(x) for x in self.omega],
            "epsilon": [format_fraction(x) for x in self.epsilon],
            "beta_c": None if self.beta_c is None else format_fraction(self.beta_c),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TIInequality":
        return cls(int(d["n"]), d["alpha"], d["beta"], tuple(d["gamma"]), tuple(d["omega"]),
                   tuple(d["epsilon"]), d.get("beta_c"))

    def __str__(self) -> str:
        c = ", ".join(str(x) for x in self.coefficients())
        return f"TIInequality(n={self.n}, [{c}], beta_c={self.beta_c})"

    # expansion to the general two-body form ----------------------------------
    def expand(self) -> "TwoBodyCoefficients":
        """Coefficients of every one- and two-body mean value after undoing the cycles."""
        n = self.n
        one = np.empty((n, 2), dtype=object)
        one[:, 0] = self.alpha
        one[:, 1] = self.beta
        two = np.empty((n, n, 2, 2), dtype=object)
        two.fill(Fraction(0))
        for k, g in enumerate(self.gamma, start=1):
            for m in range(n):
                i, j = sorted((m, (m + k) % n))
                two[i, j, 0, 0] += g
        for k, e in enumerate(self.epsilon, start=1):
            for m in range(n):
                i, j = sorted((m, (m + k) % n))
                two[i, j, 1, 1] += e
        for k, w in enumerate(self.omega, start=1):
            for m in range(n):
                j = (m + k) % n
                if m < j:
                    two[m, j, 0, 1] += w
                else:
                    two[j, m, 1, 0] += w
        return TwoBodyCoefficients(n, one, two)


@dataclass(frozen=True)
class TwoBodyCoefficients:
    """General two-body form: ``one[i, a]`` multiplies <M_a^(i)>, and ``two[i, j, a, b]``
    (``i < j``) multiplies <M_a^(i) M_b^(j)>."""

    n: int
    one: np.ndarray
    two: np.ndarray

    def terms(self):
        """Yield ``(sites, observables, coefficient)`` for every nonzero term."""
        n = self.n
        for i in range(n):
            for a in range(2):
                if self.one[i, a] != 0:
                    yield (i,), (a,), self.one[i, a]
        for i in range(n):
            for j in range(i + 1, n):
                for a in range(2):
                    for b in range(2):
                        c = self.two[i, j, a, b]
                        if c != 0:
                            yield (i, j), (a, b), c

    def full_vector(self) -> list[Fraction]:
        """Coefficient vector over the full correlator index (length ``3**n - 1``)."""
        out = [Fraction(0)] * (3 ** self.n - 1)
        for sites, obs, c in self.terms():
            assignment = [0] * self.n
            for s, o in zip(sites, obs):
                assignment[s] = o + 1
            out[ternary_index(assignment) - 1] += Fraction(c)
        return out

    def two_body_vector(self) -> list[Fraction]:
        """Coefficients in the ``2n**2``-dimensional one/two-body coordinates."""
        return [Fraction(c) for c in two_body_layout(self.n, self.one, self.two)]


def two_body_layout(n: int, one, two) -> list:
    """Flatten (one, two) into 2n one-body entries followed by 4*C(n,2) pair entries."""
    flat = [one[i, a] for i in range(n) for a in range(2)]
    for i in range(n):
        for j in range(i + 1, n):
            flat.extend(two[i, j, a, b] for a in range(2) for b in range(2))
    return flat


def two_body_correlators_array(outcomes: np.ndarray) -> np.ndarray:
    """One- and two-body part of each strategy, same layout as :func:`two_body_layout`."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    count, n, _ = outcomes.shape
    cols = [outcomes[:, i, a] for i in range(n) for a in range(2)]
    for i in range(n):
        for j in range(i + 1, n):
            cols.extend(outcomes[:, i, a] * outcomes[:, j, b] for a in range(2) for b in range(2))
    return np.stack(cols, axis=1)


def evaluate(q: TIInequality, v: TICorrelatorVector) -> Fraction:
    """Value of the Bell expression ``I`` (without the bound) at ``v``."""
    if q.n != v.n:
        raise DimensionError(f"inequality has n={q.n} but vector has n={v.n}")
    return sum((c * x for c, x in zip(q.coefficients(), v.components())), Fraction(0))
