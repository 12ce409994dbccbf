"""Relabelling symmetries of TI inequalities and grouping of facets into classes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .core import TIInequality


@dataclass(frozen=True)
class SymmetryElement:
    """Composition ``reflect ∘ flip1 ∘ flip0 ∘ swap`` (swap applied first).

    ``even_sites`` is the optional extra relabelling (flip both observables at
    even-numbered parties), meaningful only for even ``n`` and ``alpha = beta = 0``.
    """

    swap_observables: bool = False
    flip0: bool = False
    flip1: bool = False
    reflect: bool = False
    even_sites: bool = False


IDENTITY = SymmetryElement()


def group_elements(extension: bool = False) -> list[SymmetryElement]:
    flags = [False, True]
    ext = flags if extension else [False]
    return [SymmetryElement(s, f0, f1, r, e)
            for s, f0, f1, r, e in itertools.product(flags, flags, flags, flags, ext)]


def _reverse_omega(omega):
    # omega_k <-> omega_{n-k}
    return tuple(reversed(omega))


def apply_symmetry(q: TIInequality, g: SymmetryElement) -> TIInequality:
    a, b, gam, om, eps = q.alpha, q.beta, q.gamma, q.omega, q.epsilon
    if g.swap_observables:
        a, b, gam, eps, om = b, a, eps, gam, _reverse_omega(om)
    if g.flip0:
        a, om = -a, tuple(-w for w in om)
    if g.flip1:
        b, om = -b, tuple(-w for w in om)
    if g.reflect:
        om = _reverse_omega(om)
    if g.even_sites:
        if q.n % 2 or a != 0 or b != 0:
            raise ValueError("even-site relabelling needs even n and alpha = beta = 0")
        odd = lambda seq: tuple(-x if k % 2 == 1 else x for k, x in enumerate(seq, start=1))  # noqa: E731
        gam, om, eps = odd(gam), odd(om), odd(eps)
    return TIInequality(q.n, a, b, gam, om, eps, q.beta_c)


def qualifies_for_extension(q: TIInequality) -> bool:
    return q.n % 2 == 0 and q.alpha == 0 and q.beta == 0


def orbit(q: TIInequality, extension: bool = False) -> list[TIInequality]:
    """Distinct images of ``q`` under the group (normalised coefficients)."""
    ext = extension and qualifies_for_extension(q)
    seen: dict[tuple, TIInequality] = {}
    for g in group_elements(ext):
        img = apply_symmetry(q, g).normalized()
        seen.setdefault(img.coefficients(), img)
    return list(seen.values())


def canonical_form(q: TIInequality, extension: bool = False) -> TIInequality:
    """Lexicographically smallest normalised coefficient tuple in the orbit of ``q``."""
    return min(orbit(q, extension), key=lambda x: x.coefficients())


@dataclass
class InequalityClass:
    representative: TIInequality
    members: list[int]          # indices into the facet list

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def beta_c(self) -> Fraction | None:
        return self.representative.beta_c


@dataclass
class ClassTable:
    n: int
    classes: list[InequalityClass]
    assignment: list[int]       # facet index -> class index
    extension: bool = False

    def __len__(self) -> int:
        return len(self.classes)

    def find(self, q: TIInequality) -> int | None:
        """Index of the class containing ``q`` (matched by canonical tuple), else None."""
        key = canonical_form(q.normalized(), self.extension).coefficients()
        for i, c in enumerate(self.classes):
            if c.representative.coefficients() == key:
                return i
        return None


def classify(facets, extension: bool = False) -> ClassTable:
    """Partition facets into orbits; classes ordered by (beta_c, canonical tuple).

    ``facets`` is a FacetList or any sequence of TIInequality.
    """
    items = list(getattr(facets, "facets", facets))
    if not items:
        return ClassTable(0, [], [], extension)
    n = items[0].n
    groups: dict[tuple, list[int]] = {}
    reps: dict[tuple, TIInequality] = {}
    for i, q in enumerate(items):
        rep = canonical_form(q.normalized(), extension)
        key = (rep.beta_c, rep.coefficients())
        groups.setdefault(key, []).append(i)
        reps.setdefault(key, rep)
    keys = sorted(groups, key=lambda k: (k[0] if k[0] is not None else Fraction(0), k[1]))
    classes = [InequalityClass(reps[k], groups[k]) for k in keys]
    assignment = [0] * len(items)
    for ci, c in enumerate(classes):
        for i in c.members:
            assignment[i] = ci
    return ClassTable(n, classes, assignment, extension)
