"""The TI local polytope: vertices, Pólya counting and exact facet enumeration."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import kernels
from .core import (
    DimensionError,
    SizeError,
    TICorrelatorVector,
    TIInequality,
    nn_indices,
    strategy_array,
    ti_dimension,
    ti_project_array,
    two_body_correlators_array,
)

log = logging.getLogger(__name__)

MAX_VERTEX_PARTIES = 8
# largest n for which the exact facet enumeration is attempted
MAX_FACET_PARTIES = 5

# primes below 2**31 so that products of residues fit in int64
_PRIMES = np.array([2147483647, 2147483629, 2147483587, 2147483579, 2147483563], dtype=np.int64)

# outcome lists (one pair per party) that project to the same TI vertex at n=4
N4_COINCIDENCES = (
    (((1, 1), (-1, 1), (1, -1), (-1, -1)), ((1, 1), (-1, -1), (1, -1), (-1, 1))),
    (((1, 1), (1, -1), (-1, 1), (-1, -1)), ((1, 1), (-1, -1), (-1, 1), (1, -1))),
)


def euler_phi(k: int) -> int:
    result, m, p = k, k, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def polya_bound(n: int) -> int:
    """Number of 4-colourings of an n-cycle up to rotation."""
    if n < 1:
        raise SizeError("n must be positive")
    total = sum(euler_phi(d) * 4 ** (n // d) for d in range(1, n + 1) if n % d == 0)
    assert total % n == 0
    return total // n


def strategy_id(outcomes) -> int:
    sid = 0
    for o0, o1 in outcomes:
        sid = (sid << 2) | ((o0 < 0) << 1) | (o1 < 0)
    return sid


# --------------------------------------------------------------------------
# vertices
# --------------------------------------------------------------------------

@dataclass
class VertexSet:
    n: int
    vertices: np.ndarray                  # (V, dim) int64, lexicographically sorted
    provenance: list[list[int]]           # strategy IDs per vertex
    coordinates: str = "ti"               # "ti" or "nn"

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def vector(self, i: int) -> TICorrelatorVector:
        if self.coordinates != "ti":
            raise DimensionError("only TI coordinates map to TICorrelatorVector")
        return TICorrelatorVector.from_components(self.n, self.vertices[i])

    def index_of(self, comps) -> int:
        key = tuple(int(c) for c in comps)
        return self._lookup[key]

    @cached_property
    def _lookup(self) -> dict:
        return {tuple(int(c) for c in v): i for i, v in enumerate(self.vertices)}

    def non_rotational_merges(self) -> list[list[int]]:
        """Provenance lists that contain strategies not related by a cyclic shift."""
        out = []
        for ids in self.provenance:
            orbits = {_rotation_class(self.n, s) for s in ids}
            if len(orbits) > 1:
                out.append(ids)
        return out


def _rotation_class(n: int, sid: int) -> int:
    pairs = [(sid >> (2 * (n - 1 - i))) & 3 for i in range(n)]
    best = None
    for k in range(n):
        rot = pairs[k:] + pairs[:k]
        code = 0
        for p in rot:
            code = (code << 2) | p
        best = code if best is None else min(best, code)
    return best


def _dedupe(points: np.ndarray) -> tuple[np.ndarray, list[list[int]]]:
    uniq, inverse = np.unique(points, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    prov: list[list[int]] = [[] for _ in range(len(uniq))]
    for sid, v in enumerate(inverse):
        prov[v].append(sid)
    return uniq.astype(np.int64), prov


def ti_vertices(n: int) -> VertexSet:
    """Distinct TI projections of all deterministic strategies."""
    if n == 6:
        raise SizeError("n=6 is intractable per source; refusing to enumerate")
    if not 3 <= n <= MAX_VERTEX_PARTIES:
        raise SizeError(f"ti_vertices supports 3 <= n <= {MAX_VERTEX_PARTIES}, got {n}")
    pts = ti_project_array(strategy_array(n))
    uniq, prov = _dedupe(pts)
    return VertexSet(n, uniq, prov)


def nn_vertices(n: int) -> VertexSet:
    if n < 3:
        raise SizeError("nearest-neighbour polytope needs n >= 3")
    if n > MAX_VERTEX_PARTIES:
        raise SizeError(f"nn_vertices supports n <= {MAX_VERTEX_PARTIES}")
    pts = ti_project_array(strategy_array(n))[:, nn_indices(n)]
    uniq, prov = _dedupe(pts)
    return VertexSet(n, uniq, prov, coordinates="nn")


# --------------------------------------------------------------------------
# exact rational helpers
# --------------------------------------------------------------------------

def exact_rank(rows) -> int:
    """Rank over the rationals by fraction-free elimination on Python ints."""
    m = [[int(x) for x in r] for r in rows]
    if not m:
        return 0
    ncol = len(m[0])
    rank, prev = 0, 1
    for col in range(ncol):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pv = m[rank][col]
        for r in range(rank + 1, len(m)):
            f = m[r][col]
            m[r] = [(pv * m[r][c] - f * m[rank][c]) // prev for c in range(ncol)]
        prev = pv
        rank += 1
        if rank == len(m):
            break
    return rank


def _solve_exact(A: list[list[int]]) -> list[list[Fraction]]:
    """Inverse of a square integer matrix as Fractions (Gauss-Jordan)."""
    d = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(d)]
         for i, row in enumerate(A)]
    for col in range(d):
        piv = next(r for r in range(col, d) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [x / pv for x in M[col]]
        for r in range(d):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[d:] for row in M]


def _primes_for(rows: np.ndarray, r: int) -> np.ndarray:
    """Enough primes that their product exceeds any nonzero minor of size <= r."""
    norms = np.sort(np.sqrt((rows.astype(float) ** 2).sum(axis=1)))[::-1]
    log_bound = float(np.log(np.maximum(norms[:r], 1.0)).sum())
    k, acc = 0, 0.0
    while acc <= log_bound + 1.0:
        if k == len(_PRIMES):
            raise OverflowError("minor bound too large for the prime table")
        acc += math.log(int(_PRIMES[k]))
        k += 1
    return _PRIMES[:k].copy()


# --------------------------------------------------------------------------
# double description
# --------------------------------------------------------------------------

@dataclass
class DDStats:
    insertions: int = 0
    max_rays: int = 0
    ray_counts: list[int] = field(default_factory=list)


def _gcd_rows(R: np.ndarray) -> np.ndarray:
    g = np.gcd.reduce(R, axis=1)
    g[g == 0] = 1
    return R // g[:, None]


def double_description(points: np.ndarray, stats: DDStats | None = None) -> np.ndarray:
    """Facets of conv(points) as integer rows ``(b, a)`` with ``b + a.v >= 0``.

    ``points`` must be integer and affinely span their ambient space.  The cone
    ``{x : (1, v).x >= 0}`` is built by adding one vertex constraint at a time in
    lexicographic order; two rays are adjacent when the constraints tight at
    both have rank ``d - 2`` (rank computed exactly, see ``_primes_for``).
    """
    pts = np.asarray(points, dtype=np.int64)
    order = np.lexsort(pts.T[::-1])
    rows = np.concatenate([np.ones((len(pts), 1), dtype=np.int64), pts], axis=1)[order]
    m, d = rows.shape
    rk = exact_rank(rows)
    if rk < d:
        raise DimensionError(f"points span an affine space of dimension {rk - 1}, "
                             f"deficit {d - rk} below the ambient {d - 1}")
    primes = _primes_for(rows, d - 2)

    basis: list[int] = []
    for i in range(m):
        if exact_rank(rows[basis + [i]]) == len(basis) + 1:
            basis.append(i)
            if len(basis) == d:
                break
    inv = _solve_exact([[int(x) for x in rows[i]] for i in basis])
    R = []
    for j in range(d):
        col = [inv[r][j] for r in range(d)]
        den = math.lcm(*(x.denominator for x in col))
        R.append([int(x * den) for x in col])
    R = _gcd_rows(np.array(R, dtype=np.int64))

    nwords = (m + 63) // 64
    Z = np.zeros((d, nwords), dtype=np.uint64)
    for j in range(d):
        for k, i in enumerate(basis):
            if k != j:
                Z[j, i // 64] |= np.uint64(1) << np.uint64(i % 64)

    stats = stats if stats is not None else DDStats()
    in_basis = set(basis)
    for i in range(m):
        if i in in_basis:
            continue
        a = rows[i]
        bound = int(np.abs(R).max()) * int(np.abs(a).max()) * d
        if bound >= 1 << 62:
            raise OverflowError("ray coordinates too large for int64 arithmetic")
        s = R @ a
        pos = np.nonzero(s > 0)[0]
        neg = np.nonzero(s < 0)[0]
        zer = np.nonzero(s == 0)[0]
        P, Q = kernels.adjacent_pairs(Z, pos, neg, rows, d, primes)
        if len(P):
            sp, sq = s[P], s[Q]
            if int(np.abs(sp).max()) * int(np.abs(R).max()) * 2 >= 1 << 62:
                raise OverflowError("ray combination overflows int64")
            new = _gcd_rows(sp[:, None] * R[Q] - sq[:, None] * R[P])
            newZ = Z[P] & Z[Q]
        else:
            new = np.empty((0, d), dtype=np.int64)
            newZ = np.empty((0, nwords), dtype=np.uint64)
        bit = np.uint64(1) << np.uint64(i % 64)
        Zz = Z[zer].copy()
        Zz[:, i // 64] |= bit
        newZ[:, i // 64] |= bit
        R = np.concatenate([R[pos], R[zer], new])
        Z = np.concatenate([Z[pos], Zz, newZ])
        stats.insertions += 1
        stats.ray_counts.append(len(R))
        stats.max_rays = max(stats.max_rays, len(R))
    return R


# --------------------------------------------------------------------------
# facets
# --------------------------------------------------------------------------

@dataclass
class FacetList:
    n: int
    facets: list[TIInequality]
    saturating: list[frozenset[int]]     # vertex indices into the VertexSet
    array: np.ndarray                    # (F, 1 + dim) int rows (beta_c, coefficients)
    coordinates: str = "ti"
    stats: DDStats | None = None

    def __len__(self) -> int:
        return len(self.facets)


def _facet_inequality(n: int, row: np.ndarray, coordinates: str) -> TIInequality:
    b, coeffs = int(row[0]), [int(x) for x in row[1:]]
    if coordinates == "nn":
        alpha, beta, g, w1, wl, e = coeffs
        return TIInequality.nearest_neighbour(n, alpha, beta, g, w1, wl, e, b)
    return TIInequality.from_coefficients(n, coeffs, b)


def _build_facets(vs: VertexSet, rows: np.ndarray, stats: DDStats | None) -> FacetList:
    # canonical order: sort by (beta_c, coefficients)
    rows = rows[np.lexsort(rows.T[::-1])]
    slack = rows[:, :1] + rows[:, 1:] @ vs.vertices.T
    if (slack < 0).any():
        raise AssertionError("facet enumeration produced an invalid inequality")
    sat = [frozenset(np.nonzero(r == 0)[0].tolist()) for r in slack]
    facets = [_facet_inequality(vs.n, r, vs.coordinates) for r in rows]
    return FacetList(vs.n, facets, sat, rows, vs.coordinates, stats)


def facet_enum(vs: VertexSet) -> FacetList:
    """All facets of the convex hull of a vertex set, exact and normalised."""
    if vs.coordinates == "ti" and vs.n > MAX_FACET_PARTIES:
        raise SizeError(f"facet enumeration supported for n <= {MAX_FACET_PARTIES}")
    stats = DDStats()
    rows = double_description(vs.vertices, stats)
    log.info("n=%d: %d facets, peak %d rays", vs.n, len(rows), stats.max_rays)
    return _build_facets(vs, rows, stats)


def facet_enum_nn(n: int) -> FacetList:
    """Facets of the 6-dimensional nearest-neighbour projection."""
    return facet_enum(nn_vertices(n))


def extremality_audit(vs: VertexSet, fl: FacetList) -> list[int]:
    """Indices of points that lie on fewer than ``dim`` affinely independent facets.

    Every such point is not a vertex of the polytope (it is interior to a face).
    """
    dim = vs.dim
    on = [[] for _ in range(len(vs))]
    for f, sat in enumerate(fl.saturating):
        for v in sat:
            on[v].append(f)
    bad = []
    for v, fs in enumerate(on):
        if len(fs) < dim or exact_rank(fl.array[fs, 1:]) < dim:
            bad.append(v)
    return bad


def is_tight(vs: VertexSet, row: np.ndarray) -> bool:
    """True when the vertices saturating ``row`` affinely span a hyperplane."""
    slack = row[0] + vs.vertices @ row[1:]
    tight = vs.vertices[slack == 0]
    if (slack < 0).any() or len(tight) == 0:
        return False
    homog = np.concatenate([np.ones((len(tight), 1), dtype=np.int64), tight], axis=1)
    return exact_rank(homog) == vs.dim


# --------------------------------------------------------------------------
# facets of the two-body polytope
# --------------------------------------------------------------------------

def two_body_vertices(n: int) -> np.ndarray:
    """One- and two-body parts of all strategies, shape ``(4**n, 2 n**2)``."""
    return two_body_correlators_array(strategy_array(n))


def is_facet_of_p2(q: TIInequality) -> bool:
    """Whether the TI inequality, expanded to the general two-body form, is a facet of P_N^2."""
    if q.beta_c is None:
        raise ValueError("is_facet_of_p2 needs beta_c")
    if q.n > 6:
        raise SizeError("is_facet_of_p2 supports n <= 6")
    n = q.n
    coeffs = q.expand().two_body_vector()
    den = math.lcm(*(c.denominator for c in coeffs), q.beta_c.denominator)
    a = np.array([int(c * den) for c in coeffs], dtype=np.int64)
    b = int(q.beta_c * den)
    V = two_body_vertices(n)
    slack = b + V @ a
    if (slack < 0).any():
        raise ValueError("inequality is not valid for the local polytope")
    tight = V[slack == 0]
    homog = np.concatenate([np.ones((len(tight), 1), dtype=np.int64), tight], axis=1)
    primes = _primes_for(homog, homog.shape[1])
    target = 2 * n * n
    # modular ranks bound the rational rank from below; exact with these primes
    return int(kernels.rank_mod_primes(homog, target, primes)) == target
