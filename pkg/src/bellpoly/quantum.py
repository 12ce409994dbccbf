"""Qubit Bell operators, maximal-violation search and state diagnostics."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse

from .core import DimensionError, SizeError, TIInequality

log = logging.getLogger(__name__)

Mode = Literal["free", "ti"]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])

MAX_QUBITS = 8


def observable(phi: float) -> np.ndarray:
    """``cos(phi) Z + sin(phi) X``."""
    return np.cos(phi) * SIGMA_Z + np.sin(phi) * SIGMA_X


@dataclass
class MeasurementAngles:
    phi: np.ndarray  # shape (n, 2)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.ndim != 2 or self.phi.shape[1] != 2:
            raise DimensionError("angles must have shape (n, 2)")

    @classmethod
    def shared(cls, n: int, phi0: float, phi1: float) -> "MeasurementAngles":
        return cls(np.tile([phi0, phi1], (n, 1)))

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def is_shared(self) -> bool:
        return bool(np.allclose(self.phi, self.phi[0]))

    def to_list(self) -> list[list[float]]:
        return self.phi.tolist()


@dataclass
class ViolationResult:
    beta: float
    angles: MeasurementAngles
    state: np.ndarray
    mode: str
    starts: int = 0
    converged: bool = True
    history: list[float] = field(default_factory=list)   # best-so-far after each start

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "mode": self.mode,
            "angles": self.angles.to_list(),
            "state_real": np.real(self.state).tolist(),
            "state_imag": np.imag(self.state).tolist(),
            "starts": self.starts,
            "converged": self.converged,
        }


# --------------------------------------------------------------------------
# operators on n qubits
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _site_paulis(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Real Z_i and X_i embedded at every site, shape (n, 2**n, 2**n) each."""
    dim = 2 ** n
    Zs = np.empty((n, dim, dim))
    Xs = np.empty((n, dim, dim))
    for i in range(n):
        left, right = np.eye(2 ** i), np.eye(2 ** (n - i - 1))
        Zs[i] = np.kron(np.kron(left, SIGMA_Z), right)
        Xs[i] = np.kron(np.kron(left, SIGMA_X), right)
    Zs.setflags(write=False)
    Xs.setflags(write=False)
    return Zs, Xs


@lru_cache(maxsize=None)
def _pair_basis(n: int) -> np.ndarray:
    """``P_i Q_j`` for all i < j and P, Q in {Z, X}; shape (pairs, 2, 2, dim, dim)."""
    Zs, Xs = _site_paulis(n)
    site = np.stack([Zs, Xs], axis=1)  # (n, 2, dim, dim)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    out = np.empty((len(pairs), 2, 2, 2 ** n, 2 ** n))
    for p, (i, j) in enumerate(pairs):
        for P in range(2):
            for Q in range(2):
                out[p, P, Q] = site[i, P] @ site[j, Q]
    out.setflags(write=False)
    return out


class BellOperator:
    """Real-qubit Bell operator of a TI inequality as a function of the angles."""

    def __init__(self, q: TIInequality):
        if q.n > MAX_QUBITS:
            raise SizeError(f"qubit Bell operators supported for n <= {MAX_QUBITS}")
        self.q = q
        self.n = n = q.n
        exp = q.expand()
        self.one = np.array(exp.one, dtype=float)                     # (n, 2)
        self.pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        self.two = np.array([[[float(exp.two[i, j, a, b]) for b in range(2)] for a in range(2)]
                             for i, j in self.pairs]).reshape(len(self.pairs), 2, 2)
        self.pi = np.array([i for i, _ in self.pairs], dtype=int)
        self.pj = np.array([j for _, j in self.pairs], dtype=int)
        Zs, Xs = _site_paulis(n)
        self.site = np.stack([Zs, Xs], axis=1)                        # (n, 2, d, d)
        self.pair_ops = _pair_basis(n)                                # (p, 2, 2, d, d)

    def _weights(self, phi: np.ndarray):
        u = np.stack([np.cos(phi), np.sin(phi)], axis=-1)             # (n, 2 obs, 2 pauli)
        w1 = np.einsum("ia,iap->ip", self.one, u)
        w2 = np.einsum("kab,kaP,kbQ->kPQ", self.two, u[self.pi], u[self.pj])
        return w1, w2

    def matrix(self, angles) -> np.ndarray:
        phi = angles.phi if isinstance(angles, MeasurementAngles) else np.asarray(angles, float)
        if phi.shape != (self.n, 2):
            raise DimensionError(f"angles shape {phi.shape} does not match n={self.n}")
        w1, w2 = self._weights(phi)
        return (np.tensordot(w1, self.site, axes=([0, 1], [0, 1]))
                + np.tensordot(w2, self.pair_ops, axes=([0, 1, 2], [0, 1, 2])))

    def expectations(self, psi: np.ndarray):
        """<P_i> and <P_i Q_j> for a real or complex state vector."""
        c = np.conj(psi)
        e1 = np.real(np.einsum("d,ipde,e->ip", c, self.site, psi))
        e2 = np.real(np.einsum("d,kPQde,e->kPQ", c, self.pair_ops, psi))
        return e1, e2

    def gradient(self, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """d<psi|B|psi>/d phi at fixed psi (Hellmann-Feynman for eigenvectors)."""
        e1, e2 = self.expectations(psi)
        u = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        du = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        g = np.einsum("ia,iap,ip->ia", self.one, du, e1)
        # pair terms: derivative w.r.t. the first and second site angles
        gi = np.einsum("kab,kaP,kPQ,kbQ->ka", self.two, du[self.pi], e2, u[self.pj])
        gj = np.einsum("kab,kaP,kPQ,kbQ->kb", self.two, u[self.pi], e2, du[self.pj])
        np.add.at(g, self.pi, gi)
        np.add.at(g, self.pj, gj)
        return g

    def lowest(self, phi: np.ndarray):
        """Lowest eigenvalue, its eigenvector and the gap to the next level."""
        w, v = scipy.linalg.eigh(self.matrix(phi), subset_by_index=[0, 1], driver="evr")
        psi = _fix_sign(v[:, 0])
        return w[0], psi, w[1] - w[0]


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # deterministic phase: largest-magnitude component (first on ties) made positive
    k = int(np.argmax(np.abs(v) > np.abs(v).max() - 1e-12))
    return v * np.sign(v[k]) if v[k] != 0 else v


def bell_operator(q: TIInequality, angles: MeasurementAngles) -> np.ndarray:
    return BellOperator(q).matrix(angles)


def violation_for_state(q: TIInequality, angles: MeasurementAngles, psi) -> float:
    """``-<psi|B|psi>`` for a normalised state vector or a density matrix."""
    B = bell_operator(q, angles)
    psi = np.asarray(psi)
    if psi.ndim == 2:
        return float(-np.real(np.trace(psi @ B)))
    return float(-np.real(np.conj(psi) @ B @ psi))


def max_violation(q: TIInequality, mode: Mode = "free", starts: int = 50, seed: int = 0,
                  maxiter: int = 200, tol: float = 1e-9, init=None) -> ViolationResult:
    """Best-found ``-lambda_min`` over qubit measurement angles (a lower bound on beta_Q).

    ``mode="ti"`` forces the same pair of angles at every site.  Local descent
    uses L-BFGS with the Hellmann-Feynman gradient; starts that end near an
    eigenvalue crossing are polished by Nelder-Mead.
    """
    if mode not in ("free", "ti"):
        raise ValueError(f"unknown mode {mode!r}")
    op = BellOperator(q)
    n = q.n
    rng = np.random.default_rng(seed)
    nvar = 2 if mode == "ti" else 2 * n

    def expand(x):
        return np.tile(x, (n, 1)) if mode == "ti" else x.reshape(n, 2)

    def fun(x):
        phi = expand(x)
        lam, psi, _ = op.lowest(phi)
        g = op.gradient(phi, psi)
        return lam, (g.sum(axis=0) if mode == "ti" else g.ravel())

    best = None
    history = []
    converged_any = False
    inits = [] if init is None else [np.asarray(x, float).ravel()[:nvar] for x in init]
    for s in range(starts):
        x0 = inits[s] if s < len(inits) else rng.uniform(0, 2 * np.pi, nvar)
        res = scipy.optimize.minimize(fun, x0, jac=True, method="L-BFGS-B",
                                      options={"maxiter": maxiter, "ftol": tol, "gtol": 1e-8})
        x = res.x
        lam, psi, gap = op.lowest(expand(x))
        if gap < 1e-6:
            nm = scipy.optimize.minimize(lambda y: op.lowest(expand(y))[0], x, method="Nelder-Mead",
                                         options={"xatol": 1e-10, "fatol": tol, "maxiter": 400 * nvar})
            if nm.fun < lam:
                x = nm.x
                lam, psi, gap = op.lowest(expand(x))
        converged_any |= bool(res.success)
        if best is None or lam < best[0]:
            best = (lam, x, psi)
        history.append(-best[0])
    lam, x, psi = best
    phi = np.mod(expand(x), 2 * np.pi)
    return ViolationResult(float(-lam), MeasurementAngles(phi), psi, mode, starts,
                           converged_any, history)


# --------------------------------------------------------------------------
# translation
# --------------------------------------------------------------------------

def shift_state(psi: np.ndarray, d: int, n: int, k: int = 1) -> np.ndarray:
    """Apply ``V_d**k`` to a state vector: |x_1..x_n> -> |x_n x_1..x_{n-1}>."""
    t = np.asarray(psi).reshape((d,) * n)
    return _shift_tensor(t, k).ravel()


def _shift_tensor(t: np.ndarray, k: int) -> np.ndarray:
    n = t.ndim
    k %= n
    if k == 0:
        return t
    # result[y_1..y_n] = t[y_{k+1}..y_n, y_1..y_k]
    axes = list(range(n - k, n)) + list(range(n - k))
    return np.transpose(t, axes)


def shift_operator(d: int, n: int) -> scipy.sparse.csr_matrix:
    """Permutation matrix of the cyclic shift on ``(C^d)^{⊗n}``."""
    if d < 1 or n < 2:
        raise SizeError("shift operator needs d >= 1 and n >= 2")
    dim = d ** n
    idx = np.arange(dim)
    image = _shift_tensor(idx.reshape((d,) * n), 1).ravel()
    # column j maps basis state j to the position where its index lands
    cols = image
    rows = np.arange(dim)
    return scipy.sparse.csr_matrix((np.ones(dim), (rows, cols)), shape=(dim, dim))


def ti_mixed_state(psi: np.ndarray, d: int = 2) -> np.ndarray:
    """Average of ``V^k |psi><psi| V^-k`` over all shifts."""
    psi = np.asarray(psi)
    n = _num_sites(psi.size, d)
    rho = np.zeros((psi.size, psi.size), dtype=np.result_type(psi, float))
    for k in range(n):
        v = shift_state(psi, d, n, k)
        rho += np.outer(v, np.conj(v))
    return rho / n


def is_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> bool:
    return (np.allclose(rho, np.conj(rho.T), atol=1e-12)
            and abs(np.trace(rho) - 1) < 1e-12
            and np.linalg.eigvalsh(rho).min() >= -tol)


# --------------------------------------------------------------------------
# reductions and diagnostics
# --------------------------------------------------------------------------

def _num_sites(size: int, d: int) -> int:
    n = 0
    while d ** n < size:
        n += 1
    if d ** n != size or d < 2:
        raise DimensionError(f"size {size} is not a power of {d}")
    return n


def reduced_state(rho: np.ndarray, keep: Sequence[int], d: int = 2, n: int | None = None) -> np.ndarray:
    """Partial trace keeping the sites in ``keep`` (0-based, output in increasing order).

    ``rho`` may be a density matrix or a state vector.  ``n`` is required
    when ``d == 1``.
    """
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one site")
    rho = np.asarray(rho)
    if rho.ndim == 1:
        n = n if n is not None else _num_sites(rho.size, d)
        t = rho.reshape((d,) * n)
        rest = [i for i in range(n) if i not in keep]
        m = np.tensordot(t, np.conj(t), axes=(rest, rest))
        k = len(keep)
        return m.reshape(d ** k, d ** k)
    n = n if n is not None else _num_sites(rho.shape[0], d)
    if max(keep) >= n:
        raise ValueError("site index out of range")
    t = rho.reshape((d,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    k = len(keep)
    return res.reshape(d ** k, d ** k)


def correlation_matrix(rho2: np.ndarray) -> np.ndarray:
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    return np.array([[np.real(np.trace(rho2 @ np.kron(a, b))) for b in paulis] for a in paulis])


def chsh_max(rho2: np.ndarray) -> float:
    """Largest CHSH value of a two-qubit state: 2 sqrt(sum of the two largest eigenvalues of T^T T)."""
    rho2 = np.asarray(rho2)
    if rho2.shape != (4, 4):
        raise DimensionError("chsh_max needs a 4x4 density matrix")
    T = correlation_matrix(rho2)
    ev = np.sort(np.linalg.eigvalsh(T.T @ T))[::-1]
    return float(2 * np.sqrt(max(ev[0] + ev[1], 0.0)))


def two_site_reductions(psi: np.ndarray, n: int) -> dict[tuple[int, int], np.ndarray]:
    return {(i, j): reduced_state(psi, [i, j]) for i in range(n) for j in range(i + 1, n)}


def _symmetric_overlap(psi_t: np.ndarray, theta: float, phase: float) -> float:
    e = np.array([np.cos(theta), np.exp(1j * phase) * np.sin(theta)])
    t = psi_t
    for _ in range(psi_t.ndim):
        t = np.tensordot(np.conj(e), t, axes=(0, 0))
    return float(abs(t) ** 2)


def geometric_entanglement(psi: np.ndarray, symmetric_hint: bool = False, starts: int = 20,
                           seed: int = 0, d: int = 2, max_sweeps: int = 2000,
                           return_details: bool = False, amplitude: bool = False):
    """``1 - max |<e_1...e_n|psi>|^2`` over product states.

    ``amplitude=True`` returns ``1 - max |<e_1...e_n|psi>|`` instead, the
    unsquared variant some tabulated values follow.

    With ``symmetric_hint`` the product state is restricted to ``|e>^{⊗n}``
    (sufficient for permutation-symmetric qubit states).  Otherwise an
    alternating single-site update is run from several random starts.
    """
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    n = _num_sites(psi.size, d)
    t = psi.reshape((d,) * n)
    rng = np.random.default_rng(seed)
    overlaps = []
    if symmetric_hint:
        if d != 2:
            raise ValueError("symmetric shortcut implemented for qubits")

        def neg(x):
            return -_symmetric_overlap(t, x[0], x[1])

        for _ in range(starts):
            x0 = rng.uniform([0, 0], [np.pi / 2, 2 * np.pi])
            r = scipy.optimize.minimize(neg, x0, method="Nelder-Mead",
                                        options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            overlaps.append(-r.fun)
    else:
        for _ in range(starts):
            es = [_random_unit(rng, d) for _ in range(n)]
            prev = -1.0
            for _ in range(max_sweeps):
                for i in range(n):
                    v = t
                    # contract every site except i with conj(e_j)
                    for j in reversed(range(n)):
                        if j != i:
                            v = np.tensordot(v, np.conj(es[j]), axes=(j, 0))
                    es[i] = v / np.linalg.norm(v)
                ov = float(np.linalg.norm(v) ** 2)
                if abs(ov - prev) < 1e-14:
                    break
                prev = ov
            overlaps.append(ov)
    best = max(overlaps)
    eg = 1.0 - (np.sqrt(best) if amplitude else best)
    if return_details:
        spread = best - np.array(overlaps)
        agree = int((spread < 1e-8).sum())
        return eg, {"max_overlap": best, "starts": starts, "starts_agreeing": agree}
    return eg


def _random_unit(rng, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


# --------------------------------------------------------------------------
# named states
# --------------------------------------------------------------------------

def basis_index(bits: str) -> int:
    return int(bits, 2)


def w_state(n: int = 3) -> np.ndarray:
    psi = np.zeros(2 ** n)
    for i in range(n):
        psi[1 << i] = 1
    return psi / np.sqrt(n)


def ghz_state(n: int = 3) -> np.ndarray:
    psi = np.zeros(2 ** n)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def normalize(psi: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit-norm copy and the residual ``| ||psi|| - 1 |`` of the input."""
    norm = float(np.linalg.norm(psi))
    return np.asarray(psi) / norm, abs(norm - 1.0)


def psi3() -> np.ndarray:
    """Three-qubit state reported to violate the N=3 class #6 inequality (renormalised)."""
    amp = np.zeros(8)
    amp[[0b000, 0b111]] = -0.08
    amp[[0b001, 0b010, 0b100]] = -0.5628
    amp[[0b011, 0b110, 0b101]] = 0.1108
    return normalize(amp)[0]


def translation_orbit_sum(bits: str) -> np.ndarray:
    """``sum_{k=0}^{n-1} V^k |bits>`` (repeats included, as written)."""
    n = len(bits)
    e = np.zeros(2 ** n)
    e[basis_index(bits)] = 1.0
    return sum(shift_state(e, 2, n, k) for k in range(n))


def psi5(return_residual: bool = False):
    """Five-qubit TI state violating the nearest-neighbour example (renormalised)."""
    amp = np.zeros(32)
    amp[0] = amp[31] = -0.3710
    amp += -0.1817 * translation_orbit_sum("00001")
    amp += 0.1260 * translation_orbit_sum("00011")
    amp += -0.1418 * translation_orbit_sum("00101")
    amp += 0.2645 * translation_orbit_sum("00111")
    amp += -0.0603 * translation_orbit_sum("01011")
    amp += 0.0486 * translation_orbit_sum("01111")
    psi, residual = normalize(amp)
    if residual > 1e-3:
        log.warning("psi5 amplitudes renormalised (norm residual %.2e)", residual)
    return (psi, residual) if return_residual else psi
