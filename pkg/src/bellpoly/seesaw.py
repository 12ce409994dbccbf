"""TI states with site-identical observables: dN embedding, see-saw search and d_min sweep."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse.linalg

from .core import DimensionError, SizeError, TIInequality
from .quantum import reduced_state, shift_state

log = logging.getLogger(__name__)

DEFAULT_MEM_CAP = 2 * 1024 ** 3      # bytes
DENSE_LIMIT = 64                     # dense eigensolver up to this many amplitudes


@dataclass
class SymmetricObservableSet:
    """``m`` dichotomic observables on C^D shared by every site."""

    ops: np.ndarray                   # shape (m, D, D)

    def __post_init__(self):
        self.ops = np.asarray(self.ops)
        if self.ops.ndim != 3 or self.ops.shape[1] != self.ops.shape[2]:
            raise DimensionError("observables must have shape (m, D, D)")
        for M in self.ops:
            if not np.allclose(M, np.conj(M.T), atol=1e-12):
                raise ValueError("observable is not Hermitian")
            if np.abs(np.linalg.eigvalsh(M)).max() > 1 + 1e-10:
                raise ValueError("observable norm exceeds 1")

    @property
    def m(self) -> int:
        return self.ops.shape[0]

    @property
    def D(self) -> int:
        return self.ops.shape[1]


@dataclass
class SeesawReport:
    beta: float
    D: int
    psi: np.ndarray                   # pure state whose shift average is the TI state
    observables: SymmetricObservableSet
    iterations: int
    trace: list[float]
    converged: bool
    n: int
    seed: int | None = None
    decreases: list[int] = field(default_factory=list)   # iterations where beta went down
    seesaw_beta: float | None = None  # best value of the plain loop, before refinement
    refined: bool = False

    def state(self) -> np.ndarray:
        """The TI density matrix ``(1/n) sum_k V^k |psi><psi| V^-k`` (dense)."""
        return _ti_density(self.psi, self.D, self.n)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "D": self.D,
            "n": self.n,
            "seed": self.seed,
            "iterations": self.iterations,
            "converged": self.converged,
            "trace": list(self.trace),
            "decreases": list(self.decreases),
            "seesaw_beta": self.seesaw_beta,
            "refined": self.refined,
            "observables_real": np.real(self.observables.ops).tolist(),
            "observables_imag": np.imag(self.observables.ops).tolist(),
        }


def _ti_density(psi, D, n):
    rho = np.zeros((psi.size, psi.size), dtype=psi.dtype)
    for k in range(n):
        v = shift_state(psi, D, n, k)
        rho += np.outer(v, np.conj(v))
    return rho / n


# --------------------------------------------------------------------------
# Bell operator with arbitrary local observables, applied matrix-free
# --------------------------------------------------------------------------

class LocalBellOperator:
    """``B = sum one[i,a] M_a^(i) + sum_{i<j} two[i,j,a,b] M_a^(i) M_b^(j)``.

    ``ops`` is ``(m, D, D)`` (shared by every site) or ``(n, m, D, D)``.
    """

    def __init__(self, q: TIInequality, ops: np.ndarray):
        exp = q.expand()
        self.n = n = q.n
        self.one = np.array(exp.one, dtype=float)
        self.two = np.zeros((n, n, 2, 2))
        for i in range(n):
            for j in range(i + 1, n):
                for a in range(2):
                    for b in range(2):
                        self.two[i, j, a, b] = float(exp.two[i, j, a, b])
        ops = np.asarray(ops)
        if ops.ndim == 3:
            ops = np.broadcast_to(ops, (n,) + ops.shape)
        if ops.shape[:2] != (n, 2):
            raise DimensionError("two observables per site expected")
        self.ops = ops
        self.D = ops.shape[-1]
        self.dim = self.D ** n
        self.dtype = np.result_type(ops.dtype, float)

    def _apply_site(self, M, t, i):
        return np.moveaxis(np.tensordot(M, t, axes=(1, i)), 0, i)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """``B v`` for a vector or a block of column vectors."""
        n, D = self.n, self.D
        v = np.asarray(v)
        t = v.reshape((D,) * n + v.shape[1:])
        Y = [[self._apply_site(self.ops[j, b], t, j) for b in range(2)] for j in range(n)]
        out = np.zeros(t.shape, dtype=np.result_type(self.dtype, t.dtype))
        for i in range(n):
            for a in range(2):
                z = self.one[i, a] * t
                for j in range(i + 1, n):
                    for b in range(2):
                        c = self.two[i, j, a, b]
                        if c:
                            z = z + c * Y[j][b]
                if np.any(z):
                    out += self._apply_site(self.ops[i, a], z, i)
        return out.reshape(v.shape)

    def dense(self) -> np.ndarray:
        return self.matvec(np.eye(self.dim, dtype=self.dtype))

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.matvec(psi))))

    def lowest(self, v0: np.ndarray | None = None, tol: float = 1e-10):
        """Minimal eigenpair; dense below ``DENSE_LIMIT`` amplitudes, Lanczos above."""
        if self.dim <= DENSE_LIMIT:
            w, v = scipy.linalg.eigh(self.dense(), subset_by_index=[0, 0])
            return float(w[0]), v[:, 0]
        op = scipy.sparse.linalg.LinearOperator((self.dim, self.dim), matvec=self.matvec,
                                                matmat=self.matvec, dtype=self.dtype)
        w, v = scipy.sparse.linalg.eigsh(op, k=1, which="SA", v0=v0, tol=tol,
                                         ncv=min(self.dim, 40), maxiter=20 * self.dim)
        return float(w[0]), v[:, 0]


# --------------------------------------------------------------------------
# dN embedding
# --------------------------------------------------------------------------

@dataclass
class EmbeddedState:
    """Equal mixture of ``n`` pure states on ``(C^{dn})^{⊗n}``, invariant under the shift."""

    ensemble: np.ndarray              # shape (n, (d n)^n)
    local_dim: int
    n: int

    def density_matrix(self) -> np.ndarray:
        rho = sum(np.outer(v, np.conj(v)) for v in self.ensemble)
        return rho / len(self.ensemble)

    def expectation(self, op: LocalBellOperator) -> float:
        return float(np.mean([op.expectation(v) for v in self.ensemble]))


def embed_dN(psi: np.ndarray, obs: np.ndarray, mem_cap: int = DEFAULT_MEM_CAP):
    """TI state of local dimension ``d n`` and shared observables reproducing a violation.

    ``psi`` lives on ``(C^d)^{⊗n}``; ``obs`` has shape ``(n, m, d, d)`` (site,
    setting).  Site ``s`` of the output is ``C^d ⊗ C^n`` (system, position
    register); the shared observable is ``sum_i M^(i) ⊗ |i><i|``.
    """
    obs = np.asarray(obs)
    n, m, d = obs.shape[0], obs.shape[1], obs.shape[2]
    psi = np.asarray(psi)
    if psi.size != d ** n:
        raise DimensionError("state and observables disagree on n or d")
    L = d * n
    if n * L ** n * 16 > mem_cap:
        raise SizeError(f"embedding needs {n * L ** n * 16} bytes, cap is {mem_cap}")
    ens = np.zeros((n, L ** n), dtype=np.result_type(psi, obs, float))
    reg = np.zeros((n,) * n)
    reg[tuple(range(n))] = 1.0
    for k in range(n):
        sys_t = shift_state(psi, d, n, k).reshape((d,) * n)
        reg_t = shift_state(reg.ravel(), n, n, k).reshape((n,) * n)
        full = np.multiply.outer(sys_t, reg_t)              # axes: sys_1..sys_n, reg_1..reg_n
        order = [ax for s in range(n) for ax in (s, n + s)]
        ens[k] = np.transpose(full, order).ravel()
    shared = np.zeros((m, L, L), dtype=obs.dtype)
    for j in range(m):
        for i in range(n):
            proj = np.zeros((n, n))
            proj[i, i] = 1
            shared[j] += np.kron(obs[i, j], proj)
    return EmbeddedState(ens, L, n), SymmetricObservableSet(shared)


# --------------------------------------------------------------------------
# see-saw
# --------------------------------------------------------------------------

def haar_unitary(D: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """Haar-random unitary (orthogonal if ``real``) by QR with phase correction."""
    Z = rng.normal(size=(D, D)) if real else (rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_observable(D: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    while True:
        lam = rng.choice([-1.0, 1.0], size=D)
        if D == 1 or (lam.min() < 0 < lam.max()):
            break
    U = haar_unitary(D, rng, real)
    return (U * lam) @ np.conj(U.T)


def ti_reductions(psi: np.ndarray, D: int, n: int):
    """One-site and (0, delta) two-site reductions of the shift-averaged state of ``psi``."""
    shifted = [shift_state(psi, D, n, k) for k in range(n)]
    r1 = sum(reduced_state(v, [0], D, n) for v in shifted) / n
    r2 = {delta: sum(reduced_state(v, [0, delta], D, n) for v in shifted) / n
          for delta in range(1, n)}
    return r1, r2


def f_operators(op: LocalBellOperator, ops: np.ndarray, r1, r2) -> np.ndarray:
    """``F_j`` with every term translated so its lowest party sits at site 1."""
    n, D = op.n, ops.shape[-1]
    F = np.zeros((2, D, D), dtype=np.result_type(ops, r1))
    for a in range(2):
        F[a] += op.one[:, a].sum() * r1
        for i in range(n):
            for j in range(i + 1, n):
                R = r2[j - i].reshape(D, D, D, D)
                for b in range(2):
                    c = op.two[i, j, a, b]
                    if c:
                        # Tr_2[(1 ⊗ M_b) R]: contract site-2 indices of R with M_b
                        F[a] += c * np.einsum("xyzw,wy->xz", R, ops[b])
    return F


def gradient_operators(op: LocalBellOperator, ops: np.ndarray, r1, r2) -> np.ndarray:
    """``G_a`` with ``d<B> = sum_a Tr(G_a dM_a)``: ``F_a`` plus the terms where ``M_a`` sits higher."""
    n, D = op.n, ops.shape[-1]
    G = f_operators(op, ops, r1, r2)
    for a in range(2):
        for i in range(n):
            for j in range(i + 1, n):
                R = r2[j - i].reshape(D, D, D, D)
                for b in range(2):
                    c = op.two[i, j, b, a]
                    if c:
                        G[a] += c * np.einsum("xyzw,zx->yw", R, ops[b])
    return G


def _generators(D: int, real: bool) -> list[np.ndarray]:
    gens = []
    for i in range(D):
        for j in range(i + 1, D):
            E = np.zeros((D, D), dtype=float if real else complex)
            E[i, j], E[j, i] = 1, -1
            gens.append(E)
            if not real:
                gens.append(1j * np.abs(E))
    if not real:
        for i in range(D):
            E = np.zeros((D, D), dtype=complex)
            E[i, i] = 1j
            gens.append(E)
    return gens


def polish(q: TIInequality, ops: np.ndarray, real: bool = True, maxiter: int = 300,
           tol: float = 1e-12):
    """Local ascent of beta over rotations ``M_a -> W M_a W^dagger`` keeping each spectrum.

    Uses the exact gradient ``Tr(G_a dM_a)`` at the current ground state.
    Returns ``(beta, psi, ops)``.
    """
    n, D = q.n, ops.shape[-1]
    if D == 1:
        op = LocalBellOperator(q, ops)
        lam, psi = op.lowest()
        return -lam, psi, ops
    lam_sig, W0 = [], []
    for M in ops:
        w, V = np.linalg.eigh(M)
        lam_sig.append(np.sign(np.round(w, 12)) + (np.round(w, 12) == 0))
        W0.append(V)
    gens = _generators(D, real)
    k = len(gens)
    state = {"psi": None}

    def build(x):
        out, dWs = [], []
        for a in range(2):
            K = sum(t * E for t, E in zip(x[a * k:(a + 1) * k], gens))
            pieces = [scipy.linalg.expm_frechet(K, E, compute_expm=True) for E in gens]
            U = pieces[0][0]
            W = U @ W0[a]
            out.append((W * lam_sig[a]) @ np.conj(W.T))
            dWs.append([(dU @ W0[a], W) for _, dU in pieces])
        return np.stack(out), dWs

    def fun(x):
        M, dWs = build(x)
        if real:
            M = np.real(M)
        op = LocalBellOperator(q, M)
        lam, psi = op.lowest(v0=state["psi"])
        state["psi"] = psi
        r1, r2 = ti_reductions(psi, D, n)
        G = gradient_operators(op, M, r1, r2)
        g = np.empty(2 * k)
        for a in range(2):
            for e, (dW, W) in enumerate(dWs[a]):
                dM = (dW * lam_sig[a]) @ np.conj(W.T)
                dM = dM + np.conj(dM.T)
                g[a * k + e] = np.real(np.trace(G[a] @ dM))
        return lam, g

    res = scipy.optimize.minimize(fun, np.zeros(2 * k), jac=True, method="L-BFGS-B",
                                  options={"maxiter": maxiter, "ftol": tol, "gtol": 1e-9})
    M, _ = build(res.x)
    if real:
        M = np.real(M)
    M = (M + np.conj(np.transpose(M, (0, 2, 1)))) / 2
    lam, psi = LocalBellOperator(q, M).lowest()
    return -lam, psi, M


def sign_update(F: np.ndarray, zero_tol: float = 1e-12) -> np.ndarray:
    """``-sum sign(lambda) |phi><phi|`` with zero eigenvalues sent to -1."""
    w, V = np.linalg.eigh(F)
    scale = max(1.0, np.abs(w).max())
    s = np.where(w > zero_tol * scale, -1.0, 1.0)
    s = np.where(np.abs(w) <= zero_tol * scale, -1.0, s)
    return (V * s) @ np.conj(V.T)


def seesaw_run(q: TIInequality, D: int, seed: int = 0, max_iter: int = 500, tol: float = 1e-8,
               real: bool = True, mem_cap: int = DEFAULT_MEM_CAP,
               refine: bool = False) -> SeesawReport:
    """See-saw over TI states and site-identical observables in local dimension ``D``.

    The loop is: random observables, copy to every site, ground state of
    ``B``, shift-averaged state, sign update from ``F_j``, repeat until the
    value changes by less than ``tol``.  The best iterate is returned.  With
    ``refine`` the best iterate is then improved by :func:`polish`; the
    plain see-saw value stays in ``trace``/``seesaw_beta``.
    """
    n = q.n
    if D < 1:
        raise ValueError("D must be >= 1")
    if D ** n * 16 * 8 > mem_cap:
        raise SizeError(f"D^n = {D ** n} exceeds the memory cap")
    rng = np.random.default_rng(seed)
    ops = np.stack([random_observable(D, rng, real) for _ in range(2)])
    trace: list[float] = []
    decreases: list[int] = []
    best = None
    psi = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        op = LocalBellOperator(q, ops)
        lam, psi = op.lowest(v0=psi)
        beta = -lam
        if trace and beta < trace[-1] - 1e-9:
            decreases.append(it)
        trace.append(beta)
        if best is None or beta > best[0]:
            best = (beta, psi.copy(), ops.copy())
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < tol:
            converged = True
            break
        r1, r2 = ti_reductions(psi, D, n)
        F = f_operators(op, ops, r1, r2)
        ops = np.stack([sign_update(F[a]) for a in range(2)])
        if real:
            ops = np.real(ops)
    if decreases:
        log.info("see-saw beta decreased at iterations %s", decreases)
    beta, psi, ops = best
    seesaw_beta = beta
    if refine:
        pb, ppsi, pops = polish(q, ops, real=real)
        if pb > beta:
            beta, psi, ops = pb, ppsi, pops
    return SeesawReport(beta, D, psi, SymmetricObservableSet(ops), it, trace, converged, n,
                        seed, decreases, seesaw_beta, refine)


@dataclass
class DminResult:
    d_min: int | None                 # None: not found up to D_max
    target: float
    curve: dict[int, float]           # D -> best beta over seeds
    seeds: int
    best: dict[int, SeesawReport] = field(default_factory=dict)
    accuracy: float = 1e-3

    def rows(self, class_id=None) -> list[dict]:
        return [{"class_id": class_id, "D": D, "best_beta": b, "seeds": self.seeds,
                 "target_reached": b >= self.target - self.accuracy} for D, b in self.curve.items()]


def dmin_search(q: TIInequality, target: float, D_max: int = 6, seeds: int = 20, D_min: int = 1,
                max_iter: int = 500, real: bool = True, accuracy: float = 1e-3,
                stop_early: bool = True, refine: bool = True) -> DminResult:
    """Smallest D whose best see-saw value reaches ``target - accuracy``."""
    curve: dict[int, float] = {}
    best: dict[int, SeesawReport] = {}
    found = None
    for D in range(D_min, D_max + 1):
        top = None
        for s in range(seeds):
            rep = seesaw_run(q, D, seed=s, max_iter=max_iter, real=real, refine=refine)
            if top is None or rep.beta > top.beta:
                top = rep
            if top.beta >= target - accuracy and stop_early:
                break
        curve[D] = top.beta
        best[D] = top
        if found is None and top.beta >= target - accuracy:
            found = D
            if stop_early:
                break
    return DminResult(found, target, curve, seeds, best, accuracy)
