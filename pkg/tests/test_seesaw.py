import numpy as np
import pytest

from bellpoly import quantum as Q
from bellpoly import seesaw as S
from bellpoly.core import DimensionError, SizeError, TIInequality

from conftest import table1_ineq, table2_ineq


def random_ti(n, rng):
    return TIInequality.from_coefficients(n, rng.integers(-3, 4, 2 + 2 * (n // 2) + n - 1).tolist())


def qubit_ops(phi):
    return np.stack([Q.observable(phi[0]), Q.observable(phi[1])])


# ----------------------------------------------------------------------------
# local Bell operator
# ----------------------------------------------------------------------------

def test_local_operator_matches_qubit_operator():
    rng = np.random.default_rng(0)
    for n in (3, 4, 5):
        q = random_ti(n, rng)
        phi = rng.uniform(0, 2 * np.pi, 2)
        B = Q.bell_operator(q, Q.MeasurementAngles.shared(n, *phi))
        assert np.allclose(S.LocalBellOperator(q, qubit_ops(phi)).dense(), B, atol=1e-12)


def test_site_dependent_observables():
    rng = np.random.default_rng(1)
    q = random_ti(4, rng)
    phi = rng.uniform(0, 2 * np.pi, (4, 2))
    ops = np.stack([qubit_ops(p) for p in phi])
    B = Q.bell_operator(q, Q.MeasurementAngles(phi))
    assert np.allclose(S.LocalBellOperator(q, ops).dense(), B, atol=1e-12)


def test_matvec_block_and_vector_agree():
    rng = np.random.default_rng(2)
    q = random_ti(3, rng)
    ops = np.stack([S.random_observable(3, rng) for _ in range(2)])
    op = S.LocalBellOperator(q, ops)
    V = rng.normal(size=(27, 4)) + 1j * rng.normal(size=(27, 4))
    block = op.matvec(V)
    cols = np.stack([op.matvec(V[:, k]) for k in range(4)], axis=1)
    assert np.allclose(block, cols)
    H = op.dense()
    assert np.allclose(H, H.conj().T)


def test_lanczos_path_matches_dense():
    rng = np.random.default_rng(3)
    q = table2_ineq(70)
    ops = np.stack([S.random_observable(3, rng, real=True) for _ in range(2)])
    op = S.LocalBellOperator(q, ops)          # 81 amplitudes: Lanczos path
    assert op.dim > S.DENSE_LIMIT
    lam, psi = op.lowest()
    ref = np.linalg.eigvalsh(op.dense())[0]
    assert lam == pytest.approx(ref, abs=1e-8)
    assert op.expectation(psi) == pytest.approx(lam, abs=1e-8)


def test_operator_shape_checked(class6):
    with pytest.raises(DimensionError):
        S.LocalBellOperator(class6, np.zeros((3, 3, 2, 2)))


# ----------------------------------------------------------------------------
# observables
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("real", [True, False])
def test_haar_unitary(real):
    rng = np.random.default_rng(4)
    U = S.haar_unitary(5, rng, real)
    assert np.allclose(U @ U.conj().T, np.eye(5))
    assert np.isrealobj(U) == real


def test_haar_phases_are_uniform():
    """Without the phase correction QR output is biased; the eigenphases would not average to zero."""
    rng = np.random.default_rng(5)
    tr = np.array([np.trace(S.haar_unitary(3, rng)) for _ in range(4000)])
    assert abs(tr.mean()) < 0.08
    assert np.mean(np.abs(tr) ** 2) == pytest.approx(1.0, abs=0.1)


def test_random_observable_spectrum():
    rng = np.random.default_rng(6)
    for D in (2, 3, 4):
        M = S.random_observable(D, rng)
        w = np.linalg.eigvalsh(M)
        assert np.allclose(np.abs(w), 1)
        assert w.min() < 0 < w.max()


def test_symmetric_observable_set_validation():
    with pytest.raises(ValueError):
        S.SymmetricObservableSet(np.stack([np.eye(2), np.array([[0, 1], [0, 0]])]))
    ok = S.SymmetricObservableSet(np.stack([Q.SIGMA_Z, Q.SIGMA_X]))
    assert ok.D == 2 and ok.m == 2


def test_sign_update():
    F = np.diag([2.0, -1.0, 0.0])
    M = S.sign_update(F)
    assert np.allclose(M, np.diag([-1.0, 1.0, -1.0]))


# ----------------------------------------------------------------------------
# F operators and the measurement step
# ----------------------------------------------------------------------------

def test_f_operator_identity():
    """sum_a Tr(M_a F_a) reproduces the Bell value on the shift-averaged state."""
    rng = np.random.default_rng(7)
    for n, D in ((3, 2), (3, 3), (4, 2)):
        q = random_ti(n, rng)
        ops = np.stack([S.random_observable(D, rng) for _ in range(2)])
        op = S.LocalBellOperator(q, ops)
        psi = rng.normal(size=D ** n) + 1j * rng.normal(size=D ** n)
        psi /= np.linalg.norm(psi)
        r1, r2 = S.ti_reductions(psi, D, n)
        F = S.f_operators(op, ops, r1, r2)
        lhs = sum(np.real(np.trace(ops[a] @ F[a])) for a in range(2))
        rho = Q.ti_mixed_state(psi, D)
        assert lhs == pytest.approx(np.real(np.trace(rho @ op.dense())), abs=1e-10)


def test_sign_update_is_optimal_measurement_step():
    """With F fixed, -sign(F) minimises Tr(M F) over all +-1 observables of size D."""
    rng = np.random.default_rng(8)
    F = rng.normal(size=(4, 4))
    F = F + F.T
    best = np.real(np.trace(S.sign_update(F) @ F))
    assert best == pytest.approx(-np.abs(np.linalg.eigvalsh(F)).sum())
    for _ in range(200):
        M = S.random_observable(4, rng, real=True)
        assert np.trace(M @ F) >= best - 1e-12


def test_gradient_operators_match_finite_differences():
    rng = np.random.default_rng(9)
    q = random_ti(3, rng)
    D = 3
    ops = np.stack([S.random_observable(D, rng, real=True) for _ in range(2)])
    psi = rng.normal(size=D ** 3)
    psi /= np.linalg.norm(psi)
    op = S.LocalBellOperator(q, ops)
    r1, r2 = S.ti_reductions(psi, D, 3)
    G = S.gradient_operators(op, ops, r1, r2)
    H = rng.normal(size=(D, D))
    H = H + H.T
    h = 1e-6
    for a in range(2):
        up, dn = ops.copy(), ops.copy()
        up[a] += h * H
        dn[a] -= h * H
        fd = (S.LocalBellOperator(q, up).expectation(psi)
              - S.LocalBellOperator(q, dn).expectation(psi)) / (2 * h)
        assert np.trace(G[a] @ H) == pytest.approx(fd, abs=1e-6)


# ----------------------------------------------------------------------------
# see-saw runs
# ----------------------------------------------------------------------------

def test_seesaw_d1_is_classical():
    for rid in (64, 70):
        q = table2_ineq(rid)
        rep = S.seesaw_run(q, 1, seed=0)
        assert rep.beta <= float(q.beta_c) + 1e-9


def test_seesaw_reproducible_and_bounded():
    q = table2_ineq(64)
    a = S.seesaw_run(q, 2, seed=3)
    b = S.seesaw_run(q, 2, seed=3)
    assert a.beta == b.beta and a.trace == b.trace
    assert a.beta <= 10 + 1e-9                      # nonsignalling bound of row 64
    assert a.beta == max(a.trace)


def test_seesaw_state_is_translation_invariant():
    q = table2_ineq(66)
    rep = S.seesaw_run(q, 3, seed=1, refine=True)
    rho = rep.state()
    V = Q.shift_operator(3, 4).toarray()
    assert np.allclose(V @ rho @ V.T, rho, atol=1e-12)
    op = S.LocalBellOperator(q, rep.observables.ops)
    assert -np.real(np.trace(rho @ op.dense())) == pytest.approx(rep.beta, abs=1e-8)


def test_refine_reaches_row66_at_d3():
    q = table2_ineq(66)
    target = Q.max_violation(q, "free", starts=30).beta
    res = S.dmin_search(q, target, D_max=3, seeds=10, accuracy=1e-3)
    assert res.d_min == 3
    assert res.curve[3] == pytest.approx(target, abs=1e-3)
    assert res.curve[1] <= 16 + 1e-9


def test_real_and_complex_agree_on_qubit_start():
    q = table1_ineq(6)
    ops = qubit_ops([-1.1946, 0.0957])
    br, _, _ = S.polish(q, ops, real=True)
    bc, _, _ = S.polish(q, ops.astype(complex), real=False)
    assert br == pytest.approx(bc, abs=1e-6)
    assert br == pytest.approx(10.017234, abs=1e-5)


def test_memory_cap():
    with pytest.raises(SizeError):
        S.seesaw_run(table2_ineq(70), 6, mem_cap=1024)
    with pytest.raises(ValueError):
        S.seesaw_run(table2_ineq(70), 0)


# ----------------------------------------------------------------------------
# dN embedding
# ----------------------------------------------------------------------------

def test_embedding_preserves_class6_violation():
    q = table1_ineq(6)
    res = Q.max_violation(q, "free", starts=10)
    obs = np.stack([qubit_ops(p) for p in res.angles.phi])
    state, shared = S.embed_dN(res.state, obs)
    op = S.LocalBellOperator(q, shared.ops)
    assert -state.expectation(op) == pytest.approx(res.beta, abs=1e-10)
    rho = state.density_matrix()
    V = Q.shift_operator(6, 3)
    assert np.allclose((V @ rho) @ V.T.toarray(), rho, atol=1e-12)
    assert Q.is_density_matrix(rho)


def test_embedding_ensemble_members_are_shifts():
    rng = np.random.default_rng(3)
    psi = rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    obs = np.stack([qubit_ops(rng.uniform(0, 6, 2)) for _ in range(3)])
    state, _ = S.embed_dN(psi, obs)
    for k in range(3):
        assert np.allclose(Q.shift_state(state.ensemble[0], 6, 3, k), state.ensemble[k])


def test_embedding_rejects_mismatch_and_cap():
    obs = np.stack([qubit_ops([0, 1]) for _ in range(3)])
    with pytest.raises(DimensionError):
        S.embed_dN(np.ones(16) / 4, obs)
    with pytest.raises(SizeError):
        S.embed_dN(np.ones(8) / np.sqrt(8), obs, mem_cap=100)
