"""Acceptance criteria 1-13, one reported line each.

Run alone with ``pytest tests/test_acceptance.py -s``; each criterion prints a
``CRITERION k: PASS/FAIL`` line, and the lines are repeated at the end of the
pytest summary.  Criteria whose reference targets could not be reproduced are
expected failures: the FAIL line is printed with the measured values before
the assertion fails.
"""
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import scipy.optimize

from bellpoly import quantum as Q
from bellpoly import seesaw as S
from bellpoly.bounds import classical_bound, ns_bound
from bellpoly.core import TIInequality
from bellpoly.polytope import facet_enum, polya_bound, ti_vertices
from bellpoly.symmetry import classify

from conftest import facets, golden, nn5_example, report, table1_ineq, table2_ineq, table2_row

TESTS = Path(__file__).parent
_free_q: dict[int, float] = {}


def timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


def free_beta_q(rid, starts=50):
    if rid not in _free_q:
        _free_q[rid] = Q.max_violation(table2_ineq(rid), "free", starts=starts).beta
    return _free_q[rid]


# ----------------------------------------------------------------------------

def test_criterion_01_polya():
    polya_bound(3)
    vals, dt = timed(lambda: [polya_bound(n) for n in (3, 4, 5)])
    ok = vals == [24, 70, 208] and dt / 3 < 1e-3
    report(1, ok, f"polya 3/4/5 = {vals}, {dt / 3 * 1e6:.1f} us each")
    assert ok


def test_criterion_02_vertices():
    ti_vertices(3)
    counts, times = [], []
    for n in (3, 4, 5):
        vs, dt = timed(ti_vertices, n)
        counts.append(len(vs))
        times.append(dt)
    merges = ti_vertices(4).non_rotational_merges()
    ok = counts == [24, 68, 208] and max(times) < 1 and len(merges) == 2
    report(2, ok, f"vertices {counts}, n=4 coincidence pairs {len(merges)}, "
                  f"max {max(times):.3f} s")
    assert ok


def test_criterion_03_facets():
    counts, times = [], []
    limits = (1, 30, 1800)
    facet_enum(ti_vertices(3))                # compile the kernels before timing
    for n in (3, 4, 5):
        fl, dt = timed(facet_enum, ti_vertices(n))
        counts.append(len(fl))
        times.append(dt)
    ok = counts == [38, 1038, 34484] and all(t < lim for t, lim in zip(times, limits))
    report(3, ok, f"facets {counts} in {', '.join(f'{t:.1f}' for t in times)} s")
    assert ok


@pytest.mark.xfail(strict=True, reason="class counts 110/105 at n=4 and 2462 at n=5 differ from the "
                                       "reference 103 and 4198; see the decisions ledger")
def test_criterion_04_classes():
    t3 = classify(facets(3))
    f4 = facets(4)
    plain, ext = classify(f4), classify(f4, extension=True)
    rows_ok = all(t3.find(table1_ineq(r)) is not None
                  and t3.classes[t3.find(table1_ineq(r))].beta_c == table1_ineq(r).beta_c
                  for r in range(1, 7))
    for rid in range(1, 104):
        q = table2_ineq(rid)
        ci = ext.find(q)
        rows_ok &= ci is not None and ext.classes[ci].beta_c == q.beta_c
    t5 = classify(facet_enum(ti_vertices(5)))
    counts_ok = len(t3) == 6 and 103 in (len(plain), len(ext)) and len(t5) == 4198
    ok = rows_ok and counts_ok
    report(4, ok, f"classes n=3 {len(t3)}, n=4 {len(plain)} (with even-site extension {len(ext)}), "
                  f"n=5 {len(t5)}; want 6/103/4198; every table row matched with equal beta_C: {rows_ok}")
    assert ok


def test_criterion_05_ns_bounds():
    bad, worst = [], 0.0
    for rid in range(1, 104):
        q = table2_ineq(rid)
        (bn, cert), dt = timed(ns_bound, q)
        worst = max(worst, dt)
        if bn != Fraction(table2_row(rid)["beta_ns"]) or not cert.verify(q):
            bad.append(rid)
    bn6, cert6 = ns_bound(table1_ineq(6))
    fractional = sorted({table2_row(r)["beta_ns"] for r in range(1, 104)
                         if isinstance(table2_row(r)["beta_ns"], str)})
    ok = not bad and bn6 == 13 and cert6.verify(table1_ineq(6)) and worst < 5
    report(5, ok, f"103/103 exact with verified certificates (mismatches {bad}), fractions {fractional}, "
                  f"class #6 beta_N = {bn6}, slowest {worst:.2f} s")
    assert ok


def test_criterion_06_classical_bounds():
    classical_bound(table1_ineq(1))           # compile the sweep kernel before timing
    bad, worst = [], 0.0
    for rid in range(1, 7):
        q = table1_ineq(rid)
        (bc, _), dt = timed(classical_bound, q)
        worst = max(worst, dt)
        bad += [f"T1-{rid}"] if bc != q.beta_c else []
    for rid in range(1, 104):
        (bc, _), dt = timed(classical_bound, table2_ineq(rid))
        worst = max(worst, dt)
        bad += [f"T2-{rid}"] if bc != Fraction(table2_row(rid)["beta_c"]) else []
    (bc5, _), dt = timed(classical_bound, nn5_example())
    worst = max(worst, dt)
    ok = not bad and bc5 == 35 and worst < 1
    report(6, ok, f"tables 1-2 exact (mismatches {bad}), nearest-neighbour n=5 beta_C = {bc5}, "
                  f"slowest {worst * 1e3:.1f} ms")
    assert ok


def w3_value(starts=20):
    """Best violation of class #6 by the W state over shared qubit angles."""
    q = table1_ineq(6)
    w = Q.w_state()
    op = Q.BellOperator(q)
    rng = np.random.default_rng(0)
    best = -np.inf
    for _ in range(starts):
        r = scipy.optimize.minimize(lambda x: np.real(w @ op.matrix(np.tile(x, (3, 1))) @ w),
                                    rng.uniform(0, 2 * np.pi, 2), method="Nelder-Mead",
                                    options={"xatol": 1e-10, "fatol": 1e-12})
        best = max(best, -r.fun)
    return best


def test_criterion_07_quantum():
    gold = golden()
    off, structural, worst = [], [], 0.0
    for rid in range(1, 104):
        row = table2_row(rid)
        q = table2_ineq(rid)
        t = time.perf_counter()
        free = Q.max_violation(q, "free", starts=50).beta
        ti = Q.max_violation(q, "ti", starts=50).beta
        worst = max(worst, time.perf_counter() - t)
        _free_q[rid] = free
        bc = float(row["beta_c"])
        if abs(free - row["beta_q"]) > 0.02 or abs(ti - row["beta_q_ti"]) > 0.02:
            off.append((rid, round(free, 4), round(ti, 4)))
        if rid <= 20 and not (abs(free - bc) < 1e-6 and abs(ti - bc) < 1e-6):
            structural.append(rid)
        if 25 <= rid <= 63 and abs(free - ti) > 1e-4:
            structural.append(rid)
        if 64 <= rid <= 69 and abs(ti - bc) > 1e-6:
            structural.append(rid)
    c6 = Q.max_violation(table1_ineq(6), "free", starts=50).beta
    w3 = w3_value()
    nn = nn5_example()
    nn_ti = Q.max_violation(nn, "ti", starts=50).beta
    nn_free = Q.max_violation(nn, "free", starts=50).beta
    ok = (not off and not structural and abs(c6 - 10.02) <= 0.01 and abs(w3 - 9.85) <= 0.01
          and abs(nn_ti - 35.29) <= 0.02 and abs(nn_free - 36.21) <= 0.02 and worst < 120)
    assert gold["table1"]["beta_q"]["6"] == 10.02
    report(7, ok, f"103 rows within 0.02 (outside: {off}; structural misses {structural}), "
                  f"class #6 {c6:.4f}, W3 {w3:.4f}, n=5 TI {nn_ti:.4f} free {nn_free:.4f}, "
                  f"slowest row {worst:.1f} s")
    assert ok


def test_criterion_08_no_quantum_advantage():
    found = {}
    for rid in (21, 22, 23, 24):
        q = table2_ineq(rid)
        found[rid] = (Q.max_violation(q, "free", starts=500).beta, ns_bound(q)[0])
    ok = all(b <= float(q_c) + 1e-6 and bn > q_c
             for rid, (b, bn) in found.items()
             for q_c in [Fraction(table2_row(rid)["beta_c"])])
    detail = ", ".join(f"#{rid}: best {b:.6f}, beta_C {table2_row(rid)['beta_c']}, beta_N {bn}"
                       for rid, (b, bn) in found.items())
    report(8, ok, f"500 starts each; {detail}")
    assert ok


def test_criterion_09_ti_mixed_state():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 6))
        q = table2_ineq(int(rng.integers(1, 104))) if n == 4 else \
            TIInequality.from_coefficients(n, rng.integers(-3, 4, 2 + 2 * (n // 2) + n - 1).tolist())
        a = Q.MeasurementAngles.shared(n, *rng.uniform(0, 2 * np.pi, 2))
        psi = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
        psi /= np.linalg.norm(psi)
        rho = Q.ti_mixed_state(psi)
        worst = max(worst, abs(Q.violation_for_state(q, a, rho) - Q.violation_for_state(q, a, psi)))
    ok = worst < 1e-10
    report(9, ok, f"100 random triples, max |Tr(rho B) - <psi|B|psi>| = {worst:.2e}")
    assert ok


def _embedding_error(q):
    res = Q.max_violation(q, "free", starts=20)
    obs = np.stack([np.stack([Q.observable(p[0]), Q.observable(p[1])]) for p in res.angles.phi])
    state, shared = S.embed_dN(res.state, obs)
    value = -state.expectation(S.LocalBellOperator(q, shared.ops))
    return abs(value - res.beta), res.beta


def test_criterion_10_embedding():
    e6, b6 = _embedding_error(table1_ineq(6))
    e70, b70 = _embedding_error(table2_ineq(70))
    ok = e6 < 1e-10 and e70 < 1e-10
    report(10, ok, f"class #6 {b6:.6f} err {e6:.1e}; class #70 {b70:.6f} err {e70:.1e}")
    assert ok


@pytest.mark.xfail(strict=True, reason="rows 67, 68, 74 and 75 stay below the free qubit value for D <= 6 "
                                       "and row 70 needs D = 6; see the decisions ledger")
def test_criterion_11_seesaw():
    gold = golden()["table2"]
    missed, slow, dmin = [], [], {}
    for rid in range(64, 104):
        target = free_beta_q(rid)
        t = time.perf_counter()
        res = S.dmin_search(table2_ineq(rid), target, D_max=6, seeds=20, accuracy=1e-3)
        dt = time.perf_counter() - t
        dmin[rid] = res.d_min
        if res.d_min is None:
            missed.append((rid, round(target, 6), round(max(res.curve.values()), 6)))
        if dt > 600:
            slow.append(rid)
        print(f"  row {rid}: target {target:.6f} d_min {res.d_min} curve "
              f"{ {k: round(v, 6) for k, v in res.curve.items()} } {dt:.0f} s", flush=True)
    late4 = [r for r in gold["dmin_le_4"] if dmin[r] is None or dmin[r] > 4]
    late5 = [r for r in gold["dmin_le_5"] if dmin[r] is None or dmin[r] > 5]
    ok = not missed and not late4 and not late5 and not slow
    report(11, ok, f"rows 64-103 at D<=6, 20 seeds: not reached {missed}; "
                   f"listed <=4 but later {late4}; listed <=5 but later {late5}; over 10 min {slow}")
    assert ok


def symmetric_scan_overlap(psi, grid=400):
    """max |<e,e,e|psi>|^2 over a (theta, phase) grid, then local refinement."""
    t = psi.reshape((2,) * int(np.log2(psi.size)))
    th = np.linspace(0, np.pi / 2, grid)
    ph = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    vals = np.array([[Q._symmetric_overlap(t, a, b) for b in ph] for a in th])
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    r = scipy.optimize.minimize(lambda x: -Q._symmetric_overlap(t, x[0], x[1]), [th[i], ph[j]],
                                method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    return max(vals.max(), -r.fun)


def locality_summary():
    p3, p5 = Q.psi3(), Q.psi5()
    chsh = max(Q.chsh_max(r) for psi, n in ((p3, 3), (p5, 5))
               for r in Q.two_site_reductions(psi, n).values())
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    tsirelson = Q.chsh_max(np.outer(bell, bell))
    return chsh, tsirelson


@pytest.mark.xfail(strict=True, reason="with the squared-overlap definition E_G(psi3) = 0.4708 and "
                                       "E_G(psi5) = 0.7457; the reference 0.2726 and 0.4980 follow the "
                                       "unsquared overlap; see the decisions ledger")
def test_criterion_12_entanglement_and_locality():
    e3 = Q.geometric_entanglement(Q.psi3(), starts=40)
    e5 = Q.geometric_entanglement(Q.psi5(), starts=40)
    a3 = Q.geometric_entanglement(Q.psi3(), starts=40, amplitude=True)
    a5 = Q.geometric_entanglement(Q.psi5(), starts=40, amplitude=True)
    w_overlap = symmetric_scan_overlap(Q.w_state())
    chsh, tsirelson = locality_summary()
    eg_ok = abs(e3 - 0.2726) <= 5e-4 and abs(e5 - 0.4980) <= 1e-3
    loc_ok = chsh <= 2 + 1e-9 and abs(tsirelson - 2 * np.sqrt(2)) <= 1e-9
    ok = eg_ok and loc_ok
    report(12, ok, f"E_G(psi3) = {e3:.4f} (want 0.2726), E_G(psi5) = {e5:.4f} (want 0.4980); "
                   f"unsquared variant {a3:.4f} / {a5:.4f}; W3 scan E_G = {1 - w_overlap:.6f} "
                   f"(5/9 = {5 / 9:.6f}, reference 1/3); max CHSH over reductions {chsh:.4f}, "
                   f"Bell pair {tsirelson:.6f}")
    assert ok


def test_criterion_12_locality_part():
    """The CHSH half of criterion 12 holds on its own and is asserted here."""
    chsh, tsirelson = locality_summary()
    assert chsh <= 2 + 1e-9
    assert abs(tsirelson - 2 * np.sqrt(2)) <= 1e-9


PROPERTY_SUITES = [
    ("Hellmann-Feynman vs finite differences", "test_quantum.py", "hellmann_feynman"),
    ("LP duality certificates", "test_bounds.py", "duality or certificates or tampered"),
    ("facet tightness ranks", "test_polytope.py", "tight"),
    ("symmetry-orbit bound invariance", "test_symmetry.py", "orbit_bound_invariance"),
    ("brute-force facet oracle at n=3", "test_polytope.py", "brute_force_oracle"),
]


def test_criterion_13_property_suites():
    results = []
    for name, module, expr in PROPERTY_SUITES:
        out = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                              str(TESTS / module), "-k", expr],
                             capture_output=True, text=True, cwd=TESTS.parent)
        results.append((name, out.returncode == 0, out.stdout.strip().splitlines()[-1]))
    ok = all(r[1] for r in results)
    report(13, ok, "; ".join(f"{n}: {'ok' if good else 'FAILED'} ({last})" for n, good, last in results))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-s", "-v"]))
