import json

import numpy as np
import pytest

from nonlip.alm import CONVERGED, AlmConfig, run_alm
from nonlip.instances import convex_qp_data, example_5_1, nonconvex_circle, nonconvex_double_well, quadratic
from nonlip.model import LpSeparableTerm, ProblemSpec, SmoothFunctional, SmoothMap
from nonlip.sets import Box, NonpositiveOrthant, ZeroSet
from nonlip.sparse_control import build_instance, solve_oc
from nonlip.stationarity import (
    FAILS,
    HOLDS,
    ApproxStatEntry,
    alm_sequence,
    approx_stat_check,
    certificate_from_dict,
    certificate_to_json,
    example_5_1_sequence,
    gmfcq_check,
    m_stat_min_residual,
    m_stat_residual,
)


def kkt_oracle(Q, c, A, b):
    n, m = Q.shape[0], A.shape[0]
    sol = np.linalg.solve(np.block([[Q, A.T], [A, np.zeros((m, m))]]), np.r_[-c, b])
    return sol[:n], sol[n:]


def rank_by_elimination(J, tol=1e-10):
    """Row-echelon rank with partial pivoting."""
    A = np.array(J, dtype=float)
    r = 0
    for col in range(A.shape[1]):
        if r == A.shape[0]:
            break
        piv = r + int(np.argmax(np.abs(A[r:, col])))
        if abs(A[piv, col]) <= tol:
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r + 1:] -= np.outer(A[r + 1:, col] / A[r, col], A[r])
        r += 1
    return r


def test_example_5_1_certificates():
    P = example_5_1()
    for lam in (0.0, 1.0, 1e6):
        c = m_stat_residual(P, np.zeros(1), np.array([lam]), np.zeros(1), np.zeros(1))
        assert c.residual == 1.0 and c.memberships_ok
    assert m_stat_min_residual(P, np.zeros(1)) == pytest.approx(1.0, abs=1e-12)
    q = gmfcq_check(P, np.zeros(1))
    assert q.verdict == FAILS and q.witness[0] == 1.0
    assert "sufficient" in q.notes


def test_sequence_entries():
    e1, e2 = example_5_1_sequence(1), example_5_1_sequence(2)
    assert (e1.xp[0], e1.y[0], e1.lam[0]) == (-0.5, 0.25, 1.0)
    assert (e2.xp[0], e2.y[0], e2.lam[0]) == (-0.25, 0.0625, 2.0)
    for k in (1, 3, 10, 1000):
        e = example_5_1_sequence(k)
        assert e.xp[0] ** 2 - e.y[0] == pytest.approx(0.0, abs=1e-16)
    with pytest.raises(ValueError):
        example_5_1_sequence(0)


def test_example_5_1_approx_stat():
    P = example_5_1()
    rep = approx_stat_check(P, example_5_1_sequence, np.zeros(1), [1, 10, 100, 1000])
    assert rep.memberships_ok and rep.decreasing
    for row in rep.rows:
        assert row.eta_norm == 0.0 and row.identity_error == 0.0
        assert row.eps == 1.0 / (2 * row.k)


def test_perturbed_sequence():
    P = example_5_1()
    seq = []
    for k in (1, 10, 100):
        e = example_5_1_sequence(k)
        seq.append(ApproxStatEntry(k, e.x, e.xp, e.xpp, e.y, None, np.array([k + 1.0]), e.mu, e.xi))
    rep = approx_stat_check(P, seq, np.zeros(1))
    assert rep.memberships_ok
    for row in rep.rows:
        assert row.eps == pytest.approx(1.0 / row.k, rel=1e-14)


def test_zero_sequence_unconstrained():
    Q = np.eye(2)
    P = quadratic(Q, np.zeros(2), lower=np.array([-1.0, -1.0]), upper=np.array([1.0, 1.0]))
    z = np.zeros(2)
    seq = [ApproxStatEntry(k, z, z, z, np.zeros(0), z, np.zeros(0), z, z) for k in (1, 2)]
    rep = approx_stat_check(P, seq, z)
    assert rep.memberships_ok and rep.eps == [0.0, 0.0]
    c = m_stat_residual(P, z, None, z, z)
    assert c.residual == 0.0 and c.memberships_ok


@pytest.mark.parametrize("seed", range(3))
def test_convex_qp_kkt_certificate(seed):
    Q, c, A, b = convex_qp_data(seed)
    P = quadratic(Q, c, A, b)
    x, lam = kkt_oracle(Q, c, A, b)
    cert = m_stat_residual(P, x, lam, np.zeros(P.n), np.zeros(P.n))
    assert cert.residual <= 1e-10
    assert m_stat_min_residual(P, x) <= 1e-10
    assert gmfcq_check(P, x).verdict == HOLDS
    assert rank_by_elimination(P.G.jacobian(x)) == P.m


def test_gmfcq_holds_interior_of_orthant():
    f = SmoothFunctional(2, lambda x: 0.0, lambda x: np.zeros(2))
    G = SmoothMap(2, 1, lambda x: np.array([x[0] - 5.0]), lambda x, w: np.array([w[0], 0.0]))
    P = ProblemSpec(2, f, Box.unbounded(2), G=G, K=NonpositiveOrthant(1))
    assert gmfcq_check(P, np.zeros(2)).verdict == HOLDS


def test_gmfcq_with_box_face():
    # x1 on its lower bound; with G = x1 the multiplier 1 is normal to C there, with G = -x1 it is not
    f = SmoothFunctional(2, lambda x: 0.0, lambda x: np.zeros(2))
    C = Box([0.0, -1.0], [1.0, 1.0])
    for sgn, verdict in ((1.0, FAILS), (-1.0, HOLDS)):
        G = SmoothMap(2, 1, lambda x, s=sgn: np.array([s * x[0]]), lambda x, w, s=sgn: np.array([s * w[0], 0.0]))
        rep = gmfcq_check(ProblemSpec(2, f, C, G=G, K=NonpositiveOrthant(1)), np.zeros(2))
        assert rep.verdict == verdict
        if verdict == FAILS:
            assert np.max(np.abs(rep.witness)) == 1.0


def test_certificate_soundness(rng):
    # exact certificate with q present; perturbing xi on a nonzero component flips its verdict
    n = 4
    Q = np.eye(n)
    v = np.array([2.0, -1.5, 0.05, 3.0])
    P = quadratic(Q, -v, p=0.5, q_weight=0.3)
    r = run_alm(P, AlmConfig(tol_stat=1e-12))
    x = r.x
    res, cert = m_stat_min_residual(P, x, return_certificate=True)
    assert cert.memberships_ok and cert.residual <= 1e-10
    for i in np.flatnonzero(x != 0):
        xi = cert.xi.copy()
        xi[i] += 1e-9
        bad = m_stat_residual(P, x, cert.lam, cert.mu, xi)
        assert bad.xi_verdict[i] == "fail" and not bad.is_m_stationary(1.0)


def test_certificate_roundtrip(rng):
    Q, c, A, b = convex_qp_data(1)
    P = quadratic(Q, c, A, b)
    x, lam = kkt_oracle(Q, c, A, b)
    cert = m_stat_residual(P, x, lam, np.zeros(P.n), np.zeros(P.n))
    doc = json.loads(certificate_to_json(cert))
    again = certificate_from_dict(P, doc)
    assert abs(again.residual - cert.residual) <= 1e-14
    assert again.lam_verdict == cert.lam_verdict and again.mu_verdict == cert.mu_verdict


def test_scaling_invariance(rng):
    for seed in range(3):
        Q, c, A, b = convex_qp_data(seed)
        x = rng.standard_normal(len(c))
        P1 = quadratic(Q, c, A, b, constraint="ineq", lower=x - 1, upper=x + 0.5)
        P3 = quadratic(3.0 * Q, 3.0 * c, A, b, constraint="ineq", lower=x - 1, upper=x + 0.5)
        r1 = m_stat_min_residual(P1, x)
        r3 = m_stat_min_residual(P3, x)
        if np.isfinite(r1):
            assert r3 == pytest.approx(3.0 * r1, rel=1e-9, abs=1e-12)


def test_alm_tuples_are_approximately_stationary():
    runs = []
    for seed in range(5):
        P = quadratic(*convex_qp_data(seed))
        runs.append((P, run_alm(P)))
    for P in (nonconvex_circle(), nonconvex_double_well()):
        runs.append((P, run_alm(P, x0=np.array([0.3, -0.2]))))
    for P, r in runs:
        assert r.status == CONVERGED
        rep = approx_stat_check(P, alm_sequence(P, r.steps), r.x)
        assert rep.memberships_ok
        assert rep.rows[-1].eps < 1e-5


def test_sparse_control_cross_check():
    inst = build_instance(63, 0.5, 1e-4, (-1000.0, 1000.0), "hat", "laplace1d")
    sol = solve_oc(inst)
    assert m_stat_min_residual(inst.problem(), sol.u) <= 1e-6


def test_unsupported_dimension():
    from nonlip.stationarity import Unsupported
    m = 11
    f = SmoothFunctional(1, lambda x: 0.0, lambda x: np.zeros(1))
    G = SmoothMap(1, m, lambda x: np.zeros(m), lambda x, w: np.zeros(1))
    P = ProblemSpec(1, f, Box.unbounded(1), G=G, K=ZeroSet(m))
    with pytest.raises(Unsupported):
        m_stat_min_residual(P, np.zeros(1))
    assert gmfcq_check(P, np.zeros(1)).verdict == "Unsupported"
