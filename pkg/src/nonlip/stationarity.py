"""Stationarity certificates for ``min f + q  s.t.  G(x) in K, x in C``.

A multiplier rule at ``x`` is ``0 = f'(x) + xi + G'(x)^* lam + mu`` with
``xi`` in the subdifferential of ``q``, ``lam`` in the normal cone of ``K``
at ``G(x)`` and ``mu`` in the normal cone of the box ``C`` at ``x``.  For the
``|.|^p`` term the subdifferential is the singleton ``w p |x_i|^(p-2) x_i``
off the origin and unrestricted at the origin.

Membership verdicts are sign/equality tests; only face identification uses
the relative tolerance :data:`nonlip.sets.FACE_RTOL`.  Residuals are measured
in the dual norm of the instance (``sqrt(sum g_i^2 / metric_i)``).
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog, lsq_linear

from .model import ProblemSpec
from .sets import Ball, Box, Halfspace, NonpositiveOrthant, ZeroSet, _on_face, polyhedral_cone_intervals

MAX_CONE_DIM = 10

HOLDS = "Holds"
FAILS = "Fails"
UNSUPPORTED = "Unsupported"

GMFCQ_SCOPE_NOTE = ("GMFCQ is a sufficient qualification condition; the uniform qualification "
                    "condition is not checked")


class Unsupported(TypeError):
    """The problem class has no exact certificate routine."""


def _subdiff_interval(P, x):
    """Per-component interval of the subdifferential of ``q`` at ``x``."""
    lo = np.zeros(P.n)
    hi = np.zeros(P.n)
    if P.q is None:
        return lo, hi
    w, p = P.q.weights, P.q.p
    nz = x != 0
    g = np.zeros(P.n)
    g[nz] = w[nz] * p * np.abs(x[nz]) ** (p - 2.0) * x[nz]
    free = (~nz) & (w > 0)
    lo = np.where(free, -np.inf, g)
    hi = np.where(free, np.inf, g)
    return lo, hi


def _ensure_supported(P):
    if P.K is not None and not isinstance(P.K, (Box, NonpositiveOrthant, ZeroSet, Ball, Halfspace)):
        raise Unsupported(f"no normal-cone routine for {type(P.K).__name__}")


def _verdicts(ok):
    return ["ok" if b else "fail" for b in np.atleast_1d(ok)]


def _box_cone_ok(C, x, mu):
    """Componentwise ``mu_i in N_C(x)_i``; False where ``x_i`` leaves the box."""
    lo, hi = C.component_cone(x)
    inside = (x >= C.lower) | _on_face(x, C.lower)
    inside &= (x <= C.upper) | _on_face(x, C.upper)
    return inside & (mu >= lo) & (mu <= hi)


@dataclass
class MStatCertificate:
    x: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    residual: float
    lam_verdict: List[str]
    mu_verdict: List[str]
    xi_verdict: List[str]

    @property
    def memberships_ok(self):
        return all(v == "ok" for v in self.lam_verdict + self.mu_verdict + self.xi_verdict)

    def is_m_stationary(self, eps):
        return self.memberships_ok and self.residual <= eps

    def to_dict(self):
        return {
            "x": [float(v) for v in self.x],
            "lambda": [float(v) for v in self.lam],
            "mu": [float(v) for v in self.mu],
            "xi": [float(v) for v in self.xi],
            "residual": float(self.residual),
            "lambda_verdict": list(self.lam_verdict),
            "mu_verdict": list(self.mu_verdict),
            "xi_verdict": list(self.xi_verdict),
        }


def multiplier_rule_vector(P, x, lam, mu, xi):
    """``f'(x) + xi + G'(x)^* lam + mu`` (Euclidean)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(P.f.grad(x), dtype=float) + np.asarray(xi, dtype=float) + np.asarray(mu, dtype=float)
    if P.G is not None and len(lam):
        v = v + np.asarray(P.G.adjoint(x, np.asarray(lam, dtype=float)), dtype=float)
    return v


def m_stat_residual(P: ProblemSpec, x, lam, mu, xi):
    """Residual and membership verdicts of a candidate multiplier rule."""
    _ensure_supported(P)
    x = np.asarray(x, dtype=float)
    lam = np.zeros(P.m) if lam is None else np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if x.shape != (P.n,) or mu.shape != (P.n,) or xi.shape != (P.n,) or lam.shape != (P.m,):
        raise ValueError("certificate dimensions do not match the problem")
    res = P.dual_norm(multiplier_rule_vector(P, x, lam, mu, xi))
    if P.G is not None:
        lam_ok = P.K.normal_cone_contains(np.asarray(P.G.value(x), dtype=float), lam)
    else:
        lam_ok = True
    lo, hi = _subdiff_interval(P, x)
    xi_ok = (xi >= lo) & (xi <= hi)
    mu_ok = _box_cone_ok(P.C, x, mu)
    return MStatCertificate(x, lam, mu, xi, res, _verdicts(lam_ok), _verdicts(mu_ok), _verdicts(xi_ok))


def certificate_from_dict(P, doc):
    """Recompute a certificate from its serialized fields."""
    return m_stat_residual(P, doc["x"], doc["lambda"], doc["mu"], doc["xi"])


def certificate_to_json(cert):
    return json.dumps(cert.to_dict(), indent=2, sort_keys=True)


def _cone_generators(K, y):
    """Normal cone ``N_K(y)`` as ``{B t : lo <= t <= hi}``, or None if ``y`` is not in ``K``."""
    if isinstance(K, (ZeroSet, NonpositiveOrthant, Box)):
        if isinstance(K, NonpositiveOrthant) and np.any((y > 0) & ~_on_face(y, 0.0)):
            return None
        if isinstance(K, Box) and not (np.all((y >= K.lower) | _on_face(y, K.lower))
                                       and np.all((y <= K.upper) | _on_face(y, K.upper))):
            return None
        if isinstance(K, ZeroSet) and not np.all(_on_face(y, 0.0)):
            return None
        lo, hi = polyhedral_cone_intervals(K, y)
        return np.eye(K.dim), lo, hi
    if isinstance(K, Ball):
        d = y - K.center
        nrm = float(np.linalg.norm(d))
        if nrm > K.radius * (1 + 1e-12):
            return None
        if nrm < K.radius * (1 - 1e-12):
            return np.zeros((K.dim, 0)), np.zeros(0), np.zeros(0)
        return (d / nrm).reshape(-1, 1), np.zeros(1), np.full(1, np.inf)
    if isinstance(K, Halfspace):
        s = float(y @ K.a)
        if s > K.b + 1e-12 * max(1.0, abs(K.b)):
            return None
        if not _on_face(s, K.b):
            return np.zeros((K.dim, 0)), np.zeros(0), np.zeros(0)
        return K.a.reshape(-1, 1), np.zeros(1), np.full(1, np.inf)
    raise Unsupported(f"no normal-cone routine for {type(K).__name__}")


def _best_split(P, x, g):
    """Split ``-g`` into ``xi + mu`` as closely as the intervals allow."""
    q_lo, q_hi = _subdiff_interval(P, x)
    c_lo, c_hi = P.C.component_cone(x)
    xi = np.where(np.isfinite(q_lo), q_lo, 0.0)
    free = ~np.isfinite(q_lo)
    xi = np.where(free, -g, xi)
    mu = np.where(free, 0.0, np.clip(-g - xi, c_lo, c_hi))
    return xi, mu


def m_stat_min_residual(P: ProblemSpec, x, return_certificate=False):
    """Smallest multiplier-rule residual over all admissible ``(lam, mu, xi)``.

    The search is a bounded linear least-squares problem: the normal cone of
    ``K`` at ``G(x)`` is written as ``{B t : lo <= t <= hi}`` and
    ``xi + mu`` ranges over the per-component intervals of
    ``dq(x) + N_C(x)``.  Infeasible points (``G(x)`` outside ``K`` or ``x``
    outside ``C``) return ``inf``.
    """
    _ensure_supported(P)
    x = np.asarray(x, dtype=float)
    if P.m > MAX_CONE_DIM and isinstance(P.K, (ZeroSet, NonpositiveOrthant, Box)):
        raise Unsupported(f"cone search limited to m <= {MAX_CONE_DIM}, got m={P.m}")
    if not bool(np.all(_box_cone_ok(P.C, x, np.zeros(P.n)))):
        return (math.inf, None) if return_certificate else math.inf
    g = np.asarray(P.f.grad(x), dtype=float)
    if P.G is not None:
        gen = _cone_generators(P.K, np.asarray(P.G.value(x), dtype=float))
        if gen is None:
            return (math.inf, None) if return_certificate else math.inf
        B, t_lo, t_hi = gen
        J = P.G.jacobian(x)
        M = J.T @ B
    else:
        M = np.zeros((P.n, 0))
        t_lo = t_hi = np.zeros(0)
    q_lo, q_hi = _subdiff_interval(P, x)
    c_lo, c_hi = P.C.component_cone(x)
    s_lo, s_hi = q_lo + c_lo, q_hi + c_hi
    # free rows (an unbounded interval in both directions) drop out
    keep = ~(np.isneginf(s_lo) & np.isposinf(s_hi))
    scale = 1.0 / np.sqrt(P.metric_weights())
    nt = M.shape[1]
    ns = int(np.sum(keep))
    A = np.hstack([M[keep], np.eye(P.n)[keep][:, keep]]) * scale[keep, None]
    b = -g[keep] * scale[keep]
    lo = np.concatenate([t_lo, s_lo[keep]])
    hi = np.concatenate([t_hi, s_hi[keep]])
    if A.shape[0] == 0:
        t = np.zeros(nt)
        res = 0.0
    elif A.shape[1] == 0:
        t = np.zeros(0)
        res = float(np.linalg.norm(b))
    else:
        # lsq_linear needs lo < hi; pinned variables are moved to the right-hand side
        fixed = lo == hi
        z = np.where(fixed, lo, 0.0)
        rhs = b - A[:, fixed] @ z[fixed]
        if np.any(~fixed):
            sol = lsq_linear(A[:, ~fixed], rhs, bounds=(lo[~fixed], hi[~fixed]), method="bvls", tol=1e-15)
            z[~fixed] = sol.x
        t = z[:nt]
        res = float(np.linalg.norm(A @ z - b))
    if not return_certificate:
        return res
    lam = B @ t if P.G is not None else np.zeros(0)
    xi, mu = _best_split(P, x, g + (J.T @ lam if P.G is not None else 0.0))
    return res, m_stat_residual(P, x, lam, mu, xi)


@dataclass(frozen=True)
class ApproxStatEntry:
    """One element ``(x, x', x'', y, eta, lam, mu, xi)`` of an approximate-stationarity sequence.

    ``eta`` may be None, in which case it is computed from the identity
    ``eta = f'(x) + xi + G'(x')^* lam + mu``.
    """

    k: int
    x: np.ndarray
    xp: np.ndarray
    xpp: np.ndarray
    y: np.ndarray
    eta: Optional[np.ndarray]
    lam: np.ndarray
    mu: np.ndarray
    xi: np.ndarray


ApproxStatSequence = Union[Sequence[ApproxStatEntry], Callable[[int], ApproxStatEntry]]


@dataclass
class ApproxStatRow:
    k: int
    eps: float
    eta_norm: float
    identity_error: float
    xi_ok: bool
    lam_ok: bool
    mu_ok: bool

    @property
    def ok(self):
        return self.xi_ok and self.lam_ok and self.mu_ok


@dataclass
class ApproxStatReport:
    rows: List[ApproxStatRow] = field(default_factory=list)

    @property
    def memberships_ok(self):
        return all(r.ok for r in self.rows)

    @property
    def decreasing(self):
        e = [r.eps for r in self.rows]
        return all(b <= a for a, b in zip(e, e[1:]))

    @property
    def eps(self):
        return [r.eps for r in self.rows]


def approx_stat_check(P: ProblemSpec, seq: ApproxStatSequence, xbar, k_list=None):
    """Check memberships and compute the approximation level of each entry.

    For every entry: ``xi in dq(x)``, ``lam in N_K(G(x') - y)`` and
    ``mu in N_C(x'')``.  The level is ``max(||eta||, ||x - xbar||,
    ||x' - xbar||, ||x'' - xbar||, ||y||, |q(x) - q(xbar)|)`` where ``eta``
    is recomputed from the multiplier identity.  When the entry carries its
    own ``eta`` the mismatch is reported as ``identity_error``.
    """
    _ensure_supported(P)
    xbar = np.asarray(xbar, dtype=float)
    if callable(seq):
        entries = [seq(k) for k in k_list]
    else:
        entries = list(seq) if k_list is None else [e for e in seq if e.k in set(k_list)]
    q_bar = 0.0 if P.q is None else float(P.q.value(xbar))
    report = ApproxStatReport()
    for e in entries:
        x, xp, xpp = (np.asarray(v, dtype=float) for v in (e.x, e.xp, e.xpp))
        lam = np.asarray(e.lam, dtype=float)
        mu = np.asarray(e.mu, dtype=float)
        xi = np.asarray(e.xi, dtype=float)
        y = np.asarray(e.y, dtype=float)
        eta = np.asarray(P.f.grad(x), dtype=float) + xi + mu
        if P.G is not None:
            eta = eta + np.asarray(P.G.adjoint(xp, lam), dtype=float)
            lam_ok = P.K.normal_cone_contains(np.asarray(P.G.value(xp), dtype=float) - y, lam)
        else:
            lam_ok = True
        ident = 0.0 if e.eta is None else P.dual_norm(eta - np.asarray(e.eta, dtype=float))
        q_lo, q_hi = _subdiff_interval(P, x)
        xi_ok = bool(np.all((xi >= q_lo) & (xi <= q_hi)))
        mu_ok = bool(np.all(_box_cone_ok(P.C, xpp, mu)))
        eta_norm = P.dual_norm(eta)
        q_gap = 0.0 if P.q is None else abs(float(P.q.value(x)) - q_bar)
        eps = max(eta_norm, P.primal_norm(x - xbar), P.primal_norm(xp - xbar),
                  P.primal_norm(xpp - xbar), float(np.linalg.norm(y)), q_gap)
        report.rows.append(ApproxStatRow(e.k, eps, eta_norm, ident, xi_ok, bool(lam_ok), mu_ok))
    return report


def example_5_1_sequence(k):
    """Explicit sequence for ``min x  s.t.  x^2 <= 0``: ``x = 0, x' = -1/(2k), y = 1/(4k^2), lam = k``."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    z = np.zeros(1)
    return ApproxStatEntry(
        k=k,
        x=z.copy(),
        xp=np.array([-1.0 / (2 * k)]),
        xpp=z.copy(),
        y=np.array([1.0 / (4.0 * k * k)]),
        eta=z.copy(),
        lam=np.array([float(k)]),
        mu=z.copy(),
        xi=z.copy(),
    )


def alm_sequence(P: ProblemSpec, steps):
    """Approximate-stationarity tuples built from ALM outer iterations.

    With ``z = G(x_{k+1}) + u_k / theta_k`` the tuple uses
    ``x = x' = x'' = x_{k+1}``, ``y = G(x_{k+1}) - P_K(z)``, the updated
    multiplier ``lam_{k+1}`` (which lies in ``N_K(P_K(z))``) and the
    ``xi``/``mu`` that bring the multiplier identity closest to zero.
    """
    out = []
    for s in steps:
        x = np.asarray(s.x, dtype=float)
        g = np.asarray(P.f.grad(x), dtype=float)
        if P.G is not None:
            gx = np.asarray(P.G.value(x), dtype=float)
            z = gx + s.u / s.theta
            y = gx - P.K.project(z)
            g = g + np.asarray(P.G.adjoint(x, s.lam), dtype=float)
        else:
            y = np.zeros(0)
        xi, mu = _best_split(P, x, g)
        out.append(ApproxStatEntry(s.k, x, x, x, y, None, np.asarray(s.lam, dtype=float), mu, xi))
    return out


@dataclass
class QualReport:
    verdict: str
    witness: Optional[np.ndarray] = None
    notes: str = GMFCQ_SCOPE_NOTE


def gmfcq_check(P: ProblemSpec, x):
    """Test whether ``lam = 0`` is the only ``lam in N_K(G(x))`` with ``-G'(x)^* lam in N_C(x)``.

    Every nonzero solution can be scaled to ``||lam||_inf = 1``, so some
    component equals ``+1`` or ``-1``.  For each component and admissible
    sign one linear feasibility problem is solved exactly (HiGHS); a feasible
    one yields the witness.
    """
    if P.G is None:
        return QualReport(HOLDS, notes=GMFCQ_SCOPE_NOTE + "; no constraint map")
    if not isinstance(P.K, (NonpositiveOrthant, ZeroSet, Box)):
        return QualReport(UNSUPPORTED, notes=f"K of type {type(P.K).__name__} is not supported")
    if P.m > MAX_CONE_DIM:
        return QualReport(UNSUPPORTED, notes=f"m={P.m} exceeds {MAX_CONE_DIM}")
    x = np.asarray(x, dtype=float)
    gen = _cone_generators(P.K, np.asarray(P.G.value(x), dtype=float))
    if gen is None:
        return QualReport(HOLDS, notes=GMFCQ_SCOPE_NOTE + "; G(x) lies outside K, the cone is empty")
    _, lam_lo, lam_hi = gen
    J = P.G.jacobian(x)
    c_lo, c_hi = P.C.component_cone(x)
    # c_lo <= -(J^T lam)_i <= c_hi
    rows, rhs = [], []
    for i in range(P.n):
        if np.isfinite(c_hi[i]):
            rows.append(-J[:, i])
            rhs.append(c_hi[i])
        if np.isfinite(c_lo[i]):
            rows.append(J[:, i])
            rhs.append(-c_lo[i])
    A_ub = np.array(rows) if rows else None
    b_ub = np.array(rhs) if rows else None
    box_lo = np.maximum(lam_lo, -1.0)
    box_hi = np.minimum(lam_hi, 1.0)
    for j in range(P.m):
        for sign in (1.0, -1.0):
            if not lam_lo[j] <= sign <= lam_hi[j]:
                continue
            bounds = [(box_lo[i], box_hi[i]) for i in range(P.m)]
            bounds[j] = (sign, sign)
            sol = linprog(np.zeros(P.m), A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if sol.status == 0:
                lam = np.clip(sol.x, box_lo, box_hi)
                lam[j] = sign
                return QualReport(FAILS, lam, GMFCQ_SCOPE_NOTE)
    return QualReport(HOLDS, None, GMFCQ_SCOPE_NOTE)
