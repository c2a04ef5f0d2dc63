"""Sparse optimal control on the unit interval.

Discretization of

    min_u  1/2 ||S u - y_d||^2 + sigma/2 ||u||^2 + int |u|^p   s.t.  u_a <= u <= u_b

with ``n`` interior nodes, mesh size ``h = 1 / (n + 1)`` and quadrature
weights ``h``.  ``S`` is either the identity or the solution operator of
``-y'' = u`` with homogeneous Dirichlet conditions (three-point stencil).
All norms are ``h``-weighted so that refining ``n`` approximates the same
continuous problem; ``f'(u)`` below always means the weighted (L2) gradient.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import _kernels
from .model import LpSeparableTerm, ProblemSpec, SmoothFunctional
from .sets import Box
from .subsolver import PGConfig, SubproblemSpec, solve_nonmonotone_pg, stationarity_residual

log = logging.getLogger(__name__)

TARGETS = ("zero", "hat", "sine")
OPERATORS = ("identity", "laplace1d")
HAT_PEAK = 8.0
NEWTON_POLISH_MAX_N = 4096


@dataclass(frozen=True)
class ControlGrid:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid needs at least one interior node")

    @property
    def h(self):
        return 1.0 / (self.n + 1)

    @property
    def nodes(self):
        return np.arange(1, self.n + 1) * self.h

    @property
    def weights(self):
        return np.full(self.n, self.h)


def make_target(kind, nodes):
    """Named desired states on the nodes: ``zero``, ``hat`` (peak ``HAT_PEAK`` at 1/2), ``sine``."""
    if kind == "zero":
        return np.zeros_like(nodes)
    if kind == "hat":
        return HAT_PEAK * np.maximum(0.0, 1.0 - np.abs(2.0 * nodes - 1.0))
    if kind == "sine":
        return np.sin(np.pi * nodes)
    raise ValueError(f"unknown target {kind!r}; expected one of {TARGETS}")


class Laplace1D:
    """Solution operator of ``-y'' = u`` on (0, 1), ``y(0) = y(1) = 0``.

    The stencil matrix ``A = tridiag(-1, 2, -1) / h^2`` is symmetric, hence
    ``S = A^{-1}`` is self-adjoint in the ``h``-weighted inner product.
    """

    def __init__(self, grid: ControlGrid):
        n, h = grid.n, grid.h
        self.n = n
        self._diag = np.full(n, 2.0 / h ** 2)
        self._off = np.full(n - 1, -1.0 / h ** 2)

    def apply(self, u):
        return _kernels.solve_tridiagonal(self._off, self._diag, self._off, np.asarray(u, dtype=float))

    adjoint = apply

    def matrix(self):
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self._off
        ab[1] = self._diag
        ab[2, :-1] = self._off
        return scipy.linalg.solve_banded((1, 1), ab, np.eye(self.n))


class Identity:
    def __init__(self, grid: ControlGrid):
        self.n = grid.n

    def apply(self, u):
        return np.asarray(u, dtype=float).copy()

    adjoint = apply

    def matrix(self):
        return np.eye(self.n)


@dataclass(frozen=True, eq=False)
class SparseControlInstance:
    grid: ControlGrid
    p: float
    sigma: float
    ua: np.ndarray
    ub: np.ndarray
    y_d: np.ndarray
    operator: str
    target: str = "custom"

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}; expected one of {OPERATORS}")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        n = self.grid.n
        ua = np.broadcast_to(np.asarray(self.ua, dtype=float), (n,)).copy()
        ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        if not (np.all(ua < 0) and np.all(ub > 0)):
            raise ValueError("bounds must satisfy ua < 0 < ub componentwise")
        object.__setattr__(self, "ua", ua)
        object.__setattr__(self, "ub", ub)
        y_d = np.asarray(self.y_d, dtype=float)
        if y_d.shape != (n,):
            raise ValueError(f"target has shape {y_d.shape}, expected ({n},)")
        op = Laplace1D(self.grid) if self.operator == "laplace1d" else Identity(self.grid)
        object.__setattr__(self, "S", op)

    @property
    def n(self):
        return self.grid.n

    def f_value(self, u):
        r = self.S.apply(u) - self.y_d
        h = self.grid.h
        return 0.5 * h * float(r @ r) + 0.5 * self.sigma * h * float(u @ u)

    def f_prime(self, u):
        """Weighted gradient ``S^*(S u - y_d) + sigma u``."""
        u = np.asarray(u, dtype=float)
        return self.S.adjoint(self.S.apply(u) - self.y_d) + self.sigma * u

    def q_term(self):
        return LpSeparableTerm(self.p, self.grid.weights)

    def objective(self, u):
        return self.f_value(u) + float(self.q_term().value(u))

    def problem(self):
        h = self.grid.h
        f = SmoothFunctional(self.n, self.f_value, lambda u: h * self.f_prime(u))
        return ProblemSpec(self.n, f, Box(self.ua, self.ub), q=self.q_term(),
                           metric=self.grid.weights, name=f"sparse-control-{self.target}")


def build_instance(n, p, sigma, bounds, target="hat", operator="laplace1d"):
    """Assemble an instance; ``bounds`` is ``(ua, ub)`` (scalars or arrays)."""
    grid = ControlGrid(int(n))
    ua, ub = bounds
    y_d = make_target(target, grid.nodes) if isinstance(target, str) else np.asarray(target, dtype=float)
    name = target if isinstance(target, str) else "custom"
    return SparseControlInstance(grid, float(p), float(sigma), ua, ub, y_d, operator, name)


@dataclass
class OCSolution:
    u: np.ndarray
    eta: np.ndarray
    objective: float
    support: np.ndarray
    residual: float
    iterations: int
    polished: bool = False


def _newton_polish(inst, u, tol_act, max_iter=30):
    """Newton iterations on the stationarity equations restricted to the free nonzero set.

    Components at zero or on a bound (within ``tol_act``) are frozen.  The
    polished point is kept only if it stays in the box and does not raise
    the objective by more than rounding.
    """
    free = (np.abs(u) > tol_act) & (u > inst.ua + tol_act) & (u < inst.ub - tol_act)
    if not np.any(free) or inst.n > NEWTON_POLISH_MAX_N:
        return u, False
    M = inst.S.matrix()
    H0 = (M.T @ M + inst.sigma * np.eye(inst.n))[np.ix_(free, free)]
    p = inst.p
    v = u.copy()
    sgn = np.sign(u[free])
    for _ in range(max_iter):
        a = np.abs(v[free])
        F = inst.f_prime(v)[free] + p * a ** (p - 1.0) * sgn
        if np.max(np.abs(F)) <= 1e-13 * max(1.0, np.max(np.abs(inst.f_prime(v)))):
            break
        H = H0 + np.diag(p * (p - 1.0) * a ** (p - 2.0))
        try:
            step = np.linalg.solve(H, F)
        except np.linalg.LinAlgError:
            return u, False
        trial = v.copy()
        trial[free] -= step
        if np.any(np.sign(trial[free]) != sgn) or np.any(trial < inst.ua) or np.any(trial > inst.ub):
            return u, False
        v = trial
    if inst.objective(v) > inst.objective(u) + 1e-12 * max(1.0, abs(inst.objective(u))):
        return u, False
    return v, True


def smooth_start(inst: SparseControlInstance, pg: Optional[PGConfig] = None):
    """Minimizer of the smooth part over the box (the ``|u|^p`` term dropped)."""
    P = inst.problem()
    spec = SubproblemSpec.from_problem(P)
    smooth = SubproblemSpec(P.n, spec.value, spec.grad, spec.lower, spec.upper, None, spec.metric)
    return solve_nonmonotone_pg(smooth, np.zeros(P.n), pg or PGConfig(tol_stat=1e-8, max_iter=20000)).x


def solve_oc(inst: SparseControlInstance, tol=1e-8, u0=None, tol_act=1e-10, pg: Optional[PGConfig] = None):
    """Stationary control for the instance.

    The start (unless given) is the minimizer of the smooth part over the
    box, which keeps the method away from the trivial stationary point
    ``u = 0``.  The proximal gradient result is then refined by Newton's
    method on the identified free support.
    """
    P = inst.problem()
    spec = SubproblemSpec.from_problem(P)
    cfg = pg or PGConfig(tol_stat=tol, max_iter=20000)
    if u0 is None:
        u0 = smooth_start(inst, cfg)
    r = solve_nonmonotone_pg(spec, u0, cfg)
    u, polished = _newton_polish(inst, r.x, tol_act)
    res = stationarity_residual(spec, u, cfg.t_res)
    if polished and res > max(r.residual, tol):
        u, polished, res = r.x, False, r.residual
    eta = -inst.f_prime(u)
    support = np.abs(u) > tol_act
    return OCSolution(u, eta, inst.objective(u), support, res, r.iterations, polished)


@dataclass
class ConditionCheck:
    name: str
    passed: bool
    count: int
    worst_index: int = -1
    worst_violation: float = 0.0


@dataclass
class SparseControlReport:
    checks: dict = field(default_factory=dict)
    tol_res: float = 0.0
    tol_act: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())

    def lines(self):
        out = []
        for c in self.checks.values():
            verdict = "PASS" if c.passed else "FAIL"
            out.append(f"({c.name}) {verdict}  n_checked={c.count}  worst_index={c.worst_index}  "
                       f"worst_violation={c.worst_violation!r}")
        return out


def _check(name, viol, mask, tol):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return ConditionCheck(name, True, 0)
    v = viol[idx]
    j = int(np.argmax(v))
    return ConditionCheck(name, bool(v[j] <= tol), int(idx.size), int(idx[j]), float(v[j]))


def verify_sparse_control(inst: SparseControlInstance, u, eta, tol_res=1e-6, tol_act=1e-8):
    """Check the optimality system with active sets taken from ``tol_act``.

    (a) ``||f'(u) + eta||_w <= tol_res``; (b) ``eta = p|u|^(p-2) u`` on the
    free nonzero set; (c) ``eta <= p|u_a|^(p-2) u_a`` where ``u`` sits on the
    lower bound; (d) ``eta >= p|u_b|^(p-2) u_b`` on the upper bound.
    """
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(u < inst.ua) or np.any(u > inst.ub):
        raise ValueError("control violates its bounds")
    p = inst.p
    rep = SparseControlReport(tol_res=tol_res, tol_act=tol_act)
    ra = inst.f_prime(u) + eta
    wnorm = float(np.sqrt(inst.grid.h * (ra @ ra)))
    rep.checks["a"] = ConditionCheck("a", wnorm <= tol_res, inst.n, int(np.argmax(np.abs(ra))), wnorm)

    free = (np.abs(u) > tol_act) & (u > inst.ua + tol_act) & (u < inst.ub - tol_act)
    g = np.zeros_like(u)
    g[free] = p * np.abs(u[free]) ** (p - 2.0) * u[free]
    rep.checks["b"] = _check("b", np.abs(eta - g), free, tol_res)

    at_a = u <= inst.ua + tol_act
    bound_a = p * np.abs(inst.ua) ** (p - 2.0) * inst.ua
    rep.checks["c"] = _check("c", eta - bound_a, at_a, tol_res)

    at_b = u >= inst.ub - tol_act
    bound_b = p * np.abs(inst.ub) ** (p - 2.0) * inst.ub
    rep.checks["d"] = _check("d", bound_b - eta, at_b, tol_res)
    return rep


def sparsity_stats(u, tol_act=1e-8):
    """``(support size, support fraction)`` with support ``{|u_i| > tol_act}``."""
    u = np.asarray(u, dtype=float)
    size = int(np.sum(np.abs(u) > tol_act))
    return size, (size / u.size if u.size else 0.0)


def write_solution_csv(path, inst, sol, tol_act=1e-8):
    """Columns: node, u, eta, active (1 where ``|u| > tol_act``)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u", "eta", "active"])
        for xi, ui, ei in zip(inst.grid.nodes, sol.u, sol.eta):
            w.writerow([repr(float(xi)), repr(float(ui)), repr(float(ei)), int(abs(ui) > tol_act)])
