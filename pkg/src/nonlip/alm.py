"""Safeguarded augmented Lagrangian method.

Each outer iteration clamps the multiplier estimate into a bounded box,
minimizes the partial augmented Lagrangian ``L_theta(., u)`` over the box
``C`` (``C`` is never penalized), updates the multiplier from the shifted
constraint residual and increases ``theta`` unless the progress measure
``V_theta`` dropped by the factor ``tau``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .model import ProblemSpec, penalty_progress
from .subsolver import (
    STATIONARY,
    NonFiniteError,
    PGConfig,
    SubproblemSpec,
    brute_force_global,
    solve_nonmonotone_pg,
)

log = logging.getLogger(__name__)

CONVERGED = "Converged"
INFEASIBLE_STATIONARY = "InfeasibleStationary"
ITER_LIMIT = "IterLimit"
PENALTY_LIMIT = "PenaltyLimit"

TRACE_COLUMNS = ("k", "theta", "V", "inner_iters", "inner_residual",
                 "lambda_inf", "u_inf", "objective", "feasibility")


class SubproblemError(RuntimeError):
    """A subproblem solve failed; the message names the outer iteration."""


@dataclass
class AlmConfig:
    """Outer-loop parameters.

    ``subsolver`` is ``"pg"`` (nonmonotone proximal gradient, inexact
    stationary points) or ``"bruteforce"`` (grid search refined until the
    reported global gap is at most ``eps0 / (k + 1)``).  The brute-force
    mode needs a finite search box, taken from ``bf_lower``/``bf_upper``
    intersected with ``C``.
    """

    theta0: float = 10.0
    gamma: float = 10.0
    tau: float = 0.5
    b_max: float = 1e20
    tol_feas: float = 1e-6
    tol_stat: float = 1e-6
    theta_max: float = 1e12
    k_max: int = 200
    subsolver: str = "pg"
    pg: PGConfig = field(default_factory=PGConfig)
    eps0: float = 1.0
    bf_lower: Optional[np.ndarray] = None
    bf_upper: Optional[np.ndarray] = None
    bf_h0: float = 0.05
    bf_tol: float = 1e-2

    def __post_init__(self):
        if not self.theta0 > 0:
            raise ValueError("theta0 must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not (0 < self.b_max < np.inf):
            raise ValueError("safeguard bound must be positive and finite")
        if self.subsolver not in ("pg", "bruteforce"):
            raise ValueError(f"unknown subsolver {self.subsolver!r}")
        if self.tol_feas <= 0 or self.tol_stat <= 0 or self.k_max < 1:
            raise ValueError("tolerances must be positive and k_max >= 1")


@dataclass
class AlmState:
    k: int
    x: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    theta: float
    V_prev: Optional[float] = None


@dataclass(frozen=True)
class TraceRow:
    k: int
    theta: float
    V: float
    inner_iters: int
    inner_residual: float
    lambda_inf: float
    u_inf: float
    objective: float
    feasibility: float

    def as_tuple(self):
        return tuple(getattr(self, c) for c in TRACE_COLUMNS)


@dataclass(frozen=True)
class OuterStep:
    """Data of one outer iteration: ``x_{k+1}``, ``u_k``, ``theta_k``, ``lambda_{k+1}``."""

    k: int
    x: np.ndarray
    u: np.ndarray
    theta: float
    lam: np.ndarray


@dataclass
class AlmResult:
    x: np.ndarray
    lam: np.ndarray
    theta: float
    status: str
    trace: List[TraceRow]
    steps: List[OuterStep] = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.trace)

    @property
    def feasibility(self):
        return self.trace[-1].feasibility if self.trace else math.nan

    @property
    def inner_residual(self):
        return self.trace[-1].inner_residual if self.trace else math.nan


def safeguard(lam, b_max):
    """Projection of ``lam`` onto the box ``[-b_max, b_max]^m``."""
    return np.clip(np.asarray(lam, dtype=float), -b_max, b_max)


def multiplier_update(P: ProblemSpec, x_new, u, theta):
    """``theta [G(x) + u/theta - P_K(G(x) + u/theta)]``."""
    if theta <= 0:
        raise ValueError("penalty parameter must be positive")
    z = np.asarray(P.G.value(x_new), dtype=float) + np.asarray(u, dtype=float) / theta
    return theta * (z - P.K.project(z))


def penalty_update(V_cur, V_prev, theta, tau, gamma, k):
    """Keep ``theta`` at ``k = 0`` or if ``V_cur <= tau V_prev``, else scale by ``gamma``."""
    if theta <= 0:
        raise ValueError("penalty parameter must be positive")
    if k == 0:
        return theta
    if V_prev is None:
        raise ValueError(f"previous progress value missing at k={k}")
    return theta if V_cur <= tau * V_prev else gamma * theta


def feasibility_residual(P: ProblemSpec, x):
    """Projected-gradient norm of ``0.5 dist_K^2(G(.))`` over ``C``.

    Small values mean ``x`` is stationary for the constraint violation, the
    situation reported as ``InfeasibleStationary``.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(P.G.value(x), dtype=float)
    grad = np.asarray(P.G.adjoint(x, g - P.K.project(g)), dtype=float) / P.metric_weights()
    return P.primal_norm(x - P.C.project(x - grad))


def _bf_box(P, cfg):
    lo = P.C.lower if cfg.bf_lower is None else np.maximum(P.C.lower, cfg.bf_lower)
    hi = P.C.upper if cfg.bf_upper is None else np.minimum(P.C.upper, cfg.bf_upper)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("brute-force subsolver needs a finite search box (bf_lower/bf_upper)")
    return lo, hi


class _Inner:
    """Dispatch for the two subproblem solvers; remembers the last grid step."""

    def __init__(self, P, cfg):
        self.cfg = cfg
        self.pg = PGConfig(**{**cfg.pg.__dict__, "tol_stat": cfg.tol_stat})
        if cfg.subsolver == "bruteforce":
            self.box = _bf_box(P, cfg)
            self.h = cfg.bf_h0

    def solve(self, spec, x, k):
        """Return ``(x_new, iterations, residual, ok)``."""
        if self.cfg.subsolver == "pg":
            r = solve_nonmonotone_pg(spec, x, self.pg)
            return r.x, r.iterations, r.residual, r.status == STATIONARY
        target = self.cfg.eps0 / (k + 1)
        refinements = 0
        while True:
            r = brute_force_global(spec, self.box[0], self.box[1], self.h)
            if r.eps <= target:
                break
            self.h *= 0.5
            refinements += 1
        log.debug("brute force k=%d h=%g eps=%g (target %g)", k, self.h, r.eps, target)
        return r.x, refinements, r.eps, r.eps <= self.cfg.bf_tol


def _row(P, k, theta, V, iters, res, lam, u, x):
    return TraceRow(k, float(theta), float(V), int(iters), float(res),
                    float(np.max(np.abs(lam), initial=0.0)), float(np.max(np.abs(u), initial=0.0)),
                    P.objective(x), P.feasibility(x))


def _run_unconstrained(P, cfg, x0, sink):
    inner = _Inner(P, cfg)
    spec = SubproblemSpec.from_problem(P)
    x, iters, res, ok = inner.solve(spec, x0, 0)
    row = _row(P, 0, cfg.theta0, 0.0, iters, res, np.zeros(0), np.zeros(0), x)
    if sink is not None:
        sink(row)
    status = CONVERGED if ok else ITER_LIMIT
    return AlmResult(x, np.zeros(0), cfg.theta0, status, [row],
                     [OuterStep(0, x, np.zeros(0), cfg.theta0, np.zeros(0))])


def run_alm(P: ProblemSpec, cfg: Optional[AlmConfig] = None, x0=None, lam0=None,
            sink: Optional[Callable[[TraceRow], None]] = None):
    """Run the safeguarded augmented Lagrangian method.

    Parameters
    ----------
    P : ProblemSpec
        Problem data.  Without ``G``/``K`` the subproblem solver is called
        once and its result wrapped.
    cfg : AlmConfig, optional
    x0, lam0 : array_like, optional
        Starting point (projected onto ``C``) and multiplier (defaults 0).
    sink : callable, optional
        Receives every trace row as soon as it is produced.

    Returns
    -------
    AlmResult
        Status is ``Converged`` when ``dist_K(G(x)) <= tol_feas`` and the
        inner residual is at most ``tol_stat`` (``bf_tol`` in brute-force
        mode).  When ``theta`` would exceed ``theta_max`` the run stops with
        ``InfeasibleStationary`` (infeasible, but stationary for the
        constraint violation) or ``PenaltyLimit``.
    """
    cfg = cfg or AlmConfig()
    x = P.C.project(np.zeros(P.n) if x0 is None else np.asarray(x0, dtype=float))
    if not P.has_constraints:
        return _run_unconstrained(P, cfg, x, sink)

    lam = np.zeros(P.m) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    state = AlmState(0, x, lam, safeguard(lam, cfg.b_max), cfg.theta0)
    inner = _Inner(P, cfg)
    trace, steps = [], []
    status = ITER_LIMIT
    for k in range(cfg.k_max):
        state.k = k
        state.u = safeguard(state.lam, cfg.b_max)
        spec = SubproblemSpec.from_problem(P, state.u, state.theta)
        try:
            x_new, iters, res, inner_ok = inner.solve(spec, state.x, k)
        except (NonFiniteError, FloatingPointError, ValueError) as exc:
            raise SubproblemError(f"outer iteration {k} (theta={state.theta:g}): {exc}") from exc
        lam_new = multiplier_update(P, x_new, state.u, state.theta)
        V = penalty_progress(P, x_new, state.u, state.theta)
        row = _row(P, k, state.theta, V, iters, res, lam_new, state.u, x_new)
        trace.append(row)
        steps.append(OuterStep(k, x_new, state.u, state.theta, lam_new))
        if sink is not None:
            sink(row)
        log.info("k=%d theta=%.3g V=%.3g feas=%.3g res=%.3g |lam|=%.3g",
                 k, state.theta, V, row.feasibility, res, row.lambda_inf)

        theta_next = penalty_update(V, state.V_prev, state.theta, cfg.tau, cfg.gamma, k)
        state.x, state.lam, state.V_prev = x_new, lam_new, V

        if row.feasibility <= cfg.tol_feas and inner_ok:
            status = CONVERGED
            break
        if theta_next > cfg.theta_max:
            infeasible = row.feasibility > cfg.tol_feas
            if infeasible and feasibility_residual(P, x_new) <= cfg.tol_stat:
                status = INFEASIBLE_STATIONARY
            else:
                status = PENALTY_LIMIT
            break
        state.theta = theta_next
    return AlmResult(state.x, state.lam, state.theta, status, trace, steps)
