"""Box-constrained composite subproblems ``min_{x in C} s(x) + q(x)``.

``s`` is smooth (in the augmented Lagrangian setting it is ``f`` plus the
penalty term), ``q`` the optional ``|.|^p`` term and ``C`` a box.  Two
solvers are provided: a nonmonotone proximal gradient method with
Barzilai-Borwein steps, and an exhaustive grid search for tiny dimensions
that reports an a-posteriori global optimality gap.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import LpSeparableTerm, ProblemSpec, aug_lagrangian_smooth_grad
from .prox import prox_lp_box_vec

log = logging.getLogger(__name__)

STATIONARY = "Stationary"
ITER_LIMIT = "IterLimit"

MAX_GRID_POINTS = 10_000_000


class NonFiniteError(FloatingPointError):
    """Objective or gradient evaluated to inf/NaN."""


class GridTooLargeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SubproblemSpec:
    n: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    lp: Optional[LpSeparableTerm] = None
    metric: Optional[np.ndarray] = None
    batch_value: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.n,)).copy()
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        w = np.ones(self.n) if self.metric is None else np.asarray(self.metric, dtype=float)
        object.__setattr__(self, "metric", w)

    def objective(self, x):
        val = float(self.value(x))
        if self.lp is not None:
            val += float(self.lp.value(x))
        return val

    def smooth_values(self, X):
        if self.batch_value is not None:
            return np.asarray(self.batch_value(X), dtype=float)
        return np.array([self.value(x) for x in X], dtype=float)

    def norm(self, v):
        return float(np.sqrt(np.sum(self.metric * v * v)))

    @classmethod
    def from_problem(cls, P: ProblemSpec, u=None, theta=None):
        """Subproblem of the augmented Lagrangian ``L_theta(., u)`` over ``C``.

        Without constraints (or without ``u``/``theta``) this is just
        ``f + q`` over ``C``.
        """
        if P.G is None or theta is None:
            return cls(P.n, P.f.value, P.f.grad, P.C.lower, P.C.upper, P.q, P.metric,
                       P.f.batch_value)
        u = np.asarray(u, dtype=float)
        K, G, f = P.K, P.G, P.f

        def value(x):
            z = np.asarray(G.value(x), dtype=float) + u / theta
            r = z - K.project(z)
            return float(f.value(x)) + 0.5 * theta * float(r @ r)

        def grad(x):
            return aug_lagrangian_smooth_grad(P, x, u, theta)

        def batch(X):
            Z = G.values(X) + u / theta
            R = Z - K.project(Z)
            return f.values(X) + 0.5 * theta * np.einsum("ij,ij->i", R, R)

        return cls(P.n, value, grad, P.C.lower, P.C.upper, P.q, P.metric, batch)


@dataclass
class PGConfig:
    t0: float = 1.0
    step_rule: str = "bb"  # "bb" or "fixed"
    memory: int = 10
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    tol_stat: float = 1e-6
    max_iter: int = 5000
    t_min: float = 1e-10
    t_max: float = 1e10
    max_backtracks: int = 60
    t_res: float = 1.0

    def __post_init__(self):
        if self.step_rule not in ("bb", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if not (self.t0 > 0 and self.memory >= 1 and 0 < self.armijo_c < 1
                and 0 < self.backtrack < 1 and self.tol_stat > 0 and self.max_iter >= 0):
            raise ValueError("PGConfig parameter out of range")


@dataclass
class PGResult:
    x: np.ndarray
    residual: float
    iterations: int
    status: str
    objective: float
    values: list = field(default_factory=list)
    steps: list = field(default_factory=list)


def _metric_grad(spec, x):
    g = np.asarray(spec.grad(x), dtype=float) / spec.metric
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(f"non-finite gradient at x={x!r}")
    return g


def _step_from_grad(spec, x, g, t):
    v = x - t * g
    if spec.lp is None:
        return np.clip(v, spec.lower, spec.upper)
    return prox_lp_box_vec(v, t * spec.lp.weights / spec.metric, spec.lp.p, spec.lower, spec.upper)


def prox_grad_step(spec, x, t):
    """Forward-backward step ``prox_{t(q + i_C)}(x - t grad s(x))`` in the metric."""
    if t <= 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float)
    return _step_from_grad(spec, x, _metric_grad(spec, x), t)


def stationarity_residual(spec, x, t=1.0):
    """Prox-gradient mapping norm ``||x - step(x, t)|| / t``."""
    x = np.asarray(x, dtype=float)
    return spec.norm(x - prox_grad_step(spec, x, t)) / t


def solve_nonmonotone_pg(spec, x0, cfg=None):
    """Nonmonotone proximal gradient method (max-type memory, BB steps).

    A trial point ``x+`` is accepted once

        F(x+) <= max(last ``memory`` values) - c / (2 t) ||x+ - x||^2,

    otherwise ``t`` is multiplied by ``cfg.backtrack``.  Stationarity is
    measured by :func:`stationarity_residual` at the fixed step ``cfg.t_res``.
    """
    cfg = cfg or PGConfig()
    x = np.clip(np.asarray(x0, dtype=float), spec.lower, spec.upper)
    F = spec.objective(x)
    if not np.isfinite(F):
        raise NonFiniteError(f"non-finite objective at x={x!r}")
    g = _metric_grad(spec, x)
    hist = deque([F], maxlen=cfg.memory)
    values, steps = [F], []

    def residual(x, g):
        return spec.norm(x - _step_from_grad(spec, x, g, cfg.t_res)) / cfg.t_res

    res = residual(x, g)
    t = cfg.t0
    it = 0
    while res > cfg.tol_stat and it < cfg.max_iter:
        it += 1
        F_ref = max(hist)
        for _ in range(cfg.max_backtracks):
            xn = _step_from_grad(spec, x, g, t)
            d = xn - x
            dd = float(np.sum(spec.metric * d * d))
            Fn = spec.objective(xn)
            if not np.isfinite(Fn):
                raise NonFiniteError(f"non-finite objective at trial x={xn!r} (from x={x!r}, t={t})")
            if Fn <= F_ref - cfg.armijo_c / (2.0 * t) * dd:
                break
            t *= cfg.backtrack
        else:
            log.debug("backtracking exhausted at iteration %d (t=%g)", it, t)
            break
        gn = _metric_grad(spec, xn)
        steps.append(t)
        if cfg.step_rule == "bb":
            s = d
            y = gn - g
            sy = float(np.sum(spec.metric * s * y))
            # nonpositive curvature: keep the accepted step (at least t0)
            t = dd / sy if sy > 0 else max(cfg.t0, t)
            t = min(max(t, cfg.t_min), cfg.t_max)
        else:
            t = cfg.t0
        x, g, F = xn, gn, Fn
        hist.append(F)
        values.append(F)
        res = residual(x, g)

    status = STATIONARY if res <= cfg.tol_stat else ITER_LIMIT
    return PGResult(x, res, it, status, F, values, steps)


@dataclass
class BruteForceResult:
    x: np.ndarray
    value: float
    eps: float
    h: np.ndarray
    n_points: int


def _grid_axes(lower, upper, h):
    axes = []
    for lo, hi in zip(lower, upper):
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("brute force needs a finite bounding box")
        k = max(1, int(np.ceil((hi - lo) / h - 1e-12)))
        axes.append(np.linspace(lo, hi, k + 1))
    return axes


def _reduce_cells(arr, op, axes):
    """Combine neighbouring entries along ``axes`` (node array -> cell array)."""
    for ax in axes:
        lo = [slice(None)] * arr.ndim
        hi = [slice(None)] * arr.ndim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        arr = op(arr[tuple(lo)], arr[tuple(hi)])
    return arr


def brute_force_global(spec, lower, upper, h):
    """Best node of a uniform grid over ``[lower, upper]`` (n <= 3).

    Along with the node, an estimate ``eps`` of its global optimality gap is
    returned: each cell gets the lower bound ``min(corner values of s) - L *
    half-diagonal + q(cell point closest to the origin)`` with ``L`` the
    largest finite-difference slope on the cell's edges.  The ``|.|^p`` part
    is bounded exactly since it is monotone in every ``|x_i|``, so cells
    touching a coordinate hyperplane need no Lipschitz constant for it.
    """
    n = spec.n
    if n > 3:
        raise ValueError("brute force is limited to n <= 3")
    lower = np.maximum(np.broadcast_to(np.asarray(lower, dtype=float), (n,)), spec.lower)
    upper = np.minimum(np.broadcast_to(np.asarray(upper, dtype=float), (n,)), spec.upper)
    if np.any(lower > upper):
        raise ValueError("bounding box does not meet C")
    axes = _grid_axes(lower, upper, h)
    shape = tuple(len(a) for a in axes)
    n_points = int(np.prod(shape))
    if n_points > MAX_GRID_POINTS:
        raise GridTooLargeError(f"grid with {n_points} points exceeds {MAX_GRID_POINTS}")
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    S = spec.smooth_values(X).reshape(shape)
    Q = np.zeros(shape) if spec.lp is None else (np.abs(X) ** spec.lp.p @ spec.lp.weights).reshape(shape)
    total = S + Q
    if not np.all(np.isfinite(total)):
        raise NonFiniteError("non-finite objective on the brute-force grid")
    flat = int(np.argmin(total))
    best = float(total.flat[flat])
    x_best = X[flat].copy()

    steps = np.array([a[1] - a[0] if len(a) > 1 else 0.0 for a in axes])
    if min(shape) < 2:
        eps = 0.0 if n_points == 1 else np.inf
        return BruteForceResult(x_best, best, eps, steps, n_points)

    cell_min = _reduce_cells(S, np.minimum, range(n))
    slopes_sq = 0.0
    for ax in range(n):
        edge = np.abs(np.diff(S, axis=ax)) / steps[ax]
        slopes_sq = slopes_sq + _reduce_cells(edge, np.maximum, [o for o in range(n) if o != ax]) ** 2
    half_diag = 0.5 * float(np.sqrt(np.sum(steps ** 2)))
    lb = cell_min - np.sqrt(slopes_sq) * half_diag
    if spec.lp is not None:
        for ax, a in enumerate(axes):
            lo_e, hi_e = a[:-1], a[1:]
            closest = np.where((lo_e <= 0) & (hi_e >= 0), 0.0, np.minimum(np.abs(lo_e), np.abs(hi_e)))
            shp = [1] * n
            shp[ax] = -1
            lb = lb + (spec.lp.weights[ax] * closest ** spec.lp.p).reshape(shp)
    eps = max(0.0, best - float(np.min(lb)))
    return BruteForceResult(x_best, best, eps, steps, n_points)
