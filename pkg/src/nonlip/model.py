"""Problem data for ``min f(x) + q(x)  s.t.  G(x) in K, x in C``.

``f`` and ``G`` are smooth and given through value/derivative oracles, ``q``
is an optional weighted ``sum_i w_i |x_i|^p`` term with ``p`` in (0, 1), ``K``
is a closed convex set from :mod:`nonlip.sets` and ``C`` is a box.

Gradients returned by the oracles are Euclidean partial derivatives.  A
problem may additionally carry diagonal ``metric`` weights (quadrature weights
of a discretized function space); norms of primal vectors are then taken in
``<u, v> = sum_i metric_i u_i v_i`` and the Riesz representative of a
gradient ``g`` is ``g / metric``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .sets import Box, ConvexSet


@dataclass(frozen=True)
class SmoothFunctional:
    """Continuously differentiable ``f: R^n -> R``.

    ``batch_value`` optionally evaluates ``f`` on a stack of points of shape
    ``(N, n)``; grid-based solvers use it when present.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    batch_value: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def values(self, X):
        if self.batch_value is not None:
            return np.asarray(self.batch_value(X), dtype=float)
        return np.array([self.value(x) for x in X], dtype=float)


@dataclass(frozen=True)
class SmoothMap:
    """Continuously differentiable ``G: R^n -> R^m`` with adjoint-Jacobian oracle."""

    n: int
    m: int
    value: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray, np.ndarray], np.ndarray]
    batch_value: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def values(self, X):
        if self.batch_value is not None:
            return np.asarray(self.batch_value(X), dtype=float).reshape(len(X), self.m)
        return np.array([self.value(x) for x in X], dtype=float).reshape(len(X), self.m)

    def jacobian(self, x):
        """Dense ``m x n`` Jacobian assembled from adjoint products."""
        eye = np.eye(self.m)
        return np.array([self.adjoint(x, e) for e in eye]).reshape(self.m, self.n)


@dataclass(frozen=True, eq=False)
class LpSeparableTerm:
    """``q(u) = sum_i w_i |u_i|^p`` with ``0 < p < 1`` and ``w >= 0``."""

    p: float
    weights: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"exponent p must lie in (0, 1), got {self.p}")
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n, p, weight=1.0):
        return cls(p, np.full(n, float(weight)))

    @property
    def dim(self):
        return self.weights.shape[0]

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return np.abs(u) ** self.p @ self.weights

    def gradient_off_zero(self, u):
        """``w_i p |u_i|^(p-2) u_i`` on ``u_i != 0`` and 0 elsewhere."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        nz = u != 0
        out[nz] = self.weights[nz] * self.p * np.abs(u[nz]) ** (self.p - 2.0) * u[nz]
        return out


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    n: int
    f: SmoothFunctional
    C: Box
    q: Optional[LpSeparableTerm] = None
    G: Optional[SmoothMap] = None
    K: Optional[ConvexSet] = None
    metric: Optional[np.ndarray] = None
    name: str = field(default="problem")

    def __post_init__(self):
        if self.f.dim != self.n:
            raise ValueError(f"f has dim {self.f.dim}, problem has n={self.n}")
        if self.C.dim != self.n:
            raise ValueError(f"C has dim {self.C.dim}, problem has n={self.n}")
        if self.q is not None and self.q.dim != self.n:
            raise ValueError(f"q has dim {self.q.dim}, problem has n={self.n}")
        if (self.G is None) != (self.K is None):
            raise ValueError("G and K must be given together")
        if self.G is not None:
            if self.G.n != self.n:
                raise ValueError(f"G maps from R^{self.G.n}, problem has n={self.n}")
            if self.G.m != self.K.dim:
                raise ValueError(f"G maps into R^{self.G.m} but K lives in R^{self.K.dim}")
        if self.q is None and self.G is None and self.C.is_trivial:
            raise ValueError("problem needs at least one of q, G/K or a nontrivial C")
        if self.metric is not None:
            w = np.asarray(self.metric, dtype=float).copy()
            if w.shape != (self.n,) or np.any(w <= 0):
                raise ValueError("metric weights must be positive with shape (n,)")
            w.flags.writeable = False
            object.__setattr__(self, "metric", w)

    @property
    def m(self):
        return 0 if self.G is None else self.G.m

    @property
    def has_constraints(self):
        return self.G is not None

    def metric_weights(self):
        return np.ones(self.n) if self.metric is None else self.metric

    def primal_norm(self, v):
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(np.sum(self.metric_weights() * v * v)))

    def dual_norm(self, g):
        """Norm of the Riesz representative of a Euclidean gradient ``g``."""
        g = np.asarray(g, dtype=float)
        return float(np.sqrt(np.sum(g * g / self.metric_weights())))

    def objective(self, x):
        val = float(self.f.value(x))
        if self.q is not None:
            val += float(self.q.value(x))
        return val

    def feasibility(self, x):
        """``dist_K(G(x))``, or 0 without constraints."""
        if self.G is None:
            return 0.0
        g = np.asarray(self.G.value(x), dtype=float)
        r = g - self.K.project(g)
        return float(np.sqrt(r @ r))


def _shifted(P, x, lam, theta):
    if theta <= 0:
        raise ValueError("penalty parameter must be positive")
    g = np.asarray(P.G.value(x), dtype=float)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != g.shape:
        raise ValueError(f"multiplier shape {lam.shape} does not match G(x) shape {g.shape}")
    z = g + lam / theta
    return g, z, P.K.project(z)


def _check_x(P, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (P.n,):
        raise ValueError(f"expected x of shape ({P.n},), got {x.shape}")
    return x


def aug_lagrangian_value(P, x, lam, theta):
    """``f(x) + theta/2 dist_K(G(x) + lam/theta)^2 + q(x)``."""
    x = _check_x(P, x)
    val = P.objective(x)
    if P.G is not None:
        _, z, pz = _shifted(P, x, lam, theta)
        r = z - pz
        val += 0.5 * theta * float(r @ r)
    return val


def aug_lagrangian_smooth_grad(P, x, lam, theta):
    """Euclidean gradient of the smooth part ``f + theta/2 dist_K^2(G + lam/theta)``."""
    x = _check_x(P, x)
    grad = np.array(P.f.grad(x), dtype=float)
    if P.G is not None:
        _, z, pz = _shifted(P, x, lam, theta)
        grad = grad + theta * np.asarray(P.G.adjoint(x, z - pz), dtype=float)
    return grad


def penalty_progress(P, x, lam, theta):
    """``V_theta(x, lam) = ||G(x) - P_K(G(x) + lam/theta)||``."""
    x = _check_x(P, x)
    if P.G is None:
        return 0.0
    g, _, pz = _shifted(P, x, lam, theta)
    r = g - pz
    return float(np.sqrt(r @ r))
