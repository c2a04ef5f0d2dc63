"""Built-in problem instances.

Every builder returns a :class:`~nonlip.model.ProblemSpec` whose oracles
also provide batch evaluation, so the grid-based subsolver can use them.
"""

import numpy as np

from .model import LpSeparableTerm, ProblemSpec, SmoothFunctional, SmoothMap
from .sets import Box, NonpositiveOrthant, ZeroSet


def example_5_1():
    """``min x  s.t.  x^2 <= 0``: the only feasible point 0 admits no multiplier."""
    f = SmoothFunctional(1, lambda x: float(x[0]), lambda x: np.ones(1), lambda X: X[:, 0].copy())
    G = SmoothMap(1, 1, lambda x: x ** 2, lambda x, w: 2.0 * x * w, lambda X: X ** 2)
    return ProblemSpec(1, f, Box.unbounded(1), G=G, K=NonpositiveOrthant(1), name="example-5-1")


def quadratic(Q, c, A=None, b=None, constraint="eq", lower=None, upper=None, p=None, q_weight=1.0,
              name="custom-quadratic"):
    """``1/2 x'Qx + c'x (+ q_weight sum |x_i|^p)`` with ``Ax - b = 0`` or ``<= 0`` and a box."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if Q.shape != (n, n):
        raise ValueError(f"Q must be {n}x{n}")
    if not np.allclose(Q, Q.T):
        raise ValueError("Q must be symmetric")
    f = SmoothFunctional(
        n,
        lambda x: 0.5 * float(x @ Q @ x) + float(c @ x),
        lambda x: Q @ x + c,
        lambda X: 0.5 * np.einsum("ij,jk,ik->i", X, Q, X) + X @ c,
    )
    lower = np.full(n, -np.inf) if lower is None else lower
    upper = np.full(n, np.inf) if upper is None else upper
    q = None if p is None else LpSeparableTerm.uniform(n, p, q_weight)
    G = K = None
    if A is not None:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float)
        m = A.shape[0]
        if A.shape[1] != n or b.shape != (m,):
            raise ValueError("A must be m x n and b of length m")
        G = SmoothMap(n, m, lambda x: A @ x - b, lambda x, w: A.T @ w, lambda X: X @ A.T - b)
        if constraint == "eq":
            K = ZeroSet(m)
        elif constraint == "ineq":
            K = NonpositiveOrthant(m)
        else:
            raise ValueError(f"constraint must be 'eq' or 'ineq', got {constraint!r}")
    return ProblemSpec(n, f, Box(lower, upper), q=q, G=G, K=K, name=name)


def convex_qp_data(seed, n=None, m=None):
    """Random strongly convex QP data ``(Q, c, A, b)`` with full-row-rank ``A``."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11)) if n is None else int(n)
    m = int(rng.integers(1, min(3, n - 1) + 1)) if m is None else int(m)
    if not (1 <= n <= 10 and 1 <= m <= 3 and m < n):
        raise ValueError("convex-qp needs 1 <= m <= 3, m < n <= 10")
    M = rng.standard_normal((n, n))
    Q = M.T @ M / n + np.eye(n)
    c = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return Q, c, A, b


def convex_qp(seed, n=None, m=None):
    Q, c, A, b = convex_qp_data(seed, n, m)
    return quadratic(Q, c, A, b, "eq", name=f"convex-qp-{seed}")


def _poly2(f, grad, G, Gadj, m, name, q=None, K=None):
    fs = SmoothFunctional(2, lambda x: float(f(x[None])[0]), grad, f)
    Gm = SmoothMap(2, m, lambda x: G(x[None])[0], Gadj, G)
    return ProblemSpec(2, fs, Box.unbounded(2), q=q, G=Gm, K=K or NonpositiveOrthant(m), name=name)


def nonconvex_circle():
    """``min x1 x2 + 0.1 |x|^2  s.t.  |x|^2 = 1``; minimizers ``+-(1, -1)/sqrt 2``."""
    return _poly2(
        lambda X: X[:, 0] * X[:, 1] + 0.1 * np.sum(X * X, axis=1),
        lambda x: np.array([x[1], x[0]]) + 0.2 * x,
        lambda X: (np.sum(X * X, axis=1) - 1.0)[:, None],
        lambda x, w: 2.0 * x * w[0],
        1, "nonconvex-circle", K=ZeroSet(1),
    )


def nonconvex_double_well():
    """Double-well objective over the halfplane ``x1 + 2 x2 <= 1``."""
    return _poly2(
        lambda X: (X[:, 0] ** 2 - 1.0) ** 2 + (X[:, 1] - 0.5) ** 2,
        lambda x: np.array([4.0 * x[0] * (x[0] ** 2 - 1.0), 2.0 * (x[1] - 0.5)]),
        lambda X: (X[:, 0] + 2.0 * X[:, 1] - 1.0)[:, None],
        lambda x, w: np.array([w[0], 2.0 * w[0]]),
        1, "nonconvex-double-well",
    )


def global_test_instances():
    """Small instances with nonempty feasible sets and their brute-force search boxes."""
    f1 = SmoothFunctional(1, lambda x: float((x[0] ** 2 - 1.0) ** 2 - 0.5 * x[0]),
                          lambda x: np.array([4.0 * x[0] * (x[0] ** 2 - 1.0) - 0.5]),
                          lambda X: (X[:, 0] ** 2 - 1.0) ** 2 - 0.5 * X[:, 0])
    G1 = SmoothMap(1, 1, lambda x: x - 0.8, lambda x, w: w.copy(), lambda X: X - 0.8)
    p1 = ProblemSpec(1, f1, Box.unbounded(1), G=G1, K=NonpositiveOrthant(1), name="well-1d")

    p2 = _poly2(
        lambda X: (X[:, 0] ** 2 - 1.0) ** 2 + (X[:, 1] ** 2 - 1.0) ** 2 + 0.2 * X[:, 0] - 0.3 * X[:, 1],
        lambda x: np.array([4.0 * x[0] * (x[0] ** 2 - 1.0) + 0.2, 4.0 * x[1] * (x[1] ** 2 - 1.0) - 0.3]),
        lambda X: (X[:, 0] + X[:, 1])[:, None],
        lambda x, w: np.array([w[0], w[0]]),
        1, "wells-2d",
    )

    v = np.array([1.5, 0.2])
    p3 = _poly2(
        lambda X: 0.5 * np.sum((X - v) ** 2, axis=1),
        lambda x: x - v,
        lambda X: (X[:, 0] + X[:, 1] - 1.0)[:, None],
        lambda x, w: np.array([w[0], w[0]]),
        1, "sparse-2d", q=LpSeparableTerm.uniform(2, 0.5, 0.5),
    )
    return [(p1, (-2.0, 2.0)), (p2, (-2.0, 2.0)), (p3, (-2.0, 2.0))]
