import numpy as np
import pytest

from nonlip.model import LpSeparableTerm, ProblemSpec, SmoothFunctional, SmoothMap
from nonlip.sets import Ball, Box, Halfspace, NonpositiveOrthant, ZeroSet


def catalog(m=3):
    """One descriptor of every supported set kind in dimension ``m``."""
    return [
        Box(np.full(m, -1.0), np.r_[np.full(m - 1, 2.0), np.inf]),
        NonpositiveOrthant(m),
        ZeroSet(m),
        Ball(np.arange(m, dtype=float), 1.5),
        Halfspace(np.arange(1, m + 1, dtype=float), 0.5),
    ]


def random_smooth_problem(rng, n=3, m=2, K=None, with_q=False):
    """Smooth cubic ``f`` and ``G`` with known derivatives."""
    A = rng.standard_normal((n, n))
    c = rng.standard_normal(n)
    B = rng.standard_normal((m, n))
    d = rng.standard_normal(m)
    f = SmoothFunctional(
        n,
        lambda x: float(0.5 * x @ A.T @ A @ x + c @ x + np.sum(x ** 3) / 3),
        lambda x: A.T @ A @ x + c + x ** 2,
    )
    G = SmoothMap(
        n, m,
        lambda x: B @ x + d + 0.5 * np.sum(x ** 2),
        lambda x, w: B.T @ w + x * np.sum(w),
    )
    q = LpSeparableTerm.uniform(n, 0.5, 0.3) if with_q else None
    return ProblemSpec(n, f, Box.unbounded(n), q=q, G=G, K=K or NonpositiveOrthant(m))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
