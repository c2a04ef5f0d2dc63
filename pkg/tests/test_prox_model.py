import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from conftest import random_smooth_problem
from nonlip.instances import example_5_1
from nonlip.model import (
    LpSeparableTerm,
    ProblemSpec,
    SmoothFunctional,
    aug_lagrangian_smooth_grad,
    aug_lagrangian_value,
    penalty_progress,
)
from nonlip.prox import ALL_REALS, lp_objective, lp_subdiff_point, prox_lp_box, prox_lp_box_vec, prox_lp_scalar
from nonlip.sets import Ball, Box, Halfspace, NonpositiveOrthant, ZeroSet

# frozen outputs of the grid oracle below
PROX_2_1_HALF = 1.6053779404795958
PROX_BOX_09 = 0.8456273507938219


def grid_oracle(v, w, p, lo, hi, step=1e-7):
    """Brute-force minimizer: fine grid, then bisection on the derivative next to the best node."""
    t = np.arange(lo, hi + step / 2, step)
    vals = lp_objective(t, v, w, p)
    j = int(np.argmin(vals))
    a, b = t[max(j - 1, 0)], t[min(j + 1, len(t) - 1)]
    if a > 0:
        d = lambda s: s - v + w * p * s ** (p - 1.0)  # noqa: E731
        if d(a) < 0 < d(b):
            return float(brentq(d, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return float(t[j])


def test_frozen_oracle_values_reproduce():
    assert abs(grid_oracle(2.0, 1.0, 0.5, 0.0, 2.0) - PROX_2_1_HALF) < 1e-9
    assert abs(grid_oracle(0.9, 0.1, 0.5, 0.0, 1.0) - PROX_BOX_09) < 1e-9
    assert abs(prox_lp_scalar(2.0, 1.0, 0.5) - PROX_2_1_HALF) < 1e-9
    assert prox_lp_box(5.0, 0.1, 0.5, 0.0, 1.0) == 1.0
    assert abs(prox_lp_box(0.9, 0.1, 0.5, 0.0, 1.0) - PROX_BOX_09) < 1e-9


def test_prox_examples():
    assert prox_lp_scalar(0.0, 3.0, 0.3) == 0.0
    assert prox_lp_scalar(7.0, 0.0, 0.5) == 7.0
    assert prox_lp_box(-3.0, 1.0, 0.5, 0.0, 1.0) == 0.0
    assert prox_lp_box(0.4, 0.0, 0.5, -1.0, 1.0) == 0.4
    with pytest.raises(ValueError):
        prox_lp_box(0.0, 1.0, 0.5, 1.0, 0.0)
    with pytest.raises(ValueError):
        prox_lp_scalar(1.0, 1.0, 1.0)


def test_prox_beats_grid_1000_triples(rng):
    for _ in range(1000):
        v = rng.uniform(-5, 5)
        w = rng.uniform(0, 3)
        p = rng.uniform(0.05, 0.95)
        t = prox_lp_scalar(v, w, p)
        grid = np.arange(-abs(v), abs(v) + 1e-4, 1e-4)
        assert lp_objective(t, v, w, p) <= np.min(lp_objective(grid, v, w, p)) + 1e-12
        assert abs(t) <= abs(v) and (t == 0 or np.sign(t) == np.sign(v))


@settings(max_examples=200, deadline=None)
@given(st.floats(-20, 20), st.floats(0, 5), st.floats(0.05, 0.95), st.floats(-5, 0), st.floats(0, 5))
def test_prox_box_beats_candidates(v, w, p, lo, hi):
    t = prox_lp_box(v, w, p, lo, hi)
    assert lo <= t <= hi
    grid = np.linspace(lo, hi, 2001)
    assert lp_objective(t, v, w, p) <= np.min(lp_objective(grid, v, w, p)) + 1e-12


def test_prox_thresholding():
    for w, p in ((1.0, 0.5), (0.3, 0.2), (2.0, 0.9)):
        vs = np.linspace(0.0, 6.0, 3001)
        out = np.array([prox_lp_scalar(v, w, p) for v in vs])
        nz = np.flatnonzero(out != 0)
        assert nz.size > 0
        first = nz[0]
        assert np.all(out[:first] == 0) and np.all(out[first:] != 0)
        neg = np.array([prox_lp_scalar(-v, w, p) for v in vs])
        np.testing.assert_array_equal(neg, -out)


def test_prox_vector_matches_scalar(rng):
    v = rng.uniform(-4, 4, 500)
    w = rng.uniform(0, 2, 500)
    lo = -rng.uniform(0, 3, 500)
    hi = rng.uniform(0, 3, 500)
    out = prox_lp_box_vec(v, w, 0.4, lo, hi)
    ref = [prox_lp_box(*args, 0.4, a, b) for args, a, b in zip(zip(v, w), lo, hi)]
    np.testing.assert_allclose(out, ref, rtol=0, atol=1e-12)


def test_subdiff_point():
    assert lp_subdiff_point(0.0, 1.0, 0.5) == ALL_REALS
    assert lp_subdiff_point(1.0, 1.0, 0.5) == (0.5, 0.5)
    assert lp_subdiff_point(-4.0, 1.0, 0.5).lo == pytest.approx(-0.25, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=6),
       st.one_of(st.just(0.0), st.floats(1e-6, 10)), st.floats(0.05, 0.95))
def test_lp_homogeneity(u, s, p):
    u = np.array(u)
    q = LpSeparableTerm.uniform(u.size, p, 0.7)
    assert q.value(np.zeros_like(u)) == 0.0
    assert q.value(u) >= 0.0
    assert q.value(s * u) == pytest.approx(s ** p * q.value(u), rel=1e-12, abs=1e-300)


def test_aug_lagrangian_examples():
    P = example_5_1()
    x = np.array([1.0])
    assert aug_lagrangian_value(P, x, np.zeros(1), 1.0) == 1.5
    assert aug_lagrangian_smooth_grad(P, x, np.zeros(1), 1.0)[0] == 3.0
    assert penalty_progress(P, x, np.zeros(1), 1.0) == 1.0
    assert aug_lagrangian_value(P, np.zeros(1), np.zeros(1), 1.0) == 0.0
    f = SmoothFunctional(1, lambda x: 0.0, lambda x: np.zeros(1))
    Pq = ProblemSpec(1, f, Box.unbounded(1), q=LpSeparableTerm.uniform(1, 0.5))
    assert aug_lagrangian_value(Pq, np.array([4.0]), np.zeros(0), 1.0) == 2.0
    with pytest.raises(ValueError):
        aug_lagrangian_value(P, np.zeros(2), np.zeros(1), 1.0)


def test_penalty_progress_shifted():
    from nonlip.model import SmoothMap
    G = SmoothMap(1, 1, lambda x: np.array([0.5]), lambda x, w: np.zeros(1))
    f = SmoothFunctional(1, lambda x: 0.0, lambda x: np.zeros(1))
    P = ProblemSpec(1, f, Box.unbounded(1), G=G, K=NonpositiveOrthant(1))
    assert penalty_progress(P, np.zeros(1), np.ones(1), 2.0) == 0.5


@pytest.mark.parametrize("K", [NonpositiveOrthant(2), ZeroSet(2), Ball([0.3, -0.2], 0.5),
                               Halfspace([1.0, -2.0], 0.1), Box([-0.5, -1.0], [0.2, np.inf])])
def test_smooth_grad_matches_fd(rng, K):
    P = random_smooth_problem(rng, K=K, with_q=True)
    for _ in range(5):
        x = rng.standard_normal(3)
        lam = rng.standard_normal(2)
        theta = rng.uniform(0.5, 20)
        smooth = lambda z: aug_lagrangian_value(P, z, lam, theta) - P.q.value(z)  # noqa: E731
        g = aug_lagrangian_smooth_grad(P, x, lam, theta)
        fd = np.empty(3)
        for i in range(3):
            h = 1e-6 * (1 + abs(x[i]))
            e = np.zeros(3)
            e[i] = h
            fd[i] = (smooth(x + e) - smooth(x - e)) / (2 * h)
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-6)


def test_oracle_derivatives_fd(rng):
    P = random_smooth_problem(rng)
    for _ in range(10):
        x, v, w = rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(2)
        h = 1e-6
        fd = (P.f.value(x + h * v) - P.f.value(x - h * v)) / (2 * h)
        assert fd == pytest.approx(P.f.grad(x) @ v, rel=1e-5, abs=1e-8)
        fdG = w @ (P.G.value(x + h * v) - P.G.value(x - h * v)) / (2 * h)
        assert fdG == pytest.approx(P.G.adjoint(x, w) @ v, rel=1e-4, abs=1e-8)


def test_problem_validation():
    f = SmoothFunctional(2, lambda x: 0.0, lambda x: np.zeros(2))
    with pytest.raises(ValueError):
        ProblemSpec(2, f, Box.unbounded(2))
    with pytest.raises(ValueError):
        ProblemSpec(2, f, Box.unbounded(3), q=LpSeparableTerm.uniform(2, 0.5))
