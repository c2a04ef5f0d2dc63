"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``NONLIP_NUMBA=0`` to force
the numpy implementations (useful for debugging and for the benchmark that
compares both paths).
"""

import math
import os

import numpy as np
import scipy.linalg

_FLAG = os.environ.get("NONLIP_NUMBA", "1").strip().lower()

try:
    import numba as _nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None

USE_NUMBA = _nb is not None and _FLAG not in ("0", "off", "false", "no")

NEWTON_TOL = 1e-12
_EXP_SAMPLES = 48
_GOLDEN_ITERS = 80


def _identity_decorator(fn):
    return fn


# With numba disabled the scalar kernels below stay plain Python functions.
njit = _nb.njit(cache=True) if USE_NUMBA else _identity_decorator


# ---------------------------------------------------------------------------
# |t|^p proximal map
# ---------------------------------------------------------------------------

@njit
def lp_local_root(a, w, p):
    """Stationary point of ``0.5*(t-a)**2 + w*t**p`` on ``t > 0`` for ``a > 0``.

    Returns -1.0 when the derivative has no root (the only minimizer over
    ``t >= 0`` is then the origin).  The derivative is convex and increasing
    right of its minimizer ``tmin``, so Newton started at ``a`` decreases
    monotonically onto the root; bisection on ``[tmin, a]`` guards it.
    """
    tmin = (w * p * (1.0 - p)) ** (1.0 / (2.0 - p))
    if tmin >= a:
        return -1.0
    gmin = tmin - a + w * p * tmin ** (p - 1.0)
    if gmin >= 0.0:
        return -1.0
    lo = tmin
    hi = a
    t = a
    for _ in range(200):
        g = t - a + w * p * t ** (p - 1.0)
        if g > 0.0:
            hi = t
        else:
            lo = t
        dg = 1.0 + w * p * (p - 1.0) * t ** (p - 2.0)
        if dg > 0.0:
            tn = t - g / dg
        else:
            tn = 0.5 * (lo + hi)
        if not (lo <= tn <= hi):
            tn = 0.5 * (lo + hi)
        if abs(tn - t) <= NEWTON_TOL:
            t = tn
            break
        t = tn
    return t


@njit
def lp_objective(t, v, w, p):
    return 0.5 * (t - v) * (t - v) + w * abs(t) ** p


@njit
def prox_lp_scalar_kernel(v, w, p):
    if w <= 0.0 or v == 0.0:
        return v
    a = abs(v)
    t = lp_local_root(a, w, p)
    if t < 0.0:
        return 0.0
    if 0.5 * (t - a) * (t - a) + w * t ** p < 0.5 * a * a:
        return t if v > 0.0 else -t
    return 0.0


@njit
def prox_lp_box_kernel(v, w, p, lower, upper):
    # the origin is tried first and only strictly better candidates replace it
    best = 0.0
    best_val = math.inf
    if lower <= 0.0 <= upper:
        best_val = lp_objective(0.0, v, w, p)
    cands = np.empty(4)
    count = 0
    if w > 0.0 and v != 0.0:
        r = lp_local_root(abs(v), w, p)
        if r >= 0.0:
            cands[count] = min(max(r if v > 0.0 else -r, lower), upper)
            count += 1
    cands[count] = min(max(prox_lp_scalar_kernel(v, w, p), lower), upper)
    count += 1
    if math.isfinite(lower):
        cands[count] = lower
        count += 1
    if math.isfinite(upper):
        cands[count] = upper
        count += 1
    for i in range(count):
        c = cands[i]
        val = lp_objective(c, v, w, p)
        if val < best_val:
            best_val = val
            best = c
    return best


@njit
def _prox_lp_box_vec_loop(v, w, p, lower, upper):
    out = np.empty_like(v)
    for i in range(v.shape[0]):
        out[i] = prox_lp_box_kernel(v[i], w[i], p, lower[i], upper[i])
    return out


def _local_root_numpy(a, w, p):
    """Vectorised ``_lp_local_root``; NaN marks 'no positive stationary point'."""
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tmin = (w * p * (1.0 - p)) ** (1.0 / (2.0 - p))
        gmin = tmin - a + w * p * tmin ** (p - 1.0)
        ok = (w > 0.0) & (a > 0.0) & (tmin < a) & (gmin < 0.0)
        t = np.where(ok, a, np.nan)
        lo = np.where(ok, tmin, np.nan)
        hi = t.copy()
        active = ok.copy()
        for _ in range(200):
            if not active.any():
                break
            g = t - a + w * p * t ** (p - 1.0)
            hi = np.where(active & (g > 0.0), t, hi)
            lo = np.where(active & (g <= 0.0), t, lo)
            dg = 1.0 + w * p * (p - 1.0) * t ** (p - 2.0)
            tn = np.where(dg > 0.0, t - g / dg, 0.5 * (lo + hi))
            bad = ~((lo <= tn) & (tn <= hi))
            tn = np.where(bad, 0.5 * (lo + hi), tn)
            done = np.abs(tn - t) <= NEWTON_TOL
            t = np.where(active, tn, t)
            active &= ~done
    return t


def _prox_lp_box_vec_numpy(v, w, p, lower, upper):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(invalid="ignore"):
        root = _local_root_numpy(np.abs(v), w, p)
    has_root = np.isfinite(root)
    signed_root = np.where(has_root, np.sign(v) * np.nan_to_num(root), 0.0)

    def obj(t):
        return 0.5 * (t - v) ** 2 + w * np.abs(t) ** p

    # unconstrained prox: local root if it beats the origin, else 0 (or v when w == 0)
    with np.errstate(invalid="ignore"):
        beats_zero = has_root & (obj(signed_root) < 0.5 * v * v)
    uncon = np.where(beats_zero, signed_root, 0.0)
    uncon = np.where((w <= 0.0) | (v == 0.0), v, uncon)

    zero_ok = (lower <= 0.0) & (0.0 <= upper)
    best = np.zeros_like(v)
    best_val = np.where(zero_ok, obj(np.zeros_like(v)), np.inf)
    cands = [
        (np.clip(signed_root, lower, upper), has_root),
        (np.clip(uncon, lower, upper), np.ones_like(has_root)),
        (np.where(np.isfinite(lower), lower, 0.0), np.isfinite(lower)),
        (np.where(np.isfinite(upper), upper, 0.0), np.isfinite(upper)),
    ]
    for c, valid in cands:
        val = np.where(valid, obj(c), np.inf)
        better = val < best_val
        best = np.where(better, c, best)
        best_val = np.where(better, val, best_val)
    return best


def prox_lp_box_vec(v, w, p, lower, upper):
    """Componentwise box-constrained ``|t|^p`` prox on the active backend."""
    v = np.ascontiguousarray(v, dtype=float)
    w = np.ascontiguousarray(np.broadcast_to(w, v.shape), dtype=float)
    lower = np.ascontiguousarray(np.broadcast_to(lower, v.shape), dtype=float)
    upper = np.ascontiguousarray(np.broadcast_to(upper, v.shape), dtype=float)
    if USE_NUMBA:
        return _prox_lp_box_vec_loop(v, w, float(p), lower, upper)
    return _prox_lp_box_vec_numpy(v, w, float(p), lower, upper)


# ---------------------------------------------------------------------------
# distance to {x >= 0, |y| >= exp(-x)} u {(0, 0)}
# ---------------------------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@njit
def _exp_curve_phi(s, a, b):
    e = math.exp(-s)
    return (s - a) * (s - a) + (e - b) * (e - b)


@njit
def _exp_region_project_one(px, py):
    if px >= 0.0 and abs(py) >= math.exp(-px):
        return px, py, 0.0
    if px == 0.0 and py == 0.0:
        return 0.0, 0.0, 0.0
    # nearest point lies on the same side as py; work with b = |py|
    a = px
    b = abs(py)
    bx = 0.0
    by = 0.0
    bd = a * a + b * b
    ry = b if b > 1.0 else 1.0
    d = a * a + (b - ry) * (b - ry)
    if d < bd:
        bx, by, bd = 0.0, ry, d
    # boundary curve (s, exp(-s)): coarse scan, then golden section
    smax = 2.0 * abs(a) + b + 2.0
    step = smax / (_EXP_SAMPLES - 1)
    jbest = 0
    fbest = _exp_curve_phi(0.0, a, b)
    for j in range(1, _EXP_SAMPLES):
        f = _exp_curve_phi(j * step, a, b)
        if f < fbest:
            fbest = f
            jbest = j
    lo = max(0.0, (jbest - 1) * step)
    hi = min(smax, (jbest + 1) * step)
    c = hi - _INVPHI * (hi - lo)
    e = lo + _INVPHI * (hi - lo)
    fc = _exp_curve_phi(c, a, b)
    fe = _exp_curve_phi(e, a, b)
    for _ in range(_GOLDEN_ITERS):
        if fc < fe:
            hi = e
            e = c
            fe = fc
            c = hi - _INVPHI * (hi - lo)
            fc = _exp_curve_phi(c, a, b)
        else:
            lo = c
            c = e
            fc = fe
            e = lo + _INVPHI * (hi - lo)
            fe = _exp_curve_phi(e, a, b)
    s = 0.5 * (lo + hi)
    fs = _exp_curve_phi(s, a, b)
    if fbest < fs:
        s = jbest * step
        fs = fbest
    if fs < bd:
        bx, by, bd = s, math.exp(-s), fs
    if py < 0.0:
        by = -by
    return bx, by, math.sqrt(bd)


@njit
def _exp_region_project_loop(px, py):
    n = px.shape[0]
    qx = np.empty(n)
    qy = np.empty(n)
    dist = np.empty(n)
    for i in range(n):
        qx[i], qy[i], dist[i] = _exp_region_project_one(px[i], py[i])
    return qx, qy, dist


def _exp_region_project_numpy(px, py):
    a = np.asarray(px, dtype=float)
    b = np.abs(py)
    inside = ((a >= 0.0) & (b >= np.exp(-a))) | ((a == 0.0) & (b == 0.0))

    bx = np.zeros_like(a)
    by = np.zeros_like(a)
    bd = a * a + b * b
    ry = np.maximum(b, 1.0)
    d = a * a + (b - ry) ** 2
    take = d < bd
    by = np.where(take, ry, by)
    bd = np.where(take, d, bd)

    def phi(s):
        e = np.exp(-s)
        return (s - a) ** 2 + (e - b) ** 2

    smax = 2.0 * np.abs(a) + b + 2.0
    step = smax / (_EXP_SAMPLES - 1)
    grid = np.arange(_EXP_SAMPLES)[None, :] * step[:, None]
    vals = (grid - a[:, None]) ** 2 + (np.exp(-grid) - b[:, None]) ** 2
    jbest = np.argmin(vals, axis=1)
    fbest = vals[np.arange(a.size), jbest]
    lo = np.maximum(0.0, (jbest - 1) * step)
    hi = np.minimum(smax, (jbest + 1) * step)
    c = hi - _INVPHI * (hi - lo)
    e = lo + _INVPHI * (hi - lo)
    fc = phi(c)
    fe = phi(e)
    for _ in range(_GOLDEN_ITERS):
        left = fc < fe
        new_hi = np.where(left, e, hi)
        new_lo = np.where(left, lo, c)
        new_c = np.where(left, new_hi - _INVPHI * (new_hi - new_lo), e)
        new_e = np.where(left, c, new_lo + _INVPHI * (new_hi - new_lo))
        fc_new = np.where(left, phi(new_c), fe)
        fe_new = np.where(left, fc, phi(new_e))
        lo, hi, c, e, fc, fe = new_lo, new_hi, new_c, new_e, fc_new, fe_new
    s = 0.5 * (lo + hi)
    fs = phi(s)
    use_sample = fbest < fs
    s = np.where(use_sample, jbest * step, s)
    fs = np.where(use_sample, fbest, fs)
    take = fs < bd
    bx = np.where(take, s, bx)
    by = np.where(take, np.exp(-s), by)
    bd = np.where(take, fs, bd)
    by = np.where(np.asarray(py) < 0.0, -by, by)

    qx = np.where(inside, a, bx)
    qy = np.where(inside, py, by)
    dist = np.where(inside, 0.0, np.sqrt(bd))
    return qx, qy, dist


def exp_region_project(px, py):
    """Nearest points and distances to the exponential-cusp region."""
    px = np.ascontiguousarray(px, dtype=float).ravel()
    py = np.ascontiguousarray(py, dtype=float).ravel()
    if USE_NUMBA:
        return _exp_region_project_loop(px, py)
    return _exp_region_project_numpy(px, py)


# ---------------------------------------------------------------------------
# tridiagonal solves
# ---------------------------------------------------------------------------

@njit
def _thomas(sub, diag, sup, rhs):
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = sup[0] / diag[0] if n > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = sup[i] / denom
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / denom
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def solve_tridiagonal(sub, diag, sup, rhs):
    """Solve a tridiagonal system; ``sub``/``sup`` have length ``n - 1``."""
    sub = np.ascontiguousarray(sub, dtype=float)
    diag = np.ascontiguousarray(diag, dtype=float)
    sup = np.ascontiguousarray(sup, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if USE_NUMBA:
        return _thomas(sub, diag, sup, rhs)
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = sup
    ab[1, :] = diag
    ab[2, :-1] = sub
    return scipy.linalg.solve_banded((1, 1), ab, rhs)


def backend():
    return "numba" if USE_NUMBA else "numpy"
