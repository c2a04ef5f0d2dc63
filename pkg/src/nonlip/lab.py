"""Planar set geometry and one-dimensional step functions.

Small numerical experiments on

* whether translated ``rho``-enlargements of two closed planar sets can be
  made disjoint (a one-sided search: it can witness separation, never rule
  it out),
* a separation family of shifted distance functions with an indicator,
* relative lower semicontinuity of piecewise-constant functions on the line.

All sets expose vectorized ``dist``/``project``/``contains`` acting on
arrays of shape ``(..., 2)``.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels

BOUNDARY_TOL = 1e-9
WITNESS_TOL = 1e-9


def _pts(z):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 2:
        raise ValueError(f"expected points of shape (..., 2), got {z.shape}")
    return z


class ImplicitSet2D:
    def project(self, z):
        raise NotImplementedError

    def dist(self, z):
        z = _pts(z)
        return np.linalg.norm(z - self.project(z), axis=-1)

    def contains(self, z, tol=BOUNDARY_TOL):
        return self.dist(z) <= tol

    def normal_cone(self, z):
        """Fréchet normal cone at a member as a list of unit generators.

        An empty list means the cone is ``{0}``; ``None`` means not implemented.
        """
        return None


@dataclass(frozen=True)
class Ray(ImplicitSet2D):
    """``{origin + s d : s >= 0}``."""

    origin: Tuple[float, float] = (0.0, 0.0)
    direction: Tuple[float, float] = (1.0, 0.0)

    def project(self, z):
        z = _pts(z)
        o = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        s = np.maximum((z - o) @ d, 0.0)
        return o + s[..., None] * d


@dataclass(frozen=True)
class Line(ImplicitSet2D):
    point: Tuple[float, float] = (0.0, 0.0)
    direction: Tuple[float, float] = (1.0, 0.0)

    def project(self, z):
        z = _pts(z)
        o = np.asarray(self.point, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        return o + ((z - o) @ d)[..., None] * d


def Ray41():
    """Nonnegative half of the horizontal axis."""
    return Ray((0.0, 0.0), (1.0, 0.0))


@dataclass(frozen=True)
class ExpRegion41(ImplicitSet2D):
    """``{x >= 0, |y| >= exp(-x)}`` together with the origin."""

    def project(self, z):
        z = _pts(z)
        qx, qy, _ = _kernels.exp_region_project(z[..., 0], z[..., 1])
        return np.stack([qx, qy], axis=-1).reshape(z.shape)

    def dist(self, z):
        z = _pts(z)
        return _kernels.exp_region_project(z[..., 0], z[..., 1])[2].reshape(z.shape[:-1])

    def contains(self, z, tol=BOUNDARY_TOL):
        z = _pts(z)
        x, y = z[..., 0], z[..., 1]
        body = (x >= -tol) & (np.abs(y) >= np.exp(-np.maximum(x, 0.0)) - tol)
        return body | (np.hypot(x, y) <= tol)


@dataclass(frozen=True)
class UnionHalfplanes42(ImplicitSet2D):
    """``{max(y, x + y) >= 0}``: union of ``{y >= 0}`` and ``{x + y >= 0}``."""

    def project(self, z):
        z = _pts(z)
        x, y = z[..., 0], z[..., 1]
        inside = np.maximum(y, x + y) >= 0
        p1 = np.stack([x, np.zeros_like(y)], axis=-1)
        s = np.minimum(x + y, 0.0) / 2.0
        p2 = np.stack([x - s, y - s], axis=-1)
        d1 = np.abs(np.minimum(y, 0.0))
        d2 = np.abs(np.minimum(x + y, 0.0)) / math.sqrt(2.0)
        best = np.where((d1 <= d2)[..., None], p1, p2)
        return np.where(inside[..., None], z, best)

    def normal_cone(self, z):
        x, y = (float(v) for v in _pts(z))
        on_h1 = abs(y) <= BOUNDARY_TOL and x < -BOUNDARY_TOL
        on_h2 = abs(x + y) <= BOUNDARY_TOL and x > BOUNDARY_TOL
        if on_h1:
            return [np.array([0.0, -1.0])]
        if on_h2:
            return [np.array([-1.0, -1.0]) / math.sqrt(2.0)]
        # interior points and the reentrant corner at the origin
        return []


@dataclass(frozen=True)
class LowerHalf42(ImplicitSet2D):
    """``{y <= 0}``."""

    def project(self, z):
        z = _pts(z)
        return np.stack([z[..., 0], np.minimum(z[..., 1], 0.0)], axis=-1)

    def normal_cone(self, z):
        _, y = (float(v) for v in _pts(z))
        return [np.array([0.0, 1.0])] if abs(y) <= BOUNDARY_TOL else []


@dataclass(frozen=True)
class DiskAt(ImplicitSet2D):
    center: Tuple[float, float]
    r: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError("radius must be nonnegative")

    def project(self, z):
        z = _pts(z)
        c = np.asarray(self.center, dtype=float)
        d = z - c
        nrm = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(nrm > self.r, self.r / np.where(nrm > 0, nrm, 1.0), 1.0)
        return c + d * scale


def dist_to_cone(v, generators):
    """Euclidean distance from ``v`` to the cone spanned by at most one unit ray."""
    v = np.asarray(v, dtype=float)
    if not generators:
        return float(np.linalg.norm(v))
    if len(generators) > 1:
        raise NotImplementedError("only ray cones are supported")
    d = generators[0]
    t = max(float(v @ d), 0.0)
    return float(np.linalg.norm(v - t * d))


# ---------------------------------------------------------------------------
# enlargements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def shifted(self, a):
        return Window(self.xmin + a[0], self.xmax + a[0], self.ymin + a[1], self.ymax + a[1])

    def grid(self, h):
        nx = max(2, int(math.ceil((self.xmax - self.xmin) / h)) + 1)
        ny = max(2, int(math.ceil((self.ymax - self.ymin) / h)) + 1)
        xs = np.linspace(self.xmin, self.xmax, nx)
        ys = np.linspace(self.ymin, self.ymax, ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        step = max(xs[1] - xs[0], ys[1] - ys[0])
        return np.stack([X, Y], axis=-1), step


EX41_WINDOW = Window(-1.0, 25.0, -2.0, 2.0)


@dataclass
class GapResult:
    gap: float
    value: float
    witness: Optional[np.ndarray]
    coarse_value: float
    margin: float
    certified_empty: bool
    at_window_edge: bool


def _maxdist(s1, s2, a, Z):
    return np.maximum(s1.dist(Z + a), s2.dist(Z))


def _zoom(s1, s2, a, z0, h, levels=14, m=10):
    """Nested grids of ``(2m+1)^2`` nodes shrinking by ``m`` around the incumbent."""
    best_z = np.asarray(z0, dtype=float)
    best = float(_maxdist(s1, s2, a, best_z[None])[0])
    offs = np.linspace(-1.0, 1.0, 2 * m + 1)
    for _ in range(levels):
        OX, OY = np.meshgrid(offs * h, offs * h, indexing="ij")
        Z = best_z + np.stack([OX.ravel(), OY.ravel()], axis=-1)
        vals = _maxdist(s1, s2, a, Z)
        j = int(np.argmin(vals))
        if vals[j] <= best:
            best, best_z = float(vals[j]), Z[j]
        h = 2.0 * h / m
        if best == 0.0:
            break
    return best, best_z


def enlargement_gap(s1, s2, a, rho, window=EX41_WINDOW, h=0.05, starts=6):
    """How far ``(s1 + rho B - a)`` and ``(s2 + rho B)`` are from meeting.

    ``value = min_z max(dist_s1(z + a), dist_s2(z))`` over the window, found
    by a coarse grid of step ``h`` and zoomed grids around the best
    ``starts`` nodes; ``gap = max(value - rho, 0)``.  A witness ``z`` is
    returned when ``value - rho < 1e-9``.  Since ``z -> max(...)`` is
    1-Lipschitz, the intersection is certified empty inside the window when
    the coarse minimum exceeds ``rho`` by more than ``h * sqrt(2) / 2``.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    a = np.asarray(a, dtype=float)
    Z, step = window.grid(h)
    V = _maxdist(s1, s2, a, Z)
    margin = step * math.sqrt(2.0) / 2.0
    coarse = float(V.min())
    flat = V.ravel()
    order = np.argsort(flat, kind="stable")
    Zf = Z.reshape(-1, 2)
    picked: List[np.ndarray] = []
    for j in order:
        z = Zf[j]
        if all(np.max(np.abs(z - q)) > 2 * step for q in picked):
            picked.append(z)
        if len(picked) >= starts:
            break
    best, best_z = coarse, Zf[order[0]]
    for z in picked:
        v, zz = _zoom(s1, s2, a, z, step)
        if v < best:
            best, best_z = v, zz
    gap = max(best - rho, 0.0)
    witness = best_z.copy() if best - rho < WITNESS_TOL else None
    edge = (abs(best_z[0] - window.xmin) < step or abs(best_z[0] - window.xmax) < step
            or abs(best_z[1] - window.ymin) < step or abs(best_z[1] - window.ymax) < step)
    return GapResult(gap, best, witness, coarse, float(margin), bool(coarse - rho > margin), bool(edge))


@dataclass
class ProbeReport:
    eps: float
    trials: int
    witness: Optional[Tuple[np.ndarray, float]]
    min_excess: float
    note: str = ("one-sided search: a witness certifies separated enlargements; "
                 "finding none does not rule them out")

    @property
    def found(self):
        return self.witness is not None


def fa_extremality_probe(s1, s2, eps, budget=10_000, window=EX41_WINDOW, h=0.05, levels=12, seed=0):
    """Search translations ``||a|| < eps`` and radii ``rho = eps / 2^j`` that separate.

    Each ``(a, rho)`` pair is one trial.  The distance to ``s2`` on the
    coarse grid is computed once; a pair is accepted only when the coarse
    minimum of ``max(dist_s1(z + a), dist_s2(z))`` exceeds ``rho`` by the
    Lipschitz margin, so every reported witness is certified at the grid
    resolution.  ``min_excess`` is the smallest ``coarse min - rho - margin``
    seen (positive means separated).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    Z, step = window.grid(h)
    margin = step * math.sqrt(2.0) / 2.0
    D2 = s2.dist(Z)
    rhos = eps / 2.0 ** np.arange(1, levels + 1)
    rng = np.random.default_rng(seed)
    half = 0.5 * eps
    fixed = [np.zeros(2), np.array([half, 0.0]), np.array([-half, 0.0]),
             np.array([0.0, half]), np.array([0.0, -half])]
    trials = 0
    min_excess = math.inf
    k = 0
    while trials + len(rhos) <= budget:
        if k < len(fixed):
            a = fixed[k]
        else:
            r = eps * math.sqrt(rng.random()) * (1 - 1e-12)
            phi = 2 * math.pi * rng.random()
            a = np.array([r * math.cos(phi), r * math.sin(phi)])
        k += 1
        coarse = float(np.min(np.maximum(s1.dist(Z + a), D2)))
        for rho in rhos:
            trials += 1
            excess = coarse - rho - margin
            min_excess = min(min_excess, excess)
            if excess > 0:
                return ProbeReport(eps, trials, (a, float(rho)), min_excess)
    return ProbeReport(eps, trials, None, min_excess)


def write_point_cloud(path, s1, s2, window, h, a=(0.0, 0.0)):
    """CSV with columns ``x, y, dist_1, dist_2`` (``dist_1`` taken at ``z + a``)."""
    Z, _ = window.grid(h)
    Z = Z.reshape(-1, 2)
    d1 = s1.dist(Z + np.asarray(a, dtype=float))
    d2 = s2.dist(Z)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "dist_omega1", "dist_omega2"])
        for (x, y), u, v in zip(Z, d1, d2):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(u)), repr(float(v))])


# ---------------------------------------------------------------------------
# separation family with an indicator
# ---------------------------------------------------------------------------

@dataclass
class FamilyCheck:
    ok: bool
    positive: bool
    slice_ok: bool
    min_value: float
    slice_min: float
    bound: float
    n_samples: int
    slack: float


def ex42_family_check(t, rho, n_grid=161, slack=1e-12):
    """Sampled positivity of ``||(x - u, y - v + t)|| + i(u <= 0)``.

    Samples ``(x, y)`` from ``UnionHalfplanes42 + rho B`` and ``(u, v)`` from
    ``LowerHalf42 + rho B`` on a grid of the square ``[-4t, 4t]^2``.  Two
    facts are checked: every finite value is positive, and on the slice
    ``x = u <= 0`` every value exceeds ``t - 3 rho``.  Off that slice the
    value can drop below ``t - 3 rho`` (e.g. ``t = 0.05, rho = 0.01`` near
    ``(0.013, -0.027), (0, 0.01)``), so the bound is only asserted there.
    """
    if not (t > 0 and rho > 0):
        raise ValueError("t and rho must be positive")
    if not rho < t / 3.0:
        raise ValueError(f"need rho < t/3, got rho={rho}, t={t}")
    s1, s2 = UnionHalfplanes42(), LowerHalf42()
    xs = np.linspace(-4 * t, 4 * t, n_grid)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    Z = np.stack([X.ravel(), Y.ravel()], axis=-1)
    A = Z[s1.dist(Z) <= rho]
    B = Z[(s2.dist(Z) <= rho) & (Z[:, 0] <= 0.0)]
    bound = t - 3.0 * rho
    # min over pairs of ||(x, y + t) - (u, v)||
    tree = cKDTree(B)
    d, _ = tree.query(A + np.array([0.0, t]))
    min_value = float(d.min())
    # slice x = u: columns shared by both sample sets
    slice_min = math.inf
    for x in np.unique(B[:, 0]):
        ya = A[A[:, 0] == x, 1]
        vb = B[B[:, 0] == x, 1]
        if ya.size and vb.size:
            slice_min = min(slice_min, float(np.min(np.abs(ya[:, None] - vb[None, :] + t))))
    positive = min_value > 0.0
    slice_ok = slice_min > bound - slack
    return FamilyCheck(positive and slice_ok, positive, slice_ok, min_value, slice_min, bound,
                       int(A.shape[0] * B.shape[0]), slack)


@dataclass
class DualConfig:
    point1: np.ndarray
    point2: np.ndarray
    dual1: np.ndarray
    dual2: np.ndarray
    cone_dist1: float
    cone_dist2: float
    unit_error: float
    sum_x: float
    sum_y: float

    def passed(self, tol=1e-9):
        return (self.cone_dist1 <= tol and self.cone_dist2 <= tol and self.unit_error <= tol
                and self.sum_x <= tol and abs(self.sum_y) <= tol)


def ex42_dual_vectors(eps):
    """The two dual configurations at boundary points within ``eps`` of the origin.

    1. ``(x, y) = (-eps/2, 0)`` with ``(0, -1)``, ``(u, v) = (-eps/2, 0)`` with ``(0, 1)``;
    2. ``(x, y) = (eps/2, -eps/2)`` with ``(-1, -1)/sqrt 2``, ``(u, v) = (0, 0)`` with
       ``(0, 1/sqrt 2)``.
    """
    if not 0 < eps <= 0.1:
        raise ValueError("eps must lie in (0, 0.1]")
    s1, s2 = UnionHalfplanes42(), LowerHalf42()
    r = math.sqrt(2.0) / 2.0
    raw = [
        ((-eps / 2, 0.0), (-eps / 2, 0.0), (0.0, -1.0), (0.0, 1.0)),
        ((eps / 2, -eps / 2), (0.0, 0.0), (-r, -r), (0.0, r)),
    ]
    out = []
    for p1, p2, d1, d2 in raw:
        p1, p2, d1, d2 = (np.array(v, dtype=float) for v in (p1, p2, d1, d2))
        if not (s1.contains(p1) and s2.contains(p2)):
            raise AssertionError("configuration point left its set")
        out.append(DualConfig(
            p1, p2, d1, d2,
            dist_to_cone(d1, s1.normal_cone(p1)),
            dist_to_cone(d2, s2.normal_cone(p2)),
            abs(float(np.linalg.norm(d1)) - 1.0),
            float(d1[0] + d2[0]),
            float(d1[1] + d2[1]),
        ))
    return out


# ---------------------------------------------------------------------------
# relative lower semicontinuity on the line
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseFn1D:
    """Piecewise constant: ``values[i]`` on the open piece between breakpoints,
    ``at_breaks[j]`` at ``breaks[j]``."""

    breaks: Tuple[float, ...]
    values: Tuple[float, ...]
    at_breaks: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1 or len(self.at_breaks) != len(self.breaks):
            raise ValueError("need len(values) = len(breaks) + 1 = len(at_breaks) + 1")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must increase")

    @classmethod
    def step(cls, left, right, at_zero):
        return cls((0.0,), (float(left), float(right)), (float(at_zero),))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        b = np.asarray(self.breaks)
        idx = np.searchsorted(b, x, side="left")
        out = np.asarray(self.values)[idx]
        hit = np.isin(x, b)
        if np.any(hit):
            out = np.where(hit, np.asarray(self.at_breaks)[np.clip(idx, 0, len(b) - 1)], out)
        return out


def ex31_function():
    return PiecewiseFn1D.step(0.0, 1.0, 0.0)


def ex32_function():
    return PiecewiseFn1D.step(0.0, -1.0, 0.0)


@dataclass(frozen=True)
class Interval1D:
    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = True

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        left = (x >= self.lo) if self.closed_lo else (x > self.lo)
        right = (x <= self.hi) if self.closed_hi else (x < self.hi)
        return left & right

    @property
    def diam(self):
        return self.hi - self.lo

    def shrink(self, rho):
        """``{x : [x - rho, x + rho] in self}`` (None if empty)."""
        lo, hi = self.lo + rho, self.hi - rho
        if lo > hi or (lo == hi and not (self.closed_lo and self.closed_hi)):
            return None
        return Interval1D(lo, hi, self.closed_lo, self.closed_hi)

    def intersect(self, other):
        if self.lo > other.lo or (self.lo == other.lo and not self.closed_lo):
            lo, clo = self.lo, self.closed_lo
        else:
            lo, clo = other.lo, other.closed_lo
        if self.hi < other.hi or (self.hi == other.hi and not self.closed_hi):
            hi, chi = self.hi, self.closed_hi
        else:
            hi, chi = other.hi, other.closed_hi
        if lo > hi or (lo == hi and not (clo and chi)):
            return None
        return Interval1D(lo, hi, clo, chi)


def closed(lo, hi):
    return Interval1D(lo, hi, True, True)


def open_(lo, hi):
    return Interval1D(lo, hi, False, False)


def point(x):
    return Interval1D(x, x, True, True)


@dataclass
class LscEstimate:
    lhs: float
    rhs: float
    holds: bool
    slack: float
    rho_values: List[float] = field(default_factory=list)
    rhs_per_rho: List[float] = field(default_factory=list)


def _inf_over(phi, piece, breaks, n_grid, delta):
    """Infimum of a piecewise-constant ``phi`` over an interval (grid + breakpoints + ends)."""
    pts = list(np.linspace(piece.lo, piece.hi, n_grid)) + [b for b in breaks]
    # ends that are excluded are approached from inside
    pts += [piece.lo + delta, piece.hi - delta]
    pts = np.array([p for p in pts if piece.contains(p)])
    if pts.size == 0:
        return math.inf
    return float(np.min(phi(pts)))


def lsc_relative_estimate(phi: PiecewiseFn1D, omega: Sequence[Interval1D], U: Interval1D,
                          levels=12, n_grid=201, delta=1e-9):
    """Both sides of the relative lower semicontinuity inequality on ``U``.

    ``lhs = inf phi`` over ``omega`` within ``U``.  For each radius
    ``rho_j = diam(U) / 2^j`` the inner set is ``U_j = {x : [x-rho_j, x+rho_j] in U}``
    and the liminf of ``phi`` over ``x in U_j`` with ``dist_omega(x) -> 0``
    is evaluated at the members of ``omega`` that are limits of such ``x``:
    the value there (if in ``U_j``) and the one-sided values at distance
    ``delta`` inside ``U_j``.  ``rhs`` is the smallest of these.  For
    piecewise-constant ``phi`` with breakpoints more than ``delta`` apart
    both sides are exact, so the reported slack is 0.
    """
    if not np.isfinite(U.diam):
        raise ValueError("U must be bounded")
    pieces = [U.intersect(w) for w in omega]
    pieces = [p for p in pieces if p is not None]
    if not pieces:
        raise ValueError("omega and U do not intersect")
    lhs = min(_inf_over(phi, p, phi.breaks, n_grid, delta) for p in pieces)

    rhos, per_rho = [], []
    for j in range(1, levels + 1):
        rho = U.diam / 2.0 ** j
        inner = U.shrink(rho)
        best = math.inf
        if inner is not None:
            for w in omega:
                closure = Interval1D(inner.lo, inner.hi)
                near = closure.intersect(w)
                if near is None:
                    continue
                # points of omega itself inside the inner set
                part = inner.intersect(w)
                if part is not None:
                    best = min(best, _inf_over(phi, part, phi.breaks, n_grid, delta))
                # one-sided approach to the ends of omega's piece
                for e in (near.lo, near.hi):
                    for x in (e - delta, e + delta):
                        if inner.contains(x) and (w.contains(x) or abs(x - e) <= delta):
                            best = min(best, float(phi(x)))
        rhos.append(rho)
        per_rho.append(best)
    rhs = min(per_rho)
    slack = 0.0
    return LscEstimate(lhs, rhs, lhs <= rhs + slack, slack, rhos, per_rho)
