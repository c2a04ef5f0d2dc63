"""Closed convex sets with exact projections and normal-cone tests.

The catalog is deliberately closed: boxes, the nonpositive orthant, the
origin, Euclidean balls and halfspaces.  Unbounded box sides are encoded by
IEEE infinities.  All projections act on the last axis, so a stack of points
of shape ``(N, m)`` is projected row by row.
"""

from dataclasses import dataclass

import numpy as np

# Points within this relative distance of a face count as lying on it.
# Multipliers are still checked by exact sign tests.
FACE_RTOL = 1e-12


def _on_face(y, bound):
    bound = np.asarray(bound, dtype=float)
    near = np.abs(y - bound) <= FACE_RTOL * np.maximum(1.0, np.abs(bound))
    return near & np.isfinite(bound)


class ConvexSet:
    dim: int

    def project(self, y):
        raise NotImplementedError

    def contains(self, y):
        raise NotImplementedError

    def normal_cone_contains(self, y, v):
        """Return True iff ``v`` lies in the normal cone of the set at ``y``.

        ``y`` must belong to the set (up to ``FACE_RTOL``), otherwise the cone
        is empty and the answer is False.
        """
        raise NotImplementedError

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}, got {y.shape}")
        return y


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = np.broadcast_arrays(
            np.atleast_1d(np.asarray(self.lower, dtype=float)),
            np.atleast_1d(np.asarray(self.upper, dtype=float)),
        )
        lo, hi = np.array(lo), np.array(hi)
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper componentwise")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("box would be empty")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unbounded(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @property
    def dim(self):
        return self.lower.shape[0]

    @property
    def is_trivial(self):
        return bool(np.all(np.isneginf(self.lower)) and np.all(np.isposinf(self.upper)))

    def project(self, y):
        return np.clip(self._check(y), self.lower, self.upper)

    def contains(self, y):
        y = self._check(y)
        return bool(np.all((y >= self.lower) & (y <= self.upper)))

    def component_cone(self, y):
        """Per-component normal cone intervals ``(lo, hi)`` at a member ``y``."""
        y = self._check(y)
        at_lo = _on_face(y, self.lower) | (y <= self.lower)
        at_hi = _on_face(y, self.upper) | (y >= self.upper)
        lo = np.where(at_lo, -np.inf, 0.0)
        hi = np.where(at_hi, np.inf, 0.0)
        return lo, hi

    def normal_cone_contains(self, y, v):
        y = self._check(y)
        v = np.asarray(v, dtype=float)
        slack = FACE_RTOL * np.maximum(1.0, np.abs(np.where(np.isfinite(self.lower), self.lower, 0.0)))
        slack_hi = FACE_RTOL * np.maximum(1.0, np.abs(np.where(np.isfinite(self.upper), self.upper, 0.0)))
        if np.any(y < self.lower - slack) or np.any(y > self.upper + slack_hi):
            return False
        lo, hi = self.component_cone(y)
        return bool(np.all((v >= lo) & (v <= hi)))


@dataclass(frozen=True, eq=False)
class NonpositiveOrthant(ConvexSet):
    m: int

    @property
    def dim(self):
        return self.m

    def project(self, y):
        return np.minimum(self._check(y), 0.0)

    def contains(self, y):
        return bool(np.all(self._check(y) <= 0.0))

    def normal_cone_contains(self, y, v):
        y = self._check(y)
        v = np.asarray(v, dtype=float)
        if np.any(y > FACE_RTOL):
            return False
        active = _on_face(y, 0.0)
        return bool(np.all(v >= 0.0) and np.all(v[~active] == 0.0))


@dataclass(frozen=True, eq=False)
class ZeroSet(ConvexSet):
    m: int

    @property
    def dim(self):
        return self.m

    def project(self, y):
        return np.zeros_like(self._check(y))

    def contains(self, y):
        return bool(np.all(self._check(y) == 0.0))

    def normal_cone_contains(self, y, v):
        return bool(np.all(_on_face(self._check(y), 0.0)))


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        c.flags.writeable = False
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, y):
        y = self._check(y)
        d = y - self.center
        nrm = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(nrm > self.radius, self.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
        return self.center + d * scale

    def contains(self, y):
        return bool(np.linalg.norm(self._check(y) - self.center) <= self.radius * (1 + FACE_RTOL))

    def normal_cone_contains(self, y, v, atol=1e-12):
        y = self._check(y)
        v = np.asarray(v, dtype=float)
        d = y - self.center
        nrm = np.linalg.norm(d)
        if nrm > self.radius * (1 + FACE_RTOL):
            return False
        vn = np.linalg.norm(v)
        if vn == 0.0:
            return True
        if nrm < self.radius * (1 - FACE_RTOL):
            return False
        # v must be a nonnegative multiple of the outward direction
        cos = float(v @ d) / (vn * nrm)
        return cos >= 1.0 - atol


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """``{y : <a, y> <= b}``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).copy()
        if not np.any(a != 0):
            raise ValueError("halfspace normal must be nonzero")
        a.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return self.a.shape[0]

    def project(self, y):
        y = self._check(y)
        excess = y @ self.a - self.b
        # points already on the face (to rounding) stay put, so projection is idempotent
        excess = np.where(excess <= FACE_RTOL * max(1.0, abs(self.b)), 0.0, excess)
        return y - np.multiply.outer(excess, self.a) / (self.a @ self.a)

    def contains(self, y):
        return bool(self._check(y) @ self.a <= self.b + FACE_RTOL * max(1.0, abs(self.b)))

    def normal_cone_contains(self, y, v, atol=1e-12):
        y = self._check(y)
        v = np.asarray(v, dtype=float)
        s = float(y @ self.a)
        if s > self.b + FACE_RTOL * max(1.0, abs(self.b)):
            return False
        vn = np.linalg.norm(v)
        if vn == 0.0:
            return True
        if not _on_face(s, self.b):
            return False
        cos = float(v @ self.a) / (vn * np.linalg.norm(self.a))
        return cos >= 1.0 - atol


def project(K, y):
    """Euclidean projection of ``y`` onto ``K``."""
    return K.project(y)


def dist_and_distsq(K, y):
    """Return ``(dist_K(y), dist_K(y)**2)``."""
    y = np.asarray(y, dtype=float)
    r = y - K.project(y)
    sq = float(r @ r) if r.ndim == 1 else np.einsum("...i,...i->...", r, r)
    return np.sqrt(sq), sq


def polyhedral_cone_intervals(K, y):
    """Normal cone of a polyhedral ``K`` at ``y`` as per-component intervals.

    Returns ``(lo, hi)`` or raises ``TypeError`` for sets whose normal cones
    are not products of intervals.
    """
    y = np.asarray(y, dtype=float)
    if isinstance(K, ZeroSet):
        return np.full(K.m, -np.inf), np.full(K.m, np.inf)
    if isinstance(K, NonpositiveOrthant):
        active = _on_face(y, 0.0) | (y > 0.0)
        return np.zeros(K.m), np.where(active, np.inf, 0.0)
    if isinstance(K, Box):
        return K.component_cone(y)
    raise TypeError(f"{type(K).__name__} has no interval normal-cone description")
