"""Proximal and subdifferential oracles for ``w |t|^p``, ``0 < p < 1``."""

from typing import NamedTuple

import numpy as np

from . import _kernels


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def is_all_reals(self):
        return self.lo == -np.inf and self.hi == np.inf

    def contains(self, v):
        return self.lo <= v <= self.hi


ALL_REALS = Interval(-np.inf, np.inf)


def prox_lp_scalar(v, w, p):
    """Global minimizer of ``0.5 (t - v)^2 + w |t|^p``.

    Among equally good minimizers the origin is returned, so the result is
    always one of ``0`` or the larger stationary point on the side of ``v``.
    """
    _check_wp(w, p)
    return float(_kernels.prox_lp_scalar_kernel(float(v), float(w), float(p)))


def prox_lp_box(v, w, p, lower, upper):
    """Global minimizer of ``0.5 (t - v)^2 + w |t|^p`` over ``[lower, upper]``."""
    _check_wp(w, p)
    if lower > upper:
        raise ValueError(f"empty interval [{lower}, {upper}]")
    return float(_kernels.prox_lp_box_kernel(float(v), float(w), float(p), float(lower), float(upper)))


def prox_lp_box_vec(v, w, p, lower, upper):
    """Vectorised :func:`prox_lp_box`; ``w``, ``lower``, ``upper`` broadcast against ``v``."""
    _check_wp(np.min(w) if np.size(w) else 0.0, p)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), np.shape(v))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), np.shape(v))
    if np.any(lower > upper):
        raise ValueError("empty interval in box prox")
    return _kernels.prox_lp_box_vec(v, w, p, lower, upper)


def lp_objective(t, v, w, p):
    return 0.5 * (t - v) ** 2 + w * np.abs(t) ** p


def lp_subdiff_point(u, w, p):
    """Subdifferential of ``w |.|^p`` at ``u`` as an interval.

    Off the origin it is the singleton ``{w p |u|^(p-2) u}``; at the origin no
    constraint is imposed, which is encoded as the whole real line.
    """
    _check_wp(w, p)
    if u == 0:
        return ALL_REALS
    g = w * p * abs(u) ** (p - 2.0) * u
    return Interval(g, g)


def _check_wp(w, p):
    if not 0.0 < p < 1.0:
        raise ValueError(f"exponent p must lie in (0, 1), got {p}")
    if w < 0:
        raise ValueError(f"weight must be nonnegative, got {w}")
