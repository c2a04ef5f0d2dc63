"""Augmented Lagrangian solver for composite problems with ``|x|^p`` terms.

Solves ``min f(x) + sum_i w_i |x_i|^p  s.t.  G(x) in K, x in C`` with a
safeguarded augmented Lagrangian method, checks stationarity certificates,
and ships an ``l^p`` sparse optimal control application plus small
two-dimensional geometry experiments.
"""

from ._kernels import backend
from .alm import AlmConfig, AlmResult, run_alm
from .model import LpSeparableTerm, ProblemSpec, SmoothFunctional, SmoothMap
from .prox import prox_lp_box, prox_lp_scalar
from .sets import Ball, Box, Halfspace, NonpositiveOrthant, ZeroSet

__version__ = "0.1.0"

__all__ = [
    "AlmConfig", "AlmResult", "Ball", "Box", "Halfspace", "LpSeparableTerm", "NonpositiveOrthant",
    "ProblemSpec", "SmoothFunctional", "SmoothMap", "ZeroSet", "backend", "prox_lp_box",
    "prox_lp_scalar", "run_alm",
]
