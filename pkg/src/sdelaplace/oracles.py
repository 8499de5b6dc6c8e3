"""Adaptive-quadrature values of V and I that use only b and sigma.

These integrate the defining integrals directly, so they share no algebra
with the closed forms they are compared against.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .model import Model, drift_b

__all__ = ["int_b_quad", "variance_quad", "fisher_quad"]

_OPTS = {"epsabs": 0.0, "epsrel": 1e-12, "limit": 400}


def _breaks(model: Model, a: float, b: float):
    if model.vol.kind != "tabulated":
        return None
    pts = [k for k in model.vol.knots if a < k < b]
    return pts or None


def _b(model: Model, s: float) -> float:
    return float(drift_b(model, s))


def int_b_quad(model: Model, s: float, t: float) -> float:
    """int_s^t b(u) du."""
    if s == t:
        return 0.0
    val, _ = integrate.quad(lambda u: _b(model, u), s, t, points=_breaks(model, s, t), **_OPTS)
    return val


def variance_quad(model: Model, t: float) -> float:
    """V(t) = int_0^t exp{2 alpha int_s^t b} sigma(s)^2 ds."""
    a = model.alpha

    def f(s):
        return math.exp(2.0 * a * int_b_quad(model, s, t)) * float(model.sigma2(s))

    val, _ = integrate.quad(f, 0.0, t, points=_breaks(model, 0.0, t), **_OPTS)
    return val


def fisher_quad(model: Model, t: float) -> float:
    """I(t) = int_0^t b(s)^2 V(s) / sigma(s)^2 ds with V from ``variance_quad``."""

    def f(s):
        if s == 0.0:
            return 0.0
        b = _b(model, s)
        return b * b * variance_quad(model, s) / float(model.sigma2(s))

    opts = dict(_OPTS, epsrel=1e-11)
    val, _ = integrate.quad(f, 0.0, t, points=_breaks(model, 0.0, t), **opts)
    return val
