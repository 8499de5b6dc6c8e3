"""Closed-form variance, joint Laplace transform and Fisher information.

All formulas are written in terms of ``L = log B_{K,C}(t)`` and the drift
denominator ``d = K S(t) + C``.  With ``x = (alpha - K) L`` one has

    V(t; alpha) = d * L * (e^x - 1) / x
    I_alpha(t)  = L^2 / 4 * (e^x - 1 - x) / x^2

which reduce to the ``alpha = K`` branches ``C B^K log B`` and ``(log B)^2 / 8``
without a separate code path for the removable singularity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import Model, ModelError

__all__ = [
    "DegenerateTransform",
    "LaplaceQuery",
    "LimitKind",
    "variance",
    "fisher_info",
    "joint_laplace",
    "joint_laplace_pre",
    "ou_laplace",
    "mansuy_laplace",
    "bridge_laplace",
    "scaled_denominator_laplace",
    "singular_joint_laplace",
    "wiener_joint_laplace",
    "fisher_diverges",
    "fisher_asymptote",
    "limit_kind",
    "denom_laplace_limit",
]


class DegenerateTransform(ArithmeticError):
    """The denominator under the square root is not positive."""


class LimitKind(str, enum.Enum):
    NORMAL = "normal"
    DICKEY_FULLER = "dickey-fuller"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class LaplaceQuery:
    """Arguments (t, mu, nu) of E exp{-mu Q_t - nu X_t^2}."""

    t: float
    mu: float
    nu: float = 0.0

    def __post_init__(self):
        if not (self.t >= 0):
            raise ModelError(f"t must be >= 0, got {self.t}")
        if not (self.mu >= 0 and self.nu >= 0):
            raise ModelError(f"mu and nu must be >= 0, got mu={self.mu}, nu={self.nu}")

    def validate(self, model: Model) -> "LaplaceQuery":
        if self.t >= model.T:
            raise ModelError(f"t={self.t} is not below T={model.T}")
        return self


def _expm1_over_x(x):
    """(e^x - 1) / x, continuous at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    direct = np.expm1(xs) / xs
    taylor = 1.0 + x / 2.0 + x * x / 6.0 + x**3 / 24.0 + x**4 / 120.0
    return np.where(small, taylor, direct)


def _expm1mx_over_x2(x):
    """(e^x - 1 - x) / x^2, continuous at 0 with value 1/2."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    direct = (np.expm1(xs) - xs) / (xs * xs)
    taylor = 0.5 + x / 6.0 + x * x / 24.0 + x**3 / 120.0 + x**4 / 720.0
    return np.where(small, taylor, direct)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def variance(model: Model, t, alpha: float | None = None):
    """V(t; alpha) = E X_t^2; ``alpha`` defaults to ``model.alpha``."""
    a = model.alpha if alpha is None else alpha
    L = model.log_B(t)
    d = model.affine(t)
    return _scalar(d * L * _expm1_over_x((a - model.K) * L))


def fisher_info(model: Model, t, alpha: float | None = None):
    """Fisher information I_alpha(t) = int_0^t b^2 V / sigma^2 ds."""
    a = model.alpha if alpha is None else alpha
    L = model.log_B(t)
    return _scalar(0.25 * L * L * _expm1mx_over_x2((a - model.K) * L))


def _log_cosh_minus_c_sinh(y: float, c: float) -> float:
    """log(cosh(y) - c sinh(y)), raising when the argument is not positive."""
    if abs(y) <= 30.0:
        D = math.cosh(y) - c * math.sinh(y)
        if not D > 0:
            raise DegenerateTransform(f"cosh - c sinh = {D} <= 0 (y={y}, c={c})")
        return math.log(D)
    m = abs(y)
    lead, trail = (1.0 - c, 1.0 + c) if y > 0 else (1.0 + c, 1.0 - c)
    D = 0.5 * (lead + trail * math.exp(-2.0 * m))
    if not D > 0:
        raise DegenerateTransform(f"cosh - c sinh <= 0 (y={y}, c={c})")
    return m + math.log(D)


def joint_laplace(model: Model, t: float, mu: float, nu: float = 0.0) -> float:
    """Psi_t(alpha, mu, nu) = E exp{-mu int_0^t b^2 X^2 / sigma^2 ds - nu X_t^2}.

    ``mu = 0`` is the Gaussian transform 1 / sqrt(1 + 2 nu V(t; alpha)).
    """
    LaplaceQuery(t, mu, nu).validate(model)
    if mu == 0:
        return 1.0 / math.sqrt(1.0 + 2.0 * nu * variance(model, t))
    a, K = model.alpha, model.K
    L = float(model.log_B(t))
    d = float(model.affine(t))
    R = math.sqrt(2.0 * mu + (a - K) ** 2)
    c = (a - K - 4.0 * nu * d) / R
    log_psi = 0.25 * (K - a) * L - 0.5 * _log_cosh_minus_c_sinh(0.5 * R * L, c)
    return math.exp(log_psi)


def joint_laplace_pre(model: Model, t: float, mu: float, nu: float = 0.0) -> float:
    """Same transform via the change-of-measure form before simplification.

    Uses A = alpha - K -/+ sqrt(2 mu + (alpha - K)^2) with the sign of b and
    the variance V(t; alpha - A) of the auxiliary process.
    """
    LaplaceQuery(t, mu, nu).validate(model)
    if not mu > 0:
        raise ModelError("the pre-simplification form needs mu > 0")
    a, K = model.alpha, model.K
    A = a - K - model.sign_b * math.sqrt(2.0 * mu + (a - K) ** 2)
    L = float(model.log_B(t))
    b_over_s2 = 1.0 / (2.0 * float(model.affine(t)))
    denom = 1.0 + (2.0 * nu - A * b_over_s2) * variance(model, t, alpha=a - A)
    if not denom > 0:
        raise DegenerateTransform(f"denominator {denom} <= 0")
    return math.exp(0.5 * (-0.5 * A * L - math.log(denom)))


def ou_laplace(alpha: float, t: float, mu: float) -> float:
    """E exp{-mu int_0^t Z_s^2 ds} for dZ = alpha Z dt + dB, Z_0 = 0."""
    if t < 0 or not mu > 0:
        raise ModelError("need t >= 0 and mu > 0")
    r = math.sqrt(alpha * alpha + 2.0 * mu)
    return math.sqrt(math.exp(-alpha * t) * r / (r * math.cosh(t * r) - alpha * math.sinh(t * r)))


def mansuy_laplace(T: float, t: float, mu: float) -> float:
    """E exp{-(mu/2) int_0^t B_u^2 / (T - u)^2 du} for a standard Wiener process B."""
    if not (0 <= t < T) or not mu > 0:
        raise ModelError("need 0 <= t < T and mu > 0")
    g = math.sqrt(4.0 * mu + 1.0)
    ratio = 1.0 - t / T
    num = ratio ** ((1.0 + g) / 4.0)
    den = 1.0 - (1.0 + g) / (2.0 * g) * (1.0 - ratio**g)
    return num / math.sqrt(den)


def bridge_laplace(alpha: float, T: float, t: float, mu: float, nu: float = 0.0) -> float:
    """Joint transform for dX = -alpha X / (T - t) dt + dB, written with ln(1 - t/T)."""
    if not (0 <= t < T) or mu < 0 or nu < 0:
        raise ModelError("need 0 <= t < T, mu >= 0, nu >= 0")
    G = math.sqrt(8.0 * mu + (2.0 * alpha - 1.0) ** 2)
    ell = math.log1p(-t / T)
    if G == 0:
        # alpha = 1/2, mu = 0: sinh(G y) / G -> y
        D = 1.0 + (1.0 - 2.0 * alpha - 4.0 * nu * (T - t)) * 0.5 * ell
        if not D > 0:
            raise DegenerateTransform(f"denominator {D} <= 0")
        return math.exp(0.25 * (1.0 - 2.0 * alpha) * ell) / math.sqrt(D)
    c = -(1.0 - 2.0 * alpha - 4.0 * nu * (T - t)) / G
    log_psi = 0.25 * (1.0 - 2.0 * alpha) * ell - 0.5 * _log_cosh_minus_c_sinh(0.5 * G * ell, c)
    return math.exp(log_psi)


def scaled_denominator_laplace(model: Model, t: float, mu: float) -> float:
    """E exp{-mu Q_t / I_alpha(t)}."""
    return joint_laplace(model, t, mu / fisher_info(model, t), 0.0)


def singular_joint_laplace(model: Model, t: float, mu: float, nu: float) -> float:
    """E exp{-(mu / 2I) Q_t - (nu / sqrt(2I)) |b(t)| X_t^2 / sigma(t)^2} at time t.

    For terminal-form models with alpha = K this equals ``wiener_joint_laplace``
    for every t.  |b| is used so that the X_t^2 weight is nonnegative for both
    signs of K (for K < 0, b > 0 and |b| = b).
    """
    I = fisher_info(model, t)
    abs_b_over_s2 = abs(1.0 / (2.0 * float(model.affine(t))))
    return joint_laplace(model, t, mu / (2.0 * I), nu * abs_b_over_s2 / math.sqrt(2.0 * I))


def wiener_joint_laplace(mu: float, nu: float) -> float:
    """E exp{-mu int_0^1 W^2 ds - nu W_1^2} for standard Wiener W."""
    r = math.sqrt(2.0 * mu)
    return 1.0 / math.sqrt(math.cosh(r) + 2.0 * nu / r * math.sinh(r))


def fisher_diverges(model: Model) -> bool:
    """Whether I_alpha(t) -> inf as t -> T, which is independent of alpha."""
    K, C, S_T = model.K, model.C, model.S_T
    if K == 0 or C / K > 0:
        return math.isinf(S_T)
    return model.is_terminal


def limit_kind(alpha: float, K: float) -> LimitKind:
    """Limit law of sqrt(I_alpha(t)) (alpha_hat_t - alpha) for terminal-form models."""
    if K == 0:
        raise ModelError("limit classification needs K != 0")
    if alpha == K:
        return LimitKind.DICKEY_FULLER
    if np.sign(alpha - K) == np.sign(K):
        return LimitKind.NORMAL
    return LimitKind.CAUCHY


def _require_terminal(model: Model):
    if not model.is_terminal:
        raise ModelError("operation requires a terminal-form model (K != 0, C = -K S(T))")


def fisher_asymptote(model: Model, t: float) -> tuple[float, LimitKind]:
    """Leading-order growth of I_alpha(t) as t -> T, with the matching regime."""
    _require_terminal(model)
    if not 0 < t < model.T:
        raise ModelError("need 0 < t < T")
    a, K, S_T = model.alpha, model.K, model.S_T
    tail = float(model.tail(t))
    kind = limit_kind(a, K)
    if kind is LimitKind.CAUCHY:
        value = (S_T / tail) ** ((K - a) / K) / (4.0 * (K - a) ** 2)
    elif kind is LimitKind.DICKEY_FULLER:
        value = math.log(tail) ** 2 / (8.0 * K * K)
    else:
        value = math.log(tail) / (4.0 * K * (K - a))
    return value, kind


def denom_laplace_limit(model: Model, mu: float) -> float:
    """lim_{t -> T} E exp{-mu Q_t / I_alpha(t)} by regime."""
    _require_terminal(model)
    if not mu > 0:
        raise ModelError("need mu > 0")
    kind = limit_kind(model.alpha, model.K)
    if kind is LimitKind.CAUCHY:
        return 1.0 / math.sqrt(1.0 + 2.0 * mu)
    if kind is LimitKind.DICKEY_FULLER:
        return 1.0 / math.sqrt(math.cosh(2.0 * math.sqrt(mu)))
    return math.exp(-mu)
