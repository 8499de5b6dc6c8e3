"""Linear SDE family ``dX = alpha*b(t)*X dt + sigma(t) dB`` with ``X_0 = 0``.

The drift coefficient is restricted to the one-parameter family solving

    d/dt (b / sigma^2) = -2 K b^2 / sigma^2,

namely ``b(t) = sigma(t)^2 / (2 (K S(t) + C))`` with ``S(t) = int_0^t sigma^2``.
Everything downstream is expressed through the affine denominator
``d(t) = K S(t) + C`` and ``log B(t)`` where

    B(t) = (1 + K S(t) / C)^(1/K)   (K != 0),    B(t) = exp(S(t) / C)   (K = 0).

For terminal-form models (``C = -K S(T)``) the denominator is evaluated as
``-K * int_t^T sigma^2`` so that quantities stay accurate as ``t -> T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

__all__ = [
    "ModelError",
    "VolatilityProfile",
    "DriftParams",
    "Model",
    "make_terminal_drift",
    "drift_b",
    "big_B",
    "int_b",
    "log_big_B",
    "check_bernoulli_condition",
    "ou",
    "wiener",
    "alpha_bridge",
    "terminal",
    "model_from_spec",
    "model_to_spec",
    "PRESETS",
]

# Relative size below which K is treated as exactly zero (exponential form of B).
_K_ZERO_REL = 1e-12


class ModelError(ValueError):
    """Invalid model parameters or evaluation outside ``[0, T)``."""


@dataclass(frozen=True)
class VolatilityProfile:
    """Deterministic volatility sigma(t) > 0, described through sigma(t)^2.

    ``kind="constant"`` has sigma(t) = level.  ``kind="tabulated"`` interpolates
    sigma^2 linearly between ``knots`` (first knot at 0) and holds the last
    value constant afterwards; S(t) is the exact integral of the interpolant.
    """

    kind: str = "constant"
    level: float = 1.0
    knots: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not (self.level > 0 and math.isfinite(self.level)):
                raise ModelError(f"constant volatility must be positive, got {self.level}")
        elif self.kind == "tabulated":
            t = np.asarray(self.knots, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.size < 2 or t.shape != v.shape:
                raise ModelError("tabulated volatility needs >= 2 matching knots and values")
            if t[0] != 0.0:
                raise ModelError("first knot must be at t=0")
            if np.any(np.diff(t) <= 0):
                raise ModelError("knots must be strictly increasing")
            if np.any(~np.isfinite(v)) or np.any(v <= 0):
                raise ModelError("tabulated sigma^2 values must be finite and positive")
        else:
            raise ModelError(f"unknown volatility kind {self.kind!r}")

    @classmethod
    def constant(cls, level: float = 1.0) -> "VolatilityProfile":
        return cls(kind="constant", level=float(level))

    @classmethod
    def tabulated(cls, knots, sigma2) -> "VolatilityProfile":
        return cls(
            kind="tabulated",
            knots=tuple(float(x) for x in knots),
            values=tuple(float(x) for x in sigma2),
        )

    @cached_property
    def _table(self):
        t = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        h = np.diff(t)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[:-1] + v[1:]) * h)])
        slope = np.concatenate([np.diff(v) / h, [0.0]])
        return t, v, cum, slope

    def sigma2(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.level**2)
        knots, v, _, slope = self._table
        k = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, knots.size - 1)
        return v[k] + slope[k] * (t - knots[k])

    def sigma(self, t):
        return np.sqrt(self.sigma2(t))

    def cumulative(self, t):
        """S(t) = int_0^t sigma(u)^2 du (``inf`` at ``t = inf``)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return self.level**2 * t
        knots, v, cum, slope = self._table
        k = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, knots.size - 1)
        h = t - knots[k]
        with np.errstate(invalid="ignore"):
            out = cum[k] + v[k] * h + 0.5 * slope[k] * h * h
        return np.where(np.isinf(t), np.inf, out)

    def inverse_cumulative(self, s):
        """The time t with S(t) = s, for s >= 0."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ModelError("inverse_cumulative needs s >= 0")
        if self.kind == "constant":
            return s / self.level**2
        knots, v, cum, slope = self._table
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, knots.size - 1)
        r = s - cum[k]
        # root of v h + slope h^2 / 2 = r written without cancellation
        h = 2.0 * r / (v[k] + np.sqrt(v[k] ** 2 + 2.0 * slope[k] * r))
        return knots[k] + h

    def integral(self, a, b):
        """int_a^b sigma(u)^2 du, exact for constant profiles."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.kind == "constant":
            return self.level**2 * (b - a)
        return self.cumulative(b) - self.cumulative(a)

    @property
    def is_smooth(self) -> bool:
        # piecewise-linear sigma^2 gives a drift that is only piecewise C^1
        return self.kind == "constant"

    def to_spec(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "s": self.level}
        return {"kind": "tabulated", "knots": list(self.knots), "sigma2": list(self.values)}


@dataclass(frozen=True)
class DriftParams:
    """Parameters (K, C) of b(t) = sigma(t)^2 / (2 (K S(t) + C))."""

    K: float
    C: float
    terminal: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.K) and math.isfinite(self.C)):
            raise ModelError("K and C must be finite")
        if self.C == 0:
            raise ModelError("C must be nonzero (b(0) would be undefined)")
        if self.terminal and self.K == 0:
            raise ModelError("terminal form requires K != 0")


def make_terminal_drift(K: float, vol: VolatilityProfile, T: float) -> DriftParams:
    """Drift with ``C = -K S(T)``, i.e. ``b(t) = sigma^2 / (-2 K int_t^T sigma^2)``."""
    if K == 0:
        raise ModelError("terminal form requires K != 0")
    S_T = float(vol.cumulative(T))
    if not math.isfinite(S_T):
        raise ModelError("terminal form requires int_0^T sigma^2 < inf")
    return DriftParams(K=float(K), C=-float(K) * S_T, terminal=True)


@dataclass(frozen=True)
class Model:
    """SDE ``dX = alpha b(t) X dt + sigma(t) dB`` on ``[0, T)``."""

    alpha: float
    T: float
    drift: DriftParams
    vol: VolatilityProfile = field(default_factory=VolatilityProfile.constant)

    def __post_init__(self):
        if not (self.T > 0):
            raise ModelError(f"horizon T must be positive, got {self.T}")
        if not math.isfinite(self.alpha):
            raise ModelError("alpha must be finite")
        K, C = self.drift.K, self.drift.C
        S_T = float(self.vol.cumulative(self.T))
        if self.drift.terminal:
            if not math.isfinite(S_T):
                raise ModelError("terminal form requires int_0^T sigma^2 < inf")
            if not math.isclose(C, -K * S_T, rel_tol=1e-12):
                raise ModelError(f"terminal form requires C = -K S(T) = {-K * S_T}, got {C}")
            return
        # d(t) = K S(t) + C is monotone in S, so checking both ends suffices
        if K == 0:
            return
        if math.isinf(S_T):
            if K * C < 0:
                raise ModelError("K S(t) + C changes sign on [0, T)")
            return
        d_T = K * S_T + C
        if d_T * C < 0:
            raise ModelError("K S(t) + C changes sign on [0, T)")

    @property
    def K(self) -> float:
        return self.drift.K

    @property
    def C(self) -> float:
        return self.drift.C

    @cached_property
    def S_T(self) -> float:
        return float(self.vol.cumulative(self.T))

    @property
    def is_terminal(self) -> bool:
        """True when K S(T) + C = 0, the form under which I_alpha(t) -> inf."""
        if self.drift.terminal:
            return True
        if self.K == 0 or not math.isfinite(self.S_T):
            return False
        return abs(self.K * self.S_T + self.C) <= 1e-12 * abs(self.C)

    @property
    def sign_b(self) -> int:
        return 1 if self.C > 0 else -1

    def with_alpha(self, alpha: float) -> "Model":
        return Model(float(alpha), self.T, self.drift, self.vol)

    def flipped(self) -> "Model":
        """The same process written with (alpha, b, K, C) -> (-alpha, -b, -K, -C)."""
        d = self.drift
        return Model(-self.alpha, self.T, DriftParams(-d.K, -d.C, d.terminal), self.vol)

    def _check_time(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t >= self.T) or np.any(np.isnan(t)):
            raise ModelError(f"time outside [0, T) with T={self.T}: {t}")
        return t

    def sigma2(self, t):
        return self.vol.sigma2(self._check_time(t))

    def S(self, t):
        return self.vol.cumulative(self._check_time(t))

    def tail(self, t):
        """int_t^T sigma^2 (inf for infinite total variance)."""
        t = self._check_time(t)
        if math.isinf(self.S_T):
            return np.full_like(t, np.inf)
        if self.vol.kind == "constant" and math.isfinite(self.T):
            return self.vol.integral(t, self.T)
        return self.S_T - self.vol.cumulative(t)

    def affine(self, t):
        """d(t) = K S(t) + C, nonzero with the sign of C on [0, T)."""
        t = self._check_time(t)
        if self.is_terminal:
            d = -self.K * self.tail(t)
        else:
            d = self.K * self.vol.cumulative(t) + self.C
        if np.any(d == 0) or np.any(np.sign(d) != np.sign(self.C)):
            raise ModelError("drift denominator K S(t) + C vanishes on the requested times")
        return d

    def log_B(self, t):
        """log B_{K,C}(t) = 2 int_0^t b(s) ds."""
        t = self._check_time(t)
        K, C = self.K, self.C
        if self.is_terminal:
            with np.errstate(divide="ignore"):
                return np.log(self.tail(t) / self.S_T) / K
        S = self.vol.cumulative(t)
        small_K = abs(K) < _K_ZERO_REL * abs(C) / np.maximum(S, 1.0)
        x = K * S / C
        if np.any((1.0 + x <= 0) & ~small_K):
            raise ModelError("base of B_{K,C} is nonpositive")
        with np.errstate(divide="ignore", invalid="ignore"):
            general = np.log1p(x) / K if K != 0 else np.zeros_like(S)
        return np.where(small_K, S / C, general)

    def to_spec(self) -> dict:
        spec: dict[str, Any] = {
            "preset": "terminal" if self.drift.terminal else "custom",
            "alpha": self.alpha,
            "T": self.T if math.isfinite(self.T) else "inf",
            "K": self.K,
            "sigma": self.vol.to_spec(),
        }
        if not self.drift.terminal:
            spec["C"] = self.C
        return spec


def drift_b(model: Model, t):
    """b(t) = sigma(t)^2 / (2 (K S(t) + C))."""
    return model.sigma2(t) / (2.0 * model.affine(t))


def log_big_B(model: Model, t):
    return model.log_B(t)


def big_B(model: Model, t):
    """B_{K,C}(t); the K -> 0 limit exp(S/C) is used for negligible K."""
    return np.exp(model.log_B(t))


def int_b(model: Model, t):
    """int_0^t b(s) ds = log(B(t)) / 2."""
    return 0.5 * model.log_B(t)


def check_bernoulli_condition(model: Model, grid, h: float) -> float:
    """Max |d/dt(b/sigma^2) + 2K b^2/sigma^2| over ``grid`` by centred differences."""
    t = np.asarray(grid, dtype=float)
    if np.any(t - h < 0) or np.any(t + h >= model.T):
        raise ModelError("grid must lie in (h, T - h)")

    def ratio(s):
        return drift_b(model, s) / model.sigma2(s)

    deriv = (ratio(t + h) - ratio(t - h)) / (2.0 * h)
    b = drift_b(model, t)
    resid = deriv + 2.0 * model.K * b * b / model.sigma2(t)
    return float(np.max(np.abs(resid)))


# --- presets ---------------------------------------------------------------


def ou(alpha: float, sigma: VolatilityProfile | None = None, T: float = math.inf) -> Model:
    """Ornstein-Uhlenbeck preset: K = 0, C = 1/2, so b = sigma^2 (b = 1 for sigma = 1)."""
    return Model(float(alpha), T, DriftParams(0.0, 0.5), sigma or VolatilityProfile.constant())


def wiener(T: float = math.inf) -> Model:
    return ou(0.0, T=T)


def alpha_bridge(alpha: float, T: float = 1.0) -> Model:
    """dX = -alpha X / (T - t) dt + dB: terminal form with K = 1/2, C = -T/2."""
    vol = VolatilityProfile.constant()
    return Model(float(alpha), float(T), make_terminal_drift(0.5, vol, T), vol)


def terminal(alpha: float, K: float, vol: VolatilityProfile | None = None, T: float = 1.0) -> Model:
    vol = vol or VolatilityProfile.constant()
    return Model(float(alpha), float(T), make_terminal_drift(K, vol, T), vol)


PRESETS = ("ou", "wiener", "alpha-bridge", "terminal", "custom")

_SPEC_KEYS = {"preset", "alpha", "T", "K", "C", "sigma"}


def _vol_from_spec(spec: dict | None) -> VolatilityProfile:
    if spec is None:
        return VolatilityProfile.constant()
    spec = dict(spec)
    kind = spec.pop("kind", "constant")
    if kind == "constant":
        level = spec.pop("s", 1.0)
        if spec:
            raise ModelError(f"unknown sigma keys: {sorted(spec)}")
        return VolatilityProfile.constant(level)
    if kind == "tabulated":
        knots = spec.pop("knots", None)
        values = spec.pop("sigma2", None)
        if spec or knots is None or values is None:
            raise ModelError("tabulated sigma needs exactly 'knots' and 'sigma2'")
        return VolatilityProfile.tabulated(knots, values)
    raise ModelError(f"unknown sigma kind {kind!r}")


def _float(x, name) -> float:
    if isinstance(x, str) and x.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(x)
    except (TypeError, ValueError):
        raise ModelError(f"{name} must be a number, got {x!r}") from None


def model_from_spec(spec: dict) -> Model:
    """Build a model from the JSON form used by the CLI and experiment configs."""
    unknown = set(spec) - _SPEC_KEYS
    if unknown:
        raise ModelError(f"unknown model keys: {sorted(unknown)}")
    preset = spec.get("preset", "custom")
    alpha = _float(spec.get("alpha", 0.0), "alpha")
    vol = _vol_from_spec(spec.get("sigma"))
    if preset == "ou":
        return ou(alpha, vol, _float(spec.get("T", math.inf), "T"))
    if preset == "wiener":
        if alpha != 0:
            raise ModelError("the wiener preset has alpha = 0")
        return ou(0.0, vol, _float(spec.get("T", math.inf), "T"))
    if preset == "alpha-bridge":
        if "K" in spec or "C" in spec or "sigma" in spec:
            raise ModelError("alpha-bridge fixes K = 1/2, C = -T/2 and sigma = 1")
        return alpha_bridge(alpha, _float(spec.get("T", 1.0), "T"))
    if preset == "terminal":
        if "K" not in spec:
            raise ModelError("terminal preset requires K")
        if "C" in spec:
            raise ModelError("terminal preset derives C = -K S(T); do not pass C")
        return terminal(alpha, _float(spec["K"], "K"), vol, _float(spec.get("T", 1.0), "T"))
    if preset == "custom":
        if "K" not in spec or "C" not in spec:
            raise ModelError("custom preset requires K and C")
        drift = DriftParams(_float(spec["K"], "K"), _float(spec["C"], "C"))
        return Model(alpha, _float(spec.get("T", math.inf), "T"), drift, vol)
    raise ModelError(f"unknown preset {preset!r}; choose from {PRESETS}")


def model_to_spec(model: Model) -> dict:
    return model.to_spec()
