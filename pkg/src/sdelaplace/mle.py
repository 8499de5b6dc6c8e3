"""Maximum-likelihood estimation of alpha and the normalized error statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closedform import fisher_info
from .model import Model, ModelError
from .simulate import PathBatch, PathSample, ito_integral

__all__ = [
    "DegeneratePathError",
    "MleResult",
    "estimate_alpha",
    "estimate_alpha_batch",
    "loglik_ratio",
    "fisher_normalized_error",
    "random_normalized_error",
]


class DegeneratePathError(ModelError):
    """Q_t = 0, so the likelihood has no maximizer."""


@dataclass(frozen=True)
class MleResult:
    """alpha_hat = numerator / Q with numerator = int_0^t (b/sigma^2) X dX.

    Fields may be scalars or arrays of matching shape (one entry per path).
    """

    alpha_hat: float | np.ndarray
    Q: float | np.ndarray
    numerator: float | np.ndarray
    t: float


def _estimate(model: Model, t: float, X, Q) -> MleResult:
    Q = np.asarray(Q, dtype=float)
    if np.any(~(Q > 0)):
        raise DegeneratePathError("degenerate path: Q_t <= 0")
    num = np.asarray(ito_integral(model, t, X, Q))
    ahat = num / Q
    if ahat.ndim == 0:
        return MleResult(float(ahat), float(Q), float(num), float(t))
    return MleResult(ahat, Q, num, float(t))


def estimate_alpha(model: Model, path: PathSample) -> MleResult:
    """alpha_hat_t from one sampled path, observed up to the end of its grid."""
    return _estimate(model, path.t, path.values[-1], path.Q[-1])


def estimate_alpha_batch(model: Model, batch: PathBatch, t: float) -> MleResult:
    X, Q = batch.at(t)
    return _estimate(model, t, X, Q)


def _same_family(a: Model, b: Model) -> bool:
    return a.T == b.T and a.K == b.K and a.C == b.C and a.vol == b.vol


def loglik_ratio(model_num: Model, model_den: Model, res: MleResult):
    """log dP_alpha / dP_beta on [0, t] = (alpha - beta) numerator - (alpha^2 - beta^2) Q / 2."""
    if not _same_family(model_num, model_den):
        raise ModelError("likelihood ratio needs models sharing K, C, sigma and T")
    a, b = model_num.alpha, model_den.alpha
    return (a - b) * res.numerator - 0.5 * (a * a - b * b) * res.Q


def fisher_normalized_error(model: Model, res: MleResult, alpha_true: float):
    """sqrt(I_alpha(t)) (alpha_hat - alpha_true), with I evaluated at alpha_true."""
    info = fisher_info(model, res.t, alpha=alpha_true)
    if not info > 0:
        raise ModelError("Fisher information must be positive")
    return math.sqrt(info) * (res.alpha_hat - alpha_true)


def random_normalized_error(res: MleResult, alpha_true: float):
    """sqrt(Q_t) (alpha_hat - alpha_true)."""
    return np.sqrt(res.Q) * (res.alpha_hat - alpha_true)
