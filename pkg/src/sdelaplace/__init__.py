"""Laplace transforms, Fisher information and MLE checks for linear SDEs with Bernoulli-type drift."""

from .closedform import (
    DegenerateTransform,
    LimitKind,
    bridge_laplace,
    fisher_info,
    joint_laplace,
    joint_laplace_pre,
    limit_kind,
    mansuy_laplace,
    ou_laplace,
    variance,
)
from .model import (
    DriftParams,
    Model,
    ModelError,
    VolatilityProfile,
    alpha_bridge,
    model_from_spec,
    ou,
    terminal,
    wiener,
)

__version__ = "0.1.0"
