"""PDF projection: exact likelihoods through dimension-reducing layers.

A model maps x to a feature z through a chain of layers and assigns
log G(x) = sum of per-layer log J + log g(z), with J(x) = p0(x) / p0(z) for a
fixed prior p0.  Linear layers get p0(z) from a saddle-point approximation.
"""

from .core import (
    DiagGaussian,
    EvalBreakdown,
    Model,
    ModelSpec,
    StandardGaussian,
    evaluate_log_density,
    forward,
    generate,
    log_density,
    log_density_batch,
    validate_model,
)
from .domain import DataPoint, DomainTag
from .errors import *  # noqa: F401,F403
from .layers import Abs, DiagScale, HitAndRunConfig, Linear, Slice
from .priors import PriorKind
from .spa import solve_saddle, spa_log_density
from .trainer import Fixed, MomentMatched, TrainConfig, fit_linear

__version__ = "0.1.0"
