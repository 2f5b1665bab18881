"""Maximum-likelihood fitting of a single linear layer on bounded data.

The objective is the mean projected log-likelihood

    mean_x [ log J(x; W) + log g(W^T x) ],   log J = -log p(W^T x)  (uniform prior),

maximised by gradient ascent with central finite-difference gradients.  A
step that lowers the objective or pushes a feature onto the boundary of the
achievable set is rejected and retried with half the learning rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import DiagGaussian, StandardGaussian
from .errors import NonConvergence, PDFProjError, SaddleDomainError
from .priors import PriorKind
from .spa import spa_log_density_batch

SHRINK = 1e-6
MAX_HALVINGS = 20


class RankDeficientWeights(PDFProjError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 200
    learning_rate: float = 0.1
    fd_step: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if not 1e-7 <= self.fd_step <= 1e-2:
            raise ValueError("fd_step must lie in [1e-7, 1e-2]")


@dataclass(frozen=True)
class Fixed:
    """Keep a user-supplied terminal density."""

    density: Union[StandardGaussian, DiagGaussian]


@dataclass(frozen=True)
class MomentMatched:
    """Refit a diagonal Gaussian to the current features at every evaluation."""


TerminalPolicy = Union[Fixed, MomentMatched]


@dataclass
class TrainHistory:
    objective_per_step: np.ndarray
    grad_norm_per_step: np.ndarray
    final_weights: np.ndarray
    learning_rate_per_step: np.ndarray = field(default_factory=lambda: np.zeros(0))


def shrink_to_interior(X) -> np.ndarray:
    """Map [0, 1] into [1e-6, 1 - 1e-6] so every saddle solve stays interior."""
    return SHRINK + (1.0 - 2.0 * SHRINK) * np.asarray(X, dtype=float)


def _check_weights(W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[1] > W.shape[0] or np.linalg.svd(W, compute_uv=False).min() <= 1e-10:
        raise RankDeficientWeights("weights must have full column rank")
    return W


def _terminal_log_pdf(policy, Z: np.ndarray) -> np.ndarray:
    if isinstance(policy, Fixed):
        return policy.density.log_pdf(Z)
    if isinstance(policy, (DiagGaussian, StandardGaussian)):
        return policy.log_pdf(Z)
    var = Z.var(axis=0)
    fitted = DiagGaussian(Z.mean(axis=0), np.maximum(var, 1e-300))
    return fitted.log_pdf(Z)


def objective(W, dataset, terminal=MomentMatched(), prior: PriorKind = PriorKind.UNIFORM01) -> float:
    """Mean of log J(x) + log g(W^T x) over ``dataset`` (points in the unit box, used as given).

    ``terminal`` is a terminal density, ``Fixed(density)`` or ``MomentMatched()``.
    """
    W = _check_weights(W)
    X = np.atleast_2d(np.asarray(dataset, dtype=float))
    prior = PriorKind(prior)
    Z = X @ W
    try:
        log_pz = spa_log_density_batch(W, Z, prior)
    except SaddleDomainError as exc:
        exc.args = (f"dataset point {getattr(exc, 'index', '?')}: feature on the achievable boundary",)
        raise
    if prior is PriorKind.UNIFORM01:
        log_px = np.zeros(X.shape[0])
    else:
        log_px = -X.sum(axis=1)
    return float(np.mean(log_px - log_pz + _terminal_log_pdf(terminal, Z)))


def fd_gradient(W, dataset, terminal, fd_step: float, prior=PriorKind.UNIFORM01) -> np.ndarray:
    """Central differences over every entry of W, in row-major order."""
    W = np.asarray(W, dtype=float)
    grad = np.zeros_like(W)
    for idx in np.ndindex(*W.shape):
        Wp = W.copy()
        Wm = W.copy()
        Wp[idx] += fd_step
        Wm[idx] -= fd_step
        grad[idx] = (objective(Wp, dataset, terminal, prior) - objective(Wm, dataset, terminal, prior)) / (2 * fd_step)
    return grad


def fit_linear(dataset, init_W, terminal_policy: TerminalPolicy = MomentMatched(), cfg: TrainConfig = TrainConfig()) -> TrainHistory:
    """Gradient ascent on ``objective``; the objective never decreases between steps."""
    X = np.atleast_2d(np.asarray(dataset, dtype=float))
    if X.shape[0] < 10:
        raise ValueError("need at least 10 data points")
    if np.any((X < 0.0) | (X > 1.0)):
        raise ValueError("dataset must lie in the unit box")
    X = shrink_to_interior(X)
    if init_W is None:
        init_W = np.random.default_rng(cfg.seed).standard_normal((X.shape[1], 1))
    W = _check_weights(np.array(init_W, dtype=float))

    obj = objective(W, X, terminal_policy)
    objs, norms, rates = [obj], [], []
    for _ in range(cfg.steps):
        grad = fd_gradient(W, X, terminal_policy, cfg.fd_step)
        norms.append(float(np.linalg.norm(grad)))
        lr = cfg.learning_rate
        last_error = None
        for _ in range(MAX_HALVINGS + 1):
            W_try = W + lr * grad
            try:
                obj_try = objective(W_try, X, terminal_policy)
            except (SaddleDomainError, RankDeficientWeights) as exc:
                last_error = exc
            else:
                last_error = None
                if obj_try >= obj:
                    W, obj = W_try, obj_try
                    break
            lr *= 0.5
        else:
            if last_error is not None:
                raise NonConvergence(f"every trial step hit the feature boundary: {last_error}") from last_error
            lr = 0.0  # no ascent direction at this resolution; stay put
        objs.append(obj)
        rates.append(lr)

    grad = fd_gradient(W, X, terminal_policy, cfg.fd_step)
    norms.append(float(np.linalg.norm(grad)))
    return TrainHistory(np.array(objs), np.array(norms), W, np.array(rates))


def informative_dataset(n: int = 200, seed: int = 0) -> np.ndarray:
    """x1 ~ U(0, 1) and x2 = 0.5 + 0.05 (U - 0.5): the second coordinate is tightly concentrated."""
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.random(n), 0.5 + 0.05 * (rng.random(n) - 0.5)])


def direction_sweep(dataset, angles_deg, terminal=MomentMatched()) -> np.ndarray:
    """Objective of the unit weight (cos t, sin t) for each angle (2-D data, one feature)."""
    X = shrink_to_interior(dataset)
    out = []
    for deg in angles_deg:
        t = math.radians(deg)
        out.append(objective(np.array([[math.cos(t)], [math.sin(t)]]), X, terminal))
    return np.array(out)
