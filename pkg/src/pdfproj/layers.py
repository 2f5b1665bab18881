"""Dimension-reducing layers: forward map, log J-function and fiber sampler.

For a layer y -> z the J-function is p(y) / p(z), where p is the prior of the
layer's input stage and p(z) its pushforward.  Sampling the fiber of z draws y
from that prior restricted to {y : T(y) = z}.

Every function here works along the last axis, so ``x`` may be a single point
of shape ``(N,)`` or a batch ``(B, N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .domain import DomainTag
from .errors import (
    AsymmetricPrior,
    DegenerateFiber,
    EmptyFiber,
    NegativeFeature,
    SupportViolation,
    UnsupportedSampling,
    ZeroScale,
)
from .priors import PriorKind, component_log_pdf, draw, log_pdf, rng_from
from .spa import spa_log_density

LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# stage priors


@dataclass(frozen=True)
class StagePrior:
    """Prior of an intermediate stage: y_i = scale_i * u_i (or scale_i * |u_i| if folded), u_i i.i.d. ``kind``.

    The input stage is ``StagePrior.unit(kind, n)``.  Slicing keeps the
    component prior, diagonal scaling rescales it, and the absolute value
    folds a symmetric prior onto the half line.
    """

    kind: PriorKind
    scales: tuple
    folded: bool = False

    @classmethod
    def unit(cls, kind: PriorKind, dim: int) -> "StagePrior":
        return cls(PriorKind(kind), (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.scales)

    @property
    def is_unit(self) -> bool:
        return not self.folded and all(s == 1.0 for s in self.scales)

    def component_log_pdf(self, y, idx=slice(None)) -> np.ndarray:
        s = np.asarray(self.scales, dtype=float)[idx]
        u = np.asarray(y, dtype=float) / s
        if self.folded:
            if np.any(u < 0.0):
                raise SupportViolation("folded prior: component on the wrong side of zero")
            return LOG2 + component_log_pdf(self.kind, u) - np.log(np.abs(s))
        return component_log_pdf(self.kind, u) - np.log(np.abs(s))

    def log_pdf(self, y) -> np.ndarray:
        return np.sum(self.component_log_pdf(y), axis=-1)

    def draw(self, rng: np.random.Generator, size, idx=slice(None)) -> np.ndarray:
        u = draw(self.kind, rng, size)
        if self.folded:
            u = np.abs(u)
        return np.asarray(self.scales, dtype=float)[idx] * u


def _stage(prior, dim: int) -> StagePrior:
    if isinstance(prior, StagePrior):
        return prior
    return StagePrior.unit(PriorKind(prior), dim)


# ---------------------------------------------------------------------------
# log J-functions


def slice_log_j(x, keep: int, prior) -> float | np.ndarray:
    """Sum of the prior log-density over the dropped components ``x[..., keep:]``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if not 1 <= keep <= n:
        raise ValueError(f"keep={keep} outside 1..{n}")
    stage = _stage(prior, n)
    dropped = x[..., keep:]
    return np.sum(stage.component_log_pdf(dropped, slice(keep, None)), axis=-1)


def abs_log_j(x, prior) -> float | np.ndarray:
    """-N log 2 for a symmetric prior; 0 when the stage is already folded."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    stage = _stage(prior, n)
    if not stage.kind.symmetric:
        raise AsymmetricPrior(f"absolute value layer needs a symmetric prior, got {stage.kind.value}")
    out = np.zeros(x.shape[:-1])
    if stage.folded:
        stage.component_log_pdf(x)  # support check only
        return out if out.ndim else 0.0
    out += -n * LOG2
    return out if out.ndim else float(out)


def diag_scale_log_j(x, scales) -> float | np.ndarray:
    scales = np.asarray(scales, dtype=float)
    if np.any(scales == 0.0):
        raise ZeroScale("diagonal scales must be nonzero")
    x = np.asarray(x, dtype=float)
    val = float(np.sum(np.log(np.abs(scales))))
    if x.ndim > 1:
        return np.full(x.shape[:-1], val)
    return val


def linear_log_j(x, W, prior) -> float:
    """log p(x) - log p(W^T x), the pushforward density by the saddle-point approximation."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        return np.array([linear_log_j(row, W, prior) for row in x])
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    stage = _stage(prior, x.shape[0])
    if stage.kind is PriorKind.STD_GAUSSIAN or stage.folded:
        raise SupportViolation("linear layer supports uniform01 and exponential1 priors only")
    s = np.asarray(stage.scales, dtype=float)
    log_px = stage.log_pdf(x)
    z = W.T @ x
    # y = s * u with u i.i.d. base prior, so z = (diag(s) W)^T u
    return float(log_px - spa_log_density(s[:, None] * W, z, stage.kind))


# ---------------------------------------------------------------------------
# fiber samplers


@dataclass(frozen=True)
class HitAndRunConfig:
    burn_in: int = 1000
    thin: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")


def sample_fiber_slice(z, n: int, prior, seed) -> np.ndarray:
    """Keep ``z`` and draw the dropped components from the component prior."""
    z = np.asarray(z, dtype=float)
    m = z.shape[-1]
    stage = _stage(prior, n)
    rng = rng_from(seed)
    tail = stage.draw(rng, z.shape[:-1] + (n - m,), slice(m, None))
    return np.concatenate([z, tail], axis=-1)


def sample_fiber_abs(z, prior, seed) -> np.ndarray:
    """Attach independent equiprobable signs to ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise NegativeFeature("absolute value fiber needs a nonnegative feature")
    stage = _stage(prior, z.shape[-1])
    if not stage.kind.symmetric:
        raise AsymmetricPrior(f"absolute value layer needs a symmetric prior, got {stage.kind.value}")
    if stage.folded:
        # abs is a bijection on a folded stage; invert onto the stage's half line
        return np.sign(np.asarray(stage.scales, dtype=float)) * z
    rng = rng_from(seed)
    signs = np.where(rng.random(z.shape) < 0.5, -1.0, 1.0)
    return signs * z


def _feasible_start(W: np.ndarray, Z: np.ndarray, max_iter: int = 10_000, tol: float = 1e-9) -> np.ndarray:
    """Point of the affine set closest to the box centre; alternating projections if it leaves the box."""
    gram = W.T @ W

    def project(X, Zrows):
        return X - np.linalg.solve(gram, (X @ W - Zrows).T).T @ W.T

    X = project(np.full((Z.shape[0], W.shape[0]), 0.5), Z)
    viol = np.max(np.maximum(-X, X - 1.0), axis=1)
    bad = viol > tol
    for _ in range(max_iter):
        if not np.any(bad):
            break
        X[bad] = project(np.clip(X[bad], 0.0, 1.0), Z[bad])
        viol = np.max(np.maximum(-X, X - 1.0), axis=1)
        bad = viol > tol
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise EmptyFiber(f"no point of the unit box maps to feature row {row} (box violation {viol[row]:.3g})")
    return X


def achievable(W, Z, tol: float = 1e-9) -> np.ndarray:
    """Mask of the rows of ``Z`` that some x in the unit box maps to (W^T x = z).

    A few alternating projections settle the clearly interior rows; the rest
    get an exact LP feasibility check.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    gram = W.T @ W
    X = np.full((Z.shape[0], W.shape[0]), 0.5)
    for _ in range(200):
        X = X - np.linalg.solve(gram, (X @ W - Z).T).T @ W.T
        ok = np.max(np.maximum(-X, X - 1.0), axis=1) <= tol
        if np.all(ok):
            break
        X = np.clip(X, 0.0, 1.0)
    bounds = [(0.0, 1.0)] * W.shape[0]
    for i in np.flatnonzero(~ok):
        res = linprog(np.zeros(W.shape[0]), A_eq=W.T, b_eq=Z[i], bounds=bounds, method="highs")
        ok[i] = res.status == 0
    return ok


def _chord(X, D, slack=1e-12):
    """Parameter interval [lo, hi] keeping X + t D inside the unit box, per row."""
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = D > slack
        neg = D < -slack
        upper = np.where(pos, (1.0 - X) / D, np.where(neg, -X / D, np.inf))
        lower = np.where(pos, -X / D, np.where(neg, (1.0 - X) / D, -np.inf))
    return lower.max(axis=1), upper.min(axis=1)


def hit_and_run(W, Z, n_per_chain: int, cfg: HitAndRunConfig = HitAndRunConfig(), rng=None) -> np.ndarray:
    """Uniform samples on {x in [0,1]^N : W^T x = z}, one chain per row of ``Z``.

    Chains move along random directions of the null space of W^T, so every
    state satisfies the linear constraint up to rounding.  Returns an array of
    shape ``(len(Z), n_per_chain, N)``.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    rng = rng_from(cfg.seed if rng is None else rng)
    n = W.shape[0]
    n_chains = Z.shape[0]

    X = _feasible_start(W, Z)
    basis = null_space(W.T)
    out = np.empty((n_chains, n_per_chain, n))
    if basis.shape[1] == 0:
        out[:] = X[:, None, :]
        return out

    k = basis.shape[1]
    total = cfg.burn_in + cfg.thin * n_per_chain
    kept = 0
    for step in range(1, total + 1):
        U = rng.standard_normal((n_chains, k))
        D = U @ basis.T
        lo, hi = _chord(X, D)
        short = ~(hi - lo >= 1e-12)
        retries = 0
        while np.any(short):
            retries += 1
            if retries > 100:
                raise DegenerateFiber("fiber has an empty relative interior (all chords degenerate)")
            idx = np.flatnonzero(short)
            D[idx] = rng.standard_normal((idx.size, k)) @ basis.T
            lo[idx], hi[idx] = _chord(X[idx], D[idx])
            short = ~(hi - lo >= 1e-12)
        t = lo + rng.random(n_chains) * (hi - lo)
        X = X + t[:, None] * D
        if step > cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
            out[:, kept] = X
            kept += 1
    return out


def sample_fiber_linear_uniform(W, z, cfg: HitAndRunConfig = HitAndRunConfig()) -> np.ndarray:
    """One approximately uniform draw from the polytope {x in [0,1]^N : W^T x = z}."""
    return hit_and_run(W, np.atleast_1d(np.asarray(z, dtype=float))[None, :], 1, cfg)[0, 0]


# ---------------------------------------------------------------------------
# layer specifications


@dataclass(frozen=True)
class Slice:
    keep: int

    name = "slice"

    def output_dim(self, n: int) -> int:
        return self.keep

    def output_domain(self, domain: DomainTag) -> DomainTag:
        return domain

    def output_stage(self, stage: StagePrior) -> StagePrior:
        return StagePrior(stage.kind, stage.scales[: self.keep], stage.folded)

    def forward(self, x):
        return np.asarray(x, dtype=float)[..., : self.keep]

    def log_j(self, x, stage: StagePrior):
        return slice_log_j(x, self.keep, stage)

    def sample_fiber(self, z, stage: StagePrior, rng, cfg=None):
        return sample_fiber_slice(z, stage.dim, stage, rng)


@dataclass(frozen=True)
class Abs:
    name = "abs"

    def output_dim(self, n: int) -> int:
        return n

    def output_domain(self, domain: DomainTag) -> DomainTag:
        return DomainTag.NONNEGATIVE

    def output_stage(self, stage: StagePrior) -> StagePrior:
        return StagePrior(stage.kind, tuple(abs(s) for s in stage.scales), True)

    def forward(self, x):
        return np.abs(np.asarray(x, dtype=float))

    def log_j(self, x, stage: StagePrior):
        return abs_log_j(x, stage)

    def sample_fiber(self, z, stage: StagePrior, rng, cfg=None):
        return sample_fiber_abs(z, stage, rng)


@dataclass(frozen=True)
class DiagScale:
    scales: tuple

    name = "diag_scale"

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(s) for s in np.atleast_1d(self.scales)))

    def output_dim(self, n: int) -> int:
        return n

    def output_domain(self, domain: DomainTag) -> DomainTag:
        if domain is not DomainTag.REALS and all(s > 0 for s in self.scales):
            if domain is DomainTag.NONNEGATIVE or all(s == 1.0 for s in self.scales):
                return domain
            return DomainTag.NONNEGATIVE
        return DomainTag.REALS

    def output_stage(self, stage: StagePrior) -> StagePrior:
        return StagePrior(stage.kind, tuple(a * b for a, b in zip(stage.scales, self.scales)), stage.folded)

    def forward(self, x):
        return np.asarray(x, dtype=float) * np.asarray(self.scales)

    def log_j(self, x, stage: StagePrior):
        return diag_scale_log_j(x, self.scales)

    def sample_fiber(self, z, stage: StagePrior, rng, cfg=None):
        return np.asarray(z, dtype=float) / np.asarray(self.scales)


@dataclass(frozen=True)
class Linear:
    weights: np.ndarray
    prior: PriorKind = PriorKind.UNIFORM01
    trainable: bool = field(default=False, compare=False)

    name = "linear"

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "prior", PriorKind(self.prior))

    def __eq__(self, other):
        return (
            isinstance(other, Linear)
            and self.prior is other.prior
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0]

    def output_dim(self, n: int) -> int:
        return self.weights.shape[1]

    def output_domain(self, domain: DomainTag) -> DomainTag:
        return DomainTag.REALS

    def output_stage(self, stage: StagePrior) -> StagePrior:
        raise NotImplementedError("no tractable stage prior after a linear layer")

    def forward(self, x):
        return np.asarray(x, dtype=float) @ self.weights

    def log_j(self, x, stage: StagePrior):
        return linear_log_j(x, self.weights, stage)

    def sample_fiber(self, z, stage: StagePrior, rng, cfg=None):
        if stage.kind is not PriorKind.UNIFORM01 or stage.folded:
            raise UnsupportedSampling(f"fiber sampling of a linear layer needs the uniform01 prior, got {stage.kind.value}")
        cfg = cfg or HitAndRunConfig()
        s = np.asarray(stage.scales, dtype=float)
        z = np.asarray(z, dtype=float)
        Z = np.atleast_2d(z)
        X = hit_and_run(s[:, None] * self.weights, Z, 1, cfg, rng)[:, 0, :] * s
        return X.reshape(z.shape[:-1] + (self.input_dim,))


Layer = Union[Slice, Abs, DiagScale, Linear]
