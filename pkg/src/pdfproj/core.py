"""Model definition and evaluation of the projected log-density.

log G(x) = sum over layers of log J_layer(y_{k-1}) + log g(z), accumulated
from the first layer to the last and then the terminal density, always in
that order so totals are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .domain import DataPoint, DomainTag
from .errors import DomainViolation, ModelValidationError, PDFProjError, UnsupportedSampling
from .layers import Abs, DiagScale, HitAndRunConfig, Layer, Linear, Slice, StagePrior, achievable
from .priors import LOG_2PI, PriorKind, rng_from

RANK_TOL = 1e-10


@dataclass(frozen=True)
class StandardGaussian:
    dim: int

    def log_pdf(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return -0.5 * self.dim * LOG_2PI - 0.5 * np.sum(z * z, axis=-1)

    def draw(self, rng, count: int) -> np.ndarray:
        return rng.standard_normal((count, self.dim))


@dataclass(frozen=True)
class DiagGaussian:
    mean: tuple
    var: tuple

    def __post_init__(self):
        mean = tuple(float(m) for m in np.atleast_1d(self.mean))
        var = tuple(float(v) for v in np.atleast_1d(self.var))
        if len(mean) != len(var):
            raise ValueError("mean and variance lengths differ")
        if any(not v > 0 for v in var):
            raise ValueError("variances must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def dim(self) -> int:
        return len(self.mean)

    def log_pdf(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        mu = np.asarray(self.mean)
        var = np.asarray(self.var)
        r = z - mu
        return -0.5 * self.dim * LOG_2PI - 0.5 * float(np.sum(np.log(var))) - 0.5 * np.sum(r * r / var, axis=-1)

    def draw(self, rng, count: int) -> np.ndarray:
        return np.asarray(self.mean) + np.sqrt(np.asarray(self.var)) * rng.standard_normal((count, self.dim))


TerminalDensity = Union[StandardGaussian, DiagGaussian]


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    input_domain: DomainTag
    layers: tuple
    terminal: TerminalDensity
    prior: PriorKind = PriorKind.STD_GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "input_domain", DomainTag(self.input_domain))
        object.__setattr__(self, "prior", PriorKind(self.prior))
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class Violation:
    layer: int | None
    kind: str
    message: str

    def __str__(self):
        where = "model" if self.layer is None else f"layer {self.layer}"
        return f"{self.kind} at {where}: {self.message}"


@dataclass(frozen=True)
class Model:
    """A validated model; build with ``validate_model``."""

    spec: ModelSpec
    dims: tuple  # dimension entering each layer, then the terminal dimension
    domains: tuple
    stages: tuple  # StagePrior entering each layer

    @property
    def layers(self) -> tuple:
        return self.spec.layers

    @property
    def terminal(self) -> TerminalDensity:
        return self.spec.terminal


@dataclass(frozen=True)
class EvalBreakdown:
    per_layer_log_j: tuple
    terminal_log_g: float
    total_log_density: float


_PRIOR_DOMAINS = {
    PriorKind.STD_GAUSSIAN: {DomainTag.REALS, DomainTag.UNIT_BOX, DomainTag.NONNEGATIVE},
    PriorKind.UNIFORM01: {DomainTag.UNIT_BOX},
    PriorKind.EXPONENTIAL1: {DomainTag.NONNEGATIVE, DomainTag.UNIT_BOX},
}


def validate_model(spec: ModelSpec) -> Model:
    """Check dimension and domain chaining; raise ModelValidationError listing every violation."""
    out: list[Violation] = []
    if spec.input_dim < 1:
        out.append(Violation(None, "DimensionMismatch", f"input_dim={spec.input_dim} must be positive"))
    if spec.input_domain not in _PRIOR_DOMAINS[spec.prior]:
        out.append(
            Violation(None, "DomainMismatch", f"{spec.prior.value} prior cannot describe {spec.input_domain.value} data")
        )

    n = max(spec.input_dim, 1)
    domain = spec.input_domain
    stage = StagePrior.unit(spec.prior, n)
    dims, domains, stages = [n], [domain], []
    for i, layer in enumerate(spec.layers):
        stages.append(stage)
        if i > 0 and isinstance(spec.layers[i - 1], Linear):
            out.append(Violation(i, "DomainMismatch", "no layer may follow a linear layer"))
        if isinstance(layer, Slice):
            if not 1 <= layer.keep <= n:
                out.append(Violation(i, "DimensionMismatch", f"keep={layer.keep} with input dimension {n}"))
        elif isinstance(layer, Abs):
            if not stage.kind.symmetric:
                out.append(Violation(i, "DomainMismatch", f"absolute value needs a symmetric prior, got {stage.kind.value}"))
        elif isinstance(layer, DiagScale):
            if len(layer.scales) != n:
                out.append(Violation(i, "DimensionMismatch", f"{len(layer.scales)} scales with input dimension {n}"))
            if any(s == 0.0 or not math.isfinite(s) for s in layer.scales):
                out.append(Violation(i, "InvalidScale", "scales must be finite and nonzero"))
        elif isinstance(layer, Linear):
            W = layer.weights
            if W.shape[0] != n:
                out.append(Violation(i, "DimensionMismatch", f"weights have {W.shape[0]} rows, input dimension {n}"))
            if W.shape[1] > W.shape[0]:
                out.append(Violation(i, "DimensionMismatch", f"weights {W.shape} would increase dimension"))
            elif W.size and np.linalg.svd(W, compute_uv=False).min() <= RANK_TOL:
                out.append(Violation(i, "RankDeficientWeights", "weights are not full column rank"))
            if layer.prior is PriorKind.STD_GAUSSIAN:
                out.append(Violation(i, "DomainMismatch", "linear layer needs the uniform01 or exponential1 prior"))
            elif domain not in _PRIOR_DOMAINS[layer.prior]:
                out.append(
                    Violation(i, "DomainMismatch", f"{layer.prior.value} linear layer fed {domain.value} input")
                )
            elif layer.prior is not stage.kind or stage.folded:
                out.append(Violation(i, "DomainMismatch", f"layer prior {layer.prior.value} differs from stage prior"))
        else:
            out.append(Violation(i, "DomainMismatch", f"unknown layer {layer!r}"))
            continue

        if any(v.kind == "DimensionMismatch" and v.layer == i for v in out):
            # downstream dimensions are meaningless after a broken layer
            break
        n_out = layer.output_dim(n)
        domain = layer.output_domain(domain)
        if not isinstance(layer, Linear):
            try:
                stage = layer.output_stage(stage)
            except Exception:  # invalid layer already reported
                pass
        n = max(n_out, 1)
        dims.append(n)
        domains.append(domain)

    if len(dims) == len(spec.layers) + 1 and spec.terminal.dim != n:
        out.append(Violation(None, "DimensionMismatch", f"terminal dimension {spec.terminal.dim}, last layer gives {n}"))
    if out:
        raise ModelValidationError(out)
    return Model(spec, tuple(dims), tuple(domains), tuple(stages))


def _as_batch(model: Model, x) -> tuple[np.ndarray, bool]:
    if isinstance(x, DataPoint):
        x = x.values
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[-1] != model.dims[0]:
        raise DomainViolation(f"point has dimension {X.shape[-1]}, model expects {model.dims[0]}")
    model.spec.input_domain.check(X)
    return X, single


def forward(model: Model, x) -> list[np.ndarray]:
    """Intermediate points ``[x, y_1, ..., z]``."""
    X, single = _as_batch(model, x)
    out = [X]
    for layer in model.layers:
        out.append(layer.forward(out[-1]))
    return [y[0] for y in out] if single else out


def _evaluate(model: Model, X: np.ndarray):
    ys = [X]
    for layer in model.layers:
        ys.append(layer.forward(ys[-1]))
    per_layer = []
    for k, layer in enumerate(model.layers):
        lj = layer.log_j(ys[k], model.stages[k])
        per_layer.append(np.broadcast_to(np.asarray(lj, dtype=float), (X.shape[0],)))
    log_g = np.asarray(model.terminal.log_pdf(ys[-1]), dtype=float)
    total = np.zeros(X.shape[0])
    for lj in per_layer:
        total = total + lj
    total = total + log_g
    return per_layer, log_g, total


def _breakdowns(per_layer, log_g, total) -> list[EvalBreakdown]:
    return [
        EvalBreakdown(tuple(float(lj[i]) for lj in per_layer), float(log_g[i]), float(total[i]))
        for i in range(total.shape[0])
    ]


def evaluate_log_density(model: Model, x) -> EvalBreakdown:
    X, _ = _as_batch(model, x)
    if X.shape[0] != 1:
        raise ValueError("evaluate_log_density takes a single point; use log_density_batch")
    return _breakdowns(*_evaluate(model, X))[0]


def log_density_batch(model: Model, xs: Sequence) -> list[EvalBreakdown]:
    """Elementwise ``evaluate_log_density``; errors carry the index of the first failing point."""
    if isinstance(xs, np.ndarray) and xs.ndim == 2 and xs.shape[0] == 0:
        return []
    rows = [p.values if isinstance(p, DataPoint) else p for p in xs]
    if len(rows) == 0:
        return []
    try:
        X = np.asarray(rows, dtype=float)
        if X.ndim != 2:
            raise DomainViolation("points have inconsistent dimensions")
        X, _ = _as_batch(model, X)
        return _breakdowns(*_evaluate(model, X))
    except PDFProjError:
        pass
    # locate the first offending point
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(evaluate_log_density(model, row))
        except PDFProjError as exc:
            exc.index = i
            exc.args = (f"point {i}: {exc}",)
            raise
    return out


def log_density(model: Model, X) -> np.ndarray:
    """Totals only, for array input of shape ``(B, N)``."""
    X, _ = _as_batch(model, X)
    return _evaluate(model, X)[2]


def _feature_filter(model: Model):
    """Mask function for features the last layer can produce, or None if every feature in its domain works."""
    domain = model.domains[-1]
    last = model.layers[-1] if model.layers else None
    if isinstance(last, Linear):
        stage = model.stages[-1]
        W = np.asarray(stage.scales, dtype=float)[:, None] * last.weights
        if stage.kind is PriorKind.UNIFORM01 and not stage.folded:
            return lambda Z: achievable(W, Z)
    if domain is DomainTag.REALS:
        return None
    if domain is DomainTag.UNIT_BOX:
        return lambda Z: np.all((Z >= 0.0) & (Z <= 1.0), axis=1)
    return lambda Z: np.all(Z >= 0.0, axis=1)


def sample_terminal(model: Model, count: int, rng) -> np.ndarray:
    """Draws from g restricted to the features the last layer can produce (rejection).

    That restriction is the normalised projected model: G integrates to the
    mass g puts on the achievable set.
    """
    keep = _feature_filter(model)
    if keep is None:
        return model.terminal.draw(rng, count)
    domain = model.domains[-1]
    chunks, have = [], 0
    for _ in range(1000):
        if have >= count:
            break
        Z = model.terminal.draw(rng, max(count - have, 16) * 2)
        Z = Z[keep(Z)]
        chunks.append(Z)
        have += Z.shape[0]
    if have < count:
        raise UnsupportedSampling(f"terminal density puts almost no mass on the achievable {domain.value} features")
    return np.concatenate(chunks)[:count] if chunks else model.terminal.draw(rng, 0)


def generate(model: Model, count: int, seed, cfg: HitAndRunConfig | None = None):
    """Cascaded generation: z from g, then one fiber draw per layer from last to first.

    Returns ``(X, Z)`` with ``X`` of shape ``(count, input_dim)`` and the terminal draws ``Z``.
    """
    rng = rng_from(seed)
    Z = sample_terminal(model, count, rng)
    Y = Z
    for k in range(len(model.layers) - 1, -1, -1):
        Y = model.layers[k].sample_fiber(Y, model.stages[k], rng, cfg)
    return np.asarray(Y, dtype=float).reshape(count, model.dims[0]), Z
