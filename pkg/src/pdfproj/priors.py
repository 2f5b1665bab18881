"""Component-wise i.i.d. priors: log-pdf, sampling and cumulant generating functions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CgfDomainError, SupportViolation

LOG_2PI = math.log(2.0 * math.pi)

# |a| below this uses the Taylor series of the uniform CGF.
UNIFORM_SERIES_THRESHOLD = 1e-3
# |a| above this uses K''(a) ~ 1/a^2; the sinh term is below double resolution.
UNIFORM_ASYMPTOTIC_THRESHOLD = 35.0


class PriorKind(str, enum.Enum):
    STD_GAUSSIAN = "std_gaussian"
    UNIFORM01 = "uniform01"
    EXPONENTIAL1 = "exponential1"

    @property
    def symmetric(self) -> bool:
        return self is PriorKind.STD_GAUSSIAN

    @property
    def mean(self) -> float:
        return {"std_gaussian": 0.0, "uniform01": 0.5, "exponential1": 1.0}[self.value]

    @property
    def variance(self) -> float:
        return {"std_gaussian": 1.0, "uniform01": 1.0 / 12.0, "exponential1": 1.0}[self.value]


@dataclass(frozen=True)
class CgfEval:
    """K(a), K'(a) and K''(a) of a scalar prior at a single argument."""

    value: float
    d1: float
    d2: float


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_support(prior: PriorKind, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise SupportViolation("non-finite component")
    if prior is PriorKind.UNIFORM01:
        bad = (x < 0.0) | (x > 1.0)
    elif prior is PriorKind.EXPONENTIAL1:
        bad = x < 0.0
    else:
        return x
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad).ravel())[0]
        val = np.atleast_1d(x).ravel()[idx]
        raise SupportViolation(f"{prior.value} prior: component {idx} = {val!r} outside support")
    return x


def component_log_pdf(prior: PriorKind, x) -> np.ndarray:
    """Elementwise log-density; raises SupportViolation instead of returning -inf."""
    x = check_support(prior, x)
    if prior is PriorKind.STD_GAUSSIAN:
        return -0.5 * LOG_2PI - 0.5 * x * x
    if prior is PriorKind.UNIFORM01:
        return np.zeros_like(x)
    return -x


def log_pdf(prior: PriorKind, x) -> float | np.ndarray:
    """Joint log-density of i.i.d. components, summed over the last axis."""
    return np.sum(component_log_pdf(prior, x), axis=-1)


def draw(prior: PriorKind, rng: np.random.Generator, size) -> np.ndarray:
    if prior is PriorKind.STD_GAUSSIAN:
        return rng.standard_normal(size)
    if prior is PriorKind.UNIFORM01:
        return rng.random(size)
    return rng.standard_exponential(size)


def sample_prior(prior: PriorKind, dim: int, count: int, rng_seed) -> np.ndarray:
    """``count`` i.i.d. points of dimension ``dim`` as a ``(count, dim)`` array."""
    if count < 0 or dim < 0:
        raise ValueError("count and dim must be nonnegative")
    return draw(prior, rng_from(rng_seed), (count, dim))


def _uniform_cgf(a: np.ndarray):
    k = np.empty_like(a)
    k1 = np.empty_like(a)
    k2 = np.empty_like(a)

    small = np.abs(a) < UNIFORM_SERIES_THRESHOLD
    s = a[small]
    k[small] = s / 2 + s**2 / 24 - s**4 / 2880
    k1[small] = 0.5 + s / 12 - s**3 / 720
    k2[small] = 1.0 / 12 - s**2 / 240

    big = ~small
    k[big], k1[big], k2[big] = _uniform_cgf_closed(a[big])
    return k, k1, k2


def _uniform_cgf_closed(a: np.ndarray):
    """Closed forms, valid for any nonzero a."""
    with np.errstate(over="ignore"):
        pos = a > 0
        # log((e^a - 1)/a) = max(a, 0) + log(1 - e^{-|a|}) - log|a|
        k = np.maximum(a, 0.0) + np.log(-np.expm1(-np.abs(a))) - np.log(np.abs(a))
        # 1/(1 - e^{-a}) written with expm1 of a nonpositive argument
        k1 = np.where(pos, -1.0 / np.expm1(-np.abs(a)), 1.0 + 1.0 / np.expm1(-np.abs(a))) - 1.0 / a

    # Cancellation between 1/a^2 and 1/(4 sinh^2(a/2)) costs ~log10(1/a^2) digits;
    # extended precision keeps the closed form at ~1e-13 absolute near the series switch.
    k2 = np.empty_like(a)
    tail = np.abs(a) > UNIFORM_ASYMPTOTIC_THRESHOLD
    k2[tail] = 1.0 / a[tail] ** 2
    al = a[~tail].astype(np.longdouble)
    k2[~tail] = (1 / al**2 - 1 / (4 * np.sinh(al / 2) ** 2)).astype(float)
    return k, k1, k2


def cgf_arrays(prior: PriorKind, a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised (K, K', K'') for an array of arguments."""
    a = np.asarray(a, dtype=float)
    if prior is PriorKind.STD_GAUSSIAN:
        return 0.5 * a * a, a.copy(), np.ones_like(a)
    if prior is PriorKind.EXPONENTIAL1:
        if np.any(a >= 1.0):
            raise CgfDomainError(f"exponential CGF requires a < 1, got max {np.max(a)!r}")
        d = 1.0 - a
        return -np.log(d), 1.0 / d, 1.0 / (d * d)
    flat = np.atleast_1d(a).astype(float).ravel()
    k, k1, k2 = _uniform_cgf(flat)
    shape = np.shape(a)
    return k.reshape(shape), k1.reshape(shape), k2.reshape(shape)


def cgf(prior: PriorKind, a: float) -> CgfEval:
    k, k1, k2 = cgf_arrays(prior, np.array([a], dtype=float))
    return CgfEval(float(k[0]), float(k1[0]), float(k2[0]))


def uniform_cgf_closed_form(a: float) -> CgfEval:
    """Closed-form branch of the uniform CGF, bypassing the series switch (for diagnostics)."""
    k, k1, k2 = _uniform_cgf_closed(np.array([a], dtype=float))
    return CgfEval(float(k[0]), float(k1[0]), float(k2[0]))


def uniform_cgf_series(a: float) -> CgfEval:
    return CgfEval(a / 2 + a**2 / 24 - a**4 / 2880, 0.5 + a / 12 - a**3 / 720, 1.0 / 12 - a**2 / 240)
