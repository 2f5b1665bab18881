"""Reference computations that do not share code paths with the layers or the SPA.

* exact Irwin-Hall density (sum of n uniforms),
* histogram Monte Carlo density estimates,
* quadrature / enumeration of the J-function over a fiber,
* the SurVAE-side likelihood contributions for slicing and absolute value,
  written from the decoder's point of view: the likelihood contribution of a
  deterministic inference surjection reduces to log p(x | z).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .errors import PDFProjError, UnsupportedLayer
from .layers import Abs, Slice
from .priors import PriorKind

IRWIN_HALL_MAX_N = 25


class OutOfSupport(PDFProjError):
    pass


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    std_error: float
    n_samples: int


@dataclass(frozen=True)
class SurvaeContribution:
    value: float


def irwin_hall_log_pdf(n: int, s: float) -> float:
    """log f(s) for the sum of n i.i.d. Uniform(0, 1) variables.

    f(s) = 1/(n-1)! * sum_{k=0}^{floor(s)} (-1)^k C(n, k) (s - k)^(n-1).
    The alternating sum is accumulated with ``math.fsum`` and evaluated on the
    nearer half of the support, which keeps the cancellation small.
    """
    if not 1 <= n <= IRWIN_HALL_MAX_N:
        raise ValueError(f"n must be in 1..{IRWIN_HALL_MAX_N}")
    if not 0.0 <= s <= n:
        raise OutOfSupport(f"s={s!r} outside [0, {n}]")
    if n == 1:
        return 0.0
    if s > n / 2:
        s = n - s
    terms = [(-1) ** k * math.comb(n, k) * (s - k) ** (n - 1) for k in range(int(math.floor(s)) + 1)]
    total = math.fsum(terms)
    if total <= 0.0:
        return -math.inf
    return math.log(total) - math.lgamma(n)


def mc_density_estimate(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    z_query: float,
    n_samples: int,
    binwidth: float,
    seed: int,
    n_shards: int = 1,
    max_workers: int | None = None,
) -> DensityEstimate:
    """Histogram estimate of a scalar pushforward density at ``z_query``.

    ``sampler(rng, k)`` returns ``k`` scalar draws.  Shards get child seeds of
    ``seed``; counts are summed in shard order, so the answer only depends on
    ``seed`` and ``n_shards``, never on how the shards are scheduled.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    sizes = [n_samples // n_shards + (1 if i < n_samples % n_shards else 0) for i in range(n_shards)]
    children = np.random.SeedSequence(seed).spawn(n_shards)
    lo, hi = z_query - binwidth / 2, z_query + binwidth / 2

    def count(i: int) -> int:
        draws = np.asarray(sampler(np.random.default_rng(children[i]), sizes[i]), dtype=float)
        return int(np.count_nonzero((draws >= lo) & (draws < hi)))

    if max_workers and n_shards > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            counts = list(pool.map(count, range(n_shards)))
    else:
        counts = [count(i) for i in range(n_shards)]
    p = sum(counts) / n_samples
    return DensityEstimate(p / binwidth, math.sqrt(p * (1.0 - p) / n_samples) / binwidth, n_samples)


def uniform_sum_sampler(n: int, weights=None):
    """Sampler of w^T x with x uniform on the unit cube (all-ones weights by default)."""
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)

    def sampler(rng, k):
        return rng.random((k, w.shape[0])) @ w

    return sampler


# ---------------------------------------------------------------------------
# fiber integrals


def _gaussian_logpdf(x):
    return stats.norm.logpdf(x)


def _component_logpdf(prior: PriorKind, x):
    if prior is PriorKind.STD_GAUSSIAN:
        return stats.norm.logpdf(x)
    if prior is PriorKind.UNIFORM01:
        return stats.uniform.logpdf(x)
    return stats.expon.logpdf(x)


_QUAD_RANGE = {
    PriorKind.STD_GAUSSIAN: (-10.0, 10.0),
    PriorKind.UNIFORM01: (0.0, 1.0),
    PriorKind.EXPONENTIAL1: (0.0, 60.0),
}


def fiber_integral_check(layer, z, prior: PriorKind, n: int | None = None, points: int = 2001) -> float:
    """Integral of p(x) / p(z) over the fiber of ``z``; equals 1 for a correct J-function.

    Slice (at most two dropped coordinates) uses Simpson's rule over the dropped
    coordinates; Abs (N <= 12) enumerates the 2^N sign patterns with p(z) the
    truncated Gaussian 2^N p(x).  ``n`` is the input dimension for Slice.
    """
    prior = PriorKind(prior)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if isinstance(layer, Abs):
        if z.shape[0] > 12 or prior is not PriorKind.STD_GAUSSIAN:
            raise UnsupportedLayer("abs enumeration needs N <= 12 and the Gaussian prior")
        log_pz = float(np.sum(math.log(2.0) + _gaussian_logpdf(z)))
        terms = []
        for signs in itertools.product((1.0, -1.0), repeat=z.shape[0]):
            x = np.asarray(signs) * z
            terms.append(math.exp(float(np.sum(_gaussian_logpdf(x))) - log_pz))
        return math.fsum(terms)

    if isinstance(layer, Slice):
        if n is None:
            raise ValueError("input dimension n is required for a slice layer")
        dropped = n - layer.keep
        if dropped == 0:
            return 1.0
        if dropped > 2:
            raise UnsupportedLayer("slice quadrature supports at most two dropped coordinates")
        log_pz = float(np.sum(_component_logpdf(prior, z)))
        a, b = _QUAD_RANGE[prior]
        grid = np.linspace(a, b, points)
        if dropped == 1:
            logp = log_pz + _component_logpdf(prior, grid)
            return float(integrate.simpson(np.exp(logp - log_pz), x=grid))
        g1, g2 = np.meshgrid(grid, grid, indexing="ij")
        logp = log_pz + _component_logpdf(prior, g1) + _component_logpdf(prior, g2)
        inner = integrate.simpson(np.exp(logp - log_pz), x=grid, axis=1)
        return float(integrate.simpson(inner, x=grid))

    raise UnsupportedLayer(f"no fiber integral for {type(layer).__name__}")


# ---------------------------------------------------------------------------
# SurVAE-side contributions


def survae_contribution_slice(x, keep: int) -> SurvaeContribution:
    """log p(x_dropped | x_kept) for a decoder that fills the dropped slots with N(0, I).

    SurVAE names x and z the other way round, so its slicing example carries
    the opposite sign.
    """
    x = np.asarray(x, dtype=float)
    dropped = x[keep:]
    if dropped.size == 0:
        return SurvaeContribution(0.0)
    return SurvaeContribution(float(stats.multivariate_normal(np.zeros(dropped.size), np.eye(dropped.size)).logpdf(dropped)))


def survae_contribution_abs(n_dims: int) -> SurvaeContribution:
    """Each sign is +/- with probability 1/2, so log p(x | z) = N log(1/2)."""
    return SurvaeContribution(n_dims * math.log(0.5))
