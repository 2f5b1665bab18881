"""Runtime invariant checks behind ``pdfproj validate``.

Each check measures one quantity and compares it to a fixed tolerance.  A
check with ``tolerance=None`` only reports a measurement.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .core import ModelSpec, StandardGaussian, evaluate_log_density, log_density, validate_model
from .layers import (
    Abs,
    DiagScale,
    HitAndRunConfig,
    Slice,
    abs_log_j,
    diag_scale_log_j,
    hit_and_run,
    sample_fiber_abs,
    sample_fiber_slice,
    slice_log_j,
)
from .oracle import fiber_integral_check, irwin_hall_log_pdf, survae_contribution_abs, survae_contribution_slice
from .priors import LOG_2PI, PriorKind
from .spa import multivariate_cgf, solve_saddle, spa_log_density

SUITES = ("fiber", "spa", "survae", "compose")

G = PriorKind.STD_GAUSSIAN
U = PriorKind.UNIFORM01


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float | None
    passed: bool

    def line(self) -> str:
        tol = "-" if self.tolerance is None else f"{self.tolerance:.3g}"
        status = "INFO" if self.tolerance is None else ("PASS" if self.passed else "FAIL")
        return f"{self.name:<44} measured={self.measured:<12.6g} tol={tol:<8} {status}"


def _le(name, measured, tol) -> Check:
    return Check(name, float(measured), tol, bool(measured <= tol))


def stream(seed: int, label: str) -> np.random.Generator:
    """Generator for one labelled task; other labels never perturb it."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(label.encode()),)))


def rel_density_error(log_approx: float, log_exact: float) -> float:
    return abs(math.expm1(log_approx - log_exact))


def spa_uniform_mode_error(n: int) -> float:
    W = np.ones((n, 1))
    return rel_density_error(spa_log_density(W, [n / 2], U), irwin_hall_log_pdf(n, n / 2))


def spa_uniform_tail_point(n: int = 5, ratio: float = 1e-6) -> float:
    """Largest grid point s < n/2 where the exact density is at most ``ratio`` times its peak."""
    peak = irwin_hall_log_pdf(n, n / 2)
    for s in np.linspace(n / 2, 1e-3, 5000):
        if irwin_hall_log_pdf(n, float(s)) <= peak + math.log(ratio):
            return float(s)
    raise RuntimeError("tail point not found")


def gaussian_exact_log_pdf(W, z) -> float:
    # z ~ N(0, W^T W); QR of W avoids forming W^T W and squaring its condition number
    r = np.linalg.qr(np.asarray(W, dtype=float), mode="r")
    y = np.linalg.solve(r.T, z)
    logdet = 2.0 * float(np.sum(np.log(np.abs(np.diag(r)))))
    return float(-0.5 * (len(z) * LOG_2PI + logdet + y @ y))


# ---------------------------------------------------------------------------


def fiber_suite(seed: int) -> list[Check]:
    rng = stream(seed, "fiber")
    out = []
    worst = 0.0
    for n in range(1, 13):
        z = rng.uniform(0.05, 3.0, n)
        worst = max(worst, abs(fiber_integral_check(Abs(), z, G) - 1.0))
    out.append(_le("abs fiber enumeration, N<=12", worst, 1e-12))
    worst = 0.0
    for n, keep in [(2, 1), (3, 1), (3, 2), (4, 2)]:
        z = rng.standard_normal(keep)
        worst = max(worst, abs(fiber_integral_check(Slice(keep), z, G, n=n) - 1.0))
    out.append(_le("slice fiber quadrature, N-M in {1,2}", worst, 1e-8))

    Z = rng.standard_normal((1000, 2))
    X = sample_fiber_slice(Z, 4, G, rng)
    out.append(_le("slice round trip, 1000 z", np.max(np.abs(X[:, :2] - Z)), 1e-10))
    Z = np.abs(rng.standard_normal((1000, 3)))
    X = sample_fiber_abs(Z, G, rng)
    out.append(_le("abs round trip, 1000 z", np.max(np.abs(np.abs(X) - Z)), 1e-10))
    W = np.array([[1.0], [1.0], [1.0]])
    Z = rng.uniform(0.2, 2.8, (1000, 1))
    X = hit_and_run(W, Z, 1, HitAndRunConfig(burn_in=50, thin=1), rng)[:, 0, :]
    out.append(_le("linear-uniform round trip, 1000 z", np.max(np.abs(X @ W - Z)), 1e-10))
    return out


def spa_suite(seed: int) -> list[Check]:
    rng = stream(seed, "spa")
    out = []
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n + 1))
        W = rng.standard_normal((n, m))
        z = W.T @ rng.standard_normal(n)
        worst = max(worst, abs(spa_log_density(W, z, G) - gaussian_exact_log_pdf(W, z)))
    out.append(_le("gaussian exactness, 100 (W,z)", worst, 1e-10))

    worst = 0.0
    for n in (2, 3, 5, 10):
        W = np.ones((n, 1))
        for z in rng.uniform(0.05, n - 0.05, 5):
            worst = max(worst, abs(spa_log_density(W, [z], U) - spa_log_density(W, [n - z], U)))
    out.append(_le("uniform symmetry z <-> N-z", worst, 1e-10))

    errors = {n: spa_uniform_mode_error(n) for n in (2, 3, 5, 10)}
    for n, e in errors.items():
        out.append(Check(f"mode rel. density error, N={n}", e, None, True))
    out.append(_le("mode error N=2 (reference 0.0228)", errors[2], 0.025))

    s_tail = spa_uniform_tail_point(5)
    tail = rel_density_error(spa_log_density(np.ones((5, 1)), [s_tail], U), irwin_hall_log_pdf(5, s_tail))
    out.append(_le(f"far-tail rel. error N=5 (s={s_tail:.4f})", tail, 0.10))

    worst = 0.0
    W = rng.random((4, 2)) + 0.2
    h = 1e-5
    for _ in range(20):
        lam = rng.uniform(-3, 3, 2)
        _, _, hess = multivariate_cgf(W, lam, U)
        fd = np.column_stack(
            [(multivariate_cgf(W, lam + h * e, U)[1] - multivariate_cgf(W, lam - h * e, U)[1]) / (2 * h) for e in np.eye(2)]
        )
        worst = max(worst, float(np.max(np.abs(fd - hess) / np.abs(hess).max())))
    out.append(_le("hessian vs finite differences", worst, 1e-5))

    worst_rise = 0.0
    for z in rng.uniform(0.1, 3.9, 20):
        tr = np.array(solve_saddle(np.ones((4, 1)), [z], U).dual_trace)
        worst_rise = max(worst_rise, float(np.max(np.diff(tr), initial=0.0)))
    out.append(_le("dual objective never rises (max rise)", worst_rise, 1e-12))
    return out


def survae_suite(seed: int) -> list[Check]:
    rng = stream(seed, "survae")
    X = rng.standard_normal((1000, 5))
    diff = max(abs(survae_contribution_slice(x, 2).value - slice_log_j(x, 2, G)) for x in X)
    out = [_le("survae slice == log J, 1000 points", diff, 1e-12)]
    mismatches = sum(survae_contribution_abs(n).value != abs_log_j(np.ones(n), G) for n in range(1, 21))
    out.append(Check("survae abs == log J bitwise, N=1..20", float(mismatches), 0.0, mismatches == 0))
    return out


def compose_suite(seed: int) -> list[Check]:
    rng = stream(seed, "compose")
    X = rng.random((1000, 3))
    chained = validate_model(ModelSpec(3, "unit_box", (Slice(2), Slice(1)), StandardGaussian(1), G))
    single = validate_model(ModelSpec(3, "unit_box", (Slice(1),), StandardGaussian(1), G))
    diff = max(
        abs(sum(evaluate_log_density(chained, x).per_layer_log_j) - sum(evaluate_log_density(single, x).per_layer_log_j))
        for x in X
    )
    out = [_le("chained slices == single slice", diff, 1e-12)]

    worst = 0.0
    for _ in range(100):
        s = rng.uniform(0.1, 3.0, 3) * rng.choice([-1.0, 1.0], 3)
        x = rng.standard_normal(3)
        worst = max(worst, abs(diag_scale_log_j(x, s) - math.fsum(math.log(abs(v)) for v in s)))
    out.append(_le("diag scale log J == sum log|s|", worst, 1e-12))

    model = validate_model(ModelSpec(2, "reals", (Slice(1),), StandardGaussian(1), G))
    grid = np.linspace(-8.0, 8.0, 400)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    dens = np.exp(log_density(model, np.column_stack([gx.ravel(), gy.ravel()]))).reshape(400, 400)
    mass = np.trapezoid(np.trapezoid(dens, grid, axis=1), grid)
    out.append(_le("projected density mass on [-8,8]^2", abs(mass - 1.0), 1e-3))
    return out


def run_suite(name: str, seed: int = 0) -> list[Check]:
    fns = {"fiber": fiber_suite, "spa": spa_suite, "survae": survae_suite, "compose": compose_suite}
    if name == "all":
        return [c for s in SUITES for c in fns[s](seed)]
    if name not in fns:
        raise KeyError(name)
    return fns[name](seed)
