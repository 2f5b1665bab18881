"""Saddle-point approximation of the density of z = W^T x under an i.i.d. prior on x.

The multivariate CGF of z is K(lam) = sum_i K0((W lam)_i) with K0 the scalar
prior CGF.  The saddle point solves grad K(lam) = z; it is found by damped
Newton on the strictly convex dual f(lam) = K(lam) - lam^T z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CgfDomainError, NonConvergence, SaddleDomainError
from .priors import LOG_2PI, PriorKind, cgf_arrays

GRAD_TOL = 1e-10
MAX_ITER = 200
MAX_HALVINGS = 60
ARMIJO_C = 1e-4
LAMBDA_LIMIT = 1e8


@dataclass(frozen=True)
class SaddleResult:
    lambda_star: np.ndarray
    cgf_value: float
    grad_residual: float
    hessian_logdet: float
    iterations: int
    # dual objective after each accepted Newton step, starting at lam = 0
    dual_trace: tuple = ()


def _as_weights(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    return W


def multivariate_cgf(W, lam, prior: PriorKind):
    """Value, gradient and Hessian of the CGF of W^T x at ``lam``."""
    W = _as_weights(W)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    a = W @ lam
    k, k1, k2 = cgf_arrays(prior, a)
    value = math.fsum(k)
    grad = W.T @ k1
    hess = W.T @ (k2[:, None] * W)
    return value, grad, hess


def _dual(W, lam, z, prior):
    # +inf outside the CGF domain so the line search backs off.
    a = W @ lam
    try:
        k, k1, k2 = cgf_arrays(prior, a)
    except CgfDomainError:
        return math.inf, None, None, None
    value = math.fsum(k)
    return value - float(lam @ z), value, W.T @ k1, k2


def _hessian_factor(W: np.ndarray, k2: np.ndarray) -> np.ndarray:
    """Upper-triangular R with R^T R = W^T diag(k2) W and a positive diagonal.

    Taken from a QR of diag(sqrt(k2)) W so the factor only sees cond(W), not
    cond(W)^2; one jittered Cholesky retry if it comes out singular.
    """
    r = np.linalg.qr(np.sqrt(k2)[:, None] * W, mode="r")
    r = np.sign(np.diag(r))[:, None] * r
    d = np.diag(r)
    if np.all(d > 0) and np.all(np.isfinite(r)):
        return r
    hess = W.T @ (k2[:, None] * W)
    m = hess.shape[0]
    jitter = 1e-12 * np.trace(hess) / m
    try:
        return np.linalg.cholesky(hess + jitter * np.eye(m)).T
    except np.linalg.LinAlgError as exc:
        raise SaddleDomainError("CGF Hessian is not positive definite") from exc


def solve_saddle(W, z, prior: PriorKind) -> SaddleResult:
    """Damped Newton with Armijo backtracking from lam = 0."""
    W = _as_weights(W)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (W.shape[1],):
        raise ValueError(f"feature has shape {z.shape}, weights expect ({W.shape[1]},)")

    lam = np.zeros(W.shape[1])
    f, value, grad, k2 = _dual(W, lam, z, prior)
    trace = [f]
    for it in range(MAX_ITER + 1):
        g = grad - z
        resid = float(np.linalg.norm(g))
        r = _hessian_factor(W, k2)
        if resid <= GRAD_TOL:
            logdet = 2.0 * float(np.sum(np.log(np.diag(r))))
            return SaddleResult(lam, value, resid, logdet, it, tuple(trace))
        if it == MAX_ITER:
            break

        step = -solve_triangular(r, solve_triangular(r, g, trans="T"))
        slope = float(g @ step)
        t = 1.0
        if -0.5 * slope <= 1e-14 * (1.0 + abs(f)):
            # predicted decrease is below the resolution of f; Armijo cannot see it
            f_new, v_new, g_new, k2_new = _dual(W, lam + step, z, prior)
            if math.isfinite(f_new):
                lam, f, value, grad, k2 = lam + step, f_new, v_new, g_new, k2_new
                trace.append(f)
                continue
        for _ in range(MAX_HALVINGS):
            cand = lam + t * step
            f_new, v_new, g_new, k2_new = _dual(W, cand, z, prior)
            if f_new <= f + ARMIJO_C * t * slope:
                break
            t *= 0.5
        else:
            raise SaddleDomainError(
                f"line search made no progress at |lam|={np.linalg.norm(lam):.3g}, residual {resid:.3g}"
            )
        lam, f, value, grad, k2 = cand, f_new, v_new, g_new, k2_new
        trace.append(f)
        if np.linalg.norm(lam) > LAMBDA_LIMIT:
            raise SaddleDomainError("saddle point diverged; feature is on or outside the achievable boundary")

    raise NonConvergence(f"saddle residual {resid:.3g} after {MAX_ITER} iterations")


def spa_log_density(W, z, prior: PriorKind, result: SaddleResult | None = None) -> float:
    """First-order saddle-point log-density of z = W^T x."""
    W = _as_weights(W)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if result is None:
        result = solve_saddle(W, z, prior)
    m = W.shape[1]
    return result.cgf_value - float(result.lambda_star @ z) - 0.5 * (m * LOG_2PI + result.hessian_logdet)


def _cgf_rows(prior: PriorKind, a: np.ndarray):
    """cgf_arrays that marks out-of-domain entries with K = +inf instead of raising."""
    if prior is PriorKind.EXPONENTIAL1:
        ok = a < 1.0
        k, k1, k2 = cgf_arrays(prior, np.where(ok, a, 0.0))
        return np.where(ok, k, np.inf), k1, k2
    return cgf_arrays(prior, a)


def solve_saddle_batch(W, Z, prior: PriorKind):
    """Vectorised ``solve_saddle`` over the rows of ``Z``; returns (lambda, K, hessian logdet).

    Same iteration as the single-point solver (damped Newton, Armijo halving),
    run for all rows at once; rows drop out as they converge.  Errors name the
    first offending row in ``exc.index``.
    """
    W = _as_weights(W)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    b, m = Z.shape
    lam = np.zeros((b, m))

    def evaluate(L, Zr):
        a = np.einsum("bm,nm->bn", L, W)
        k, k1, k2 = _cgf_rows(prior, a)
        value = k.sum(axis=1)
        f = value - np.einsum("bm,bm->b", L, Zr)
        grad = np.einsum("bn,nm->bm", k1, W)
        hess = np.einsum("bn,nm,nk->bmk", k2, W, W)
        return f, value, grad, hess

    f, value, grad, hess = evaluate(lam, Z)
    active = np.ones(b, dtype=bool)

    def fail(exc_type, rows, msg):
        exc = exc_type(f"row {int(rows[0])}: {msg}")
        exc.index = int(rows[0])
        raise exc

    for _ in range(MAX_ITER + 1):
        g = grad - Z
        resid = np.linalg.norm(g, axis=1)
        active &= resid > GRAD_TOL
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        try:
            np.linalg.cholesky(hess[idx])
        except np.linalg.LinAlgError:
            fail(SaddleDomainError, idx, "CGF Hessian is not positive definite")
        step = -np.linalg.solve(hess[idx], g[idx][..., None])[..., 0]
        slope = np.einsum("bm,bm->b", g[idx], step)
        f_cur = f[idx]
        tiny = -0.5 * slope <= 1e-14 * (1.0 + np.abs(f_cur))
        t = np.ones(idx.size)
        todo = np.ones(idx.size, dtype=bool)
        cand = lam[idx].copy()
        f_new = np.full(idx.size, np.inf)
        v_new = np.zeros(idx.size)
        g_new = np.zeros((idx.size, m))
        h_new = np.zeros((idx.size, m, m))
        for _ in range(MAX_HALVINGS):
            rows = np.flatnonzero(todo)
            c = lam[idx[rows]] + t[rows, None] * step[rows]
            fr, vr, gr, hr = evaluate(c, Z[idx[rows]])
            ok = (fr <= f_cur[rows] + ARMIJO_C * t[rows] * slope[rows]) | (tiny[rows] & np.isfinite(fr))
            acc = rows[ok]
            cand[acc], f_new[acc], v_new[acc], g_new[acc], h_new[acc] = c[ok], fr[ok], vr[ok], gr[ok], hr[ok]
            todo[acc] = False
            if not np.any(todo):
                break
            t[todo] *= 0.5
        if np.any(todo):
            fail(SaddleDomainError, idx[todo], "line search made no progress; feature on or outside the boundary")
        lam[idx], f[idx], value[idx], grad[idx], hess[idx] = cand, f_new, v_new, g_new, h_new
        big = np.linalg.norm(lam[idx], axis=1) > LAMBDA_LIMIT
        if np.any(big):
            fail(SaddleDomainError, idx[big], "saddle point diverged; feature on or outside the boundary")
    else:
        fail(NonConvergence, np.flatnonzero(active), f"saddle residual above {GRAD_TOL} after {MAX_ITER} iterations")

    _, _, k2 = _cgf_rows(prior, np.einsum("bm,nm->bn", lam, W))
    r = np.linalg.qr(np.sqrt(k2)[:, :, None] * W[None], mode="r")
    d = np.abs(np.diagonal(r, axis1=1, axis2=2))
    if np.any(~(d > 0)):
        fail(SaddleDomainError, np.flatnonzero(np.any(~(d > 0), axis=1)), "CGF Hessian is not positive definite")
    return lam, value, 2.0 * np.log(d).sum(axis=1)


def spa_log_density_batch(W, Z, prior: PriorKind) -> np.ndarray:
    W = _as_weights(W)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    lam, value, logdet = solve_saddle_batch(W, Z, prior)
    m = W.shape[1]
    return value - np.einsum("bm,bm->b", lam, Z) - 0.5 * (m * LOG_2PI + logdet)
