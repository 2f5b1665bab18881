"""Command-line front end.

Exit codes: 0 ok, 1 usage or config error, 2 evaluation domain error,
3 unsupported sampling, 4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import checks
from .config import ConfigError, fmt, load_model, read_data, write_csv_atomic
from .core import Model, forward, log_density_batch, generate
from .errors import (
    EmptyFiber,
    ModelValidationError,
    NonConvergence,
    PDFProjError,
    UnsupportedSampling,
)
from .layers import HitAndRunConfig, Linear
from .oracle import IRWIN_HALL_MAX_N, irwin_hall_log_pdf
from .priors import PriorKind
from .spa import spa_log_density
from .trainer import Fixed, MomentMatched, RankDeficientWeights, TrainConfig, fit_linear

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_UNSUPPORTED, EXIT_FAILED = 0, 1, 2, 3, 4
SPA_EPS = 1e-3
ROUND_TRIP_TOL = 1e-10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which would collide with the domain-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _err(msg: str) -> None:
    print(f"pdfproj: {msg}", file=sys.stderr)


def _out_stream_path(out):
    return None if out in (None, "-") else Path(out)


def _emit(out, header, rows) -> None:
    path = _out_stream_path(out)
    if path is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    else:
        write_csv_atomic(path, header, rows)


# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    model = load_model(args.model)
    X = read_data(args.data, model.dims[0], header=args.header)
    try:
        results = log_density_batch(model, X)
    except PDFProjError as exc:
        idx = getattr(exc, "index", None)
        where = f"row {idx}: " if idx is not None else ""
        _err(f"{where}{type(exc).__name__}: {exc}")
        return EXIT_DOMAIN
    header = ["total_log_density"]
    if args.breakdown:
        header += [f"log_j_{k}" for k in range(len(model.layers))] + ["log_g"]
    rows = []
    for r in results:
        row = [r.total_log_density]
        if args.breakdown:
            row += list(r.per_layer_log_j) + [r.terminal_log_g]
        rows.append(row)
    _emit(args.out, header, rows)
    return EXIT_OK


def cmd_sample(args) -> int:
    model = load_model(args.model)
    if args.n < 0:
        raise UsageError("--n must be nonnegative")
    rng = checks.stream(args.seed, "sample")
    cfg = HitAndRunConfig(burn_in=args.burn_in, thin=1)
    try:
        X, Z = generate(model, args.n, rng, cfg)
    except UnsupportedSampling as exc:
        _err(f"UnsupportedSampling: {exc}")
        return EXIT_UNSUPPORTED
    except EmptyFiber as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_DOMAIN
    if args.n:
        err = float(np.max(np.abs(forward(model, X)[-1] - Z)))
        if err > ROUND_TRIP_TOL:
            _err(f"round trip check failed: max |T(x) - z| = {err:.3g}")
            return EXIT_DOMAIN
    _emit(args.out, [f"x{i}" for i in range(model.dims[0])], X.tolist())
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.suite != "all" and args.suite not in checks.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(checks.SUITES + ('all',))}")
    results = checks.run_suite(args.suite, args.seed)
    for c in results:
        print(c.line())
    return EXIT_OK if all(c.passed for c in results) else EXIT_FAILED


def spa_check_rows(n: int, grid: int):
    """Rows (z, exact, spa, rel_error) over ``grid`` points spanning [eps, n - eps]."""
    W = np.ones((n, 1))
    rows = []
    for z in np.linspace(SPA_EPS, n - SPA_EPS, grid):
        exact = irwin_hall_log_pdf(n, float(z))
        approx = spa_log_density(W, [z], PriorKind.UNIFORM01)
        rows.append((float(z), exact, approx, checks.rel_density_error(approx, exact)))
    return rows


def cmd_spa_check(args) -> int:
    if not 1 <= args.n <= IRWIN_HALL_MAX_N:
        raise UsageError(f"--n must be in 1..{IRWIN_HALL_MAX_N}")
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    rows = spa_check_rows(args.n, args.grid)
    errs = [r[3] for r in rows]
    out = [list(r) for r in rows]
    out.append(["max", "", "", max(errs)])
    out.append(["mean", "", "", float(np.mean(errs))])
    _emit(args.out, ["z", "exact_log_pdf", "spa_log_pdf", "rel_error"], out)
    return EXIT_OK


def _trainable_linear(model: Model) -> Linear:
    linear = [layer for layer in model.layers if isinstance(layer, Linear)]
    trainable = [layer for layer in linear if layer.trainable]
    if len(trainable) != 1 or len(model.layers) != 1:
        raise ConfigError("train needs a model whose only layer is a Linear layer marked trainable")
    layer = trainable[0]
    if layer.prior is not PriorKind.UNIFORM01 or model.spec.prior is not PriorKind.UNIFORM01:
        raise ConfigError("train supports the uniform01 prior only")
    return layer


def cmd_train(args) -> int:
    model = load_model(args.model)
    layer = _trainable_linear(model)
    X = read_data(args.data, model.dims[0], header=args.header)
    policy = Fixed(model.terminal) if args.terminal == "fixed" else MomentMatched()
    try:
        cfg = TrainConfig(steps=args.steps, learning_rate=args.lr, fd_step=args.fd_step, seed=args.seed)
        hist = fit_linear(X, layer.weights, policy, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except (NonConvergence, RankDeficientWeights) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_DOMAIN
    out = Path(args.out)
    W = hist.final_weights
    write_csv_atomic(out, [f"w{j}" for j in range(W.shape[1])], W.tolist())
    steps = len(hist.objective_per_step)
    history = [
        [k, hist.objective_per_step[k], hist.grad_norm_per_step[k], hist.learning_rate_per_step[k - 1] if k else ""]
        for k in range(steps)
    ]
    write_csv_atomic(out.with_name(out.stem + ".history.csv"), ["step", "objective", "grad_norm", "learning_rate"], history)
    print(f"initial objective {fmt(hist.objective_per_step[0])}")
    print(f"final objective {fmt(hist.objective_per_step[-1])}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pdfproj", description="Projected densities: evaluate, sample, validate, train.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="log-density of each data row")
    e.add_argument("model")
    e.add_argument("data")
    e.add_argument("--breakdown", action="store_true", help="add per-layer log J and log g columns")
    e.add_argument("--header", action="store_true", help="data file has a header row")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sample", help="cascaded generation from the model")
    s.add_argument("model")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=1000, help="hit-and-run burn-in for linear layers")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("validate", help="run invariant and oracle checks")
    v.add_argument("--suite", default="all")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("spa-check", help="saddle-point vs exact Irwin-Hall density")
    c.add_argument("--n", type=int, default=5)
    c.add_argument("--grid", type=int, default=101)
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_spa_check)

    t = sub.add_parser("train", help="fit the trainable linear layer")
    t.add_argument("model")
    t.add_argument("data")
    t.add_argument("--steps", type=int, default=200)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--fd-step", type=float, default=1e-5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--terminal", choices=("moment", "fixed"), default="moment")
    t.add_argument("--header", action="store_true")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (ConfigError, ModelValidationError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except PDFProjError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
