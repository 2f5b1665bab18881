"""Saddle-point accuracy on sums of uniforms, measured against the exact Irwin-Hall density.

    python scripts/spa_accuracy.py [--out spa_accuracy.csv]
"""

import argparse

import numpy as np

from pdfproj.checks import rel_density_error, spa_uniform_mode_error, spa_uniform_tail_point
from pdfproj.config import write_csv_atomic
from pdfproj.oracle import irwin_hall_log_pdf
from pdfproj.priors import PriorKind
from pdfproj.spa import spa_log_density


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[2, 3, 5, 10, 15, 20, 25])
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rows = []
    print(f"{'N':>3}  {'mode error':>10}  {'tail s':>8}  {'tail error':>10}")
    for n in args.sizes:
        mode = spa_uniform_mode_error(n)
        try:
            s = spa_uniform_tail_point(n)
        except RuntimeError:  # small N never drops to 1e-6 of the peak inside [1e-3, N/2]
            rows.append([n, mode, "", ""])
            print(f"{n:>3}  {mode:>10.5f}  {'-':>8}  {'-':>10}")
            continue
        tail = rel_density_error(spa_log_density(np.ones((n, 1)), [s], PriorKind.UNIFORM01), irwin_hall_log_pdf(n, s))
        rows.append([n, mode, s, tail])
        print(f"{n:>3}  {mode:>10.5f}  {s:>8.4f}  {tail:>10.5f}")
    if args.out:
        write_csv_atomic(args.out, ["n", "mode_rel_error", "tail_s", "tail_rel_error"], rows)


if __name__ == "__main__":
    main()
