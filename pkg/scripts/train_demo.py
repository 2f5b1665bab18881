"""Fit one linear feature to data that are uniform in x1 and tightly concentrated in x2.

Prints the objective along a sweep of fixed unit directions and then the
direction found by gradient ascent from a random start.

    python scripts/train_demo.py [--steps 200] [--seed 0]
"""

import argparse
import math

import numpy as np

from pdfproj.trainer import TrainConfig, direction_sweep, fit_linear, informative_dataset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=200)
    args = ap.parse_args()

    X = informative_dataset(args.n, args.seed)
    angles = np.arange(0, 181, 15)
    for a, v in zip(angles, direction_sweep(X, angles)):
        print(f"direction {a:>3} deg  objective {v:+.4f}")

    hist = fit_linear(X, None, cfg=TrainConfig(steps=args.steps, seed=args.seed))
    w = hist.final_weights[:, 0]
    print(f"objective {hist.objective_per_step[0]:+.4f} -> {hist.objective_per_step[-1]:+.4f}")
    print(f"final weights {w}, direction {math.degrees(math.atan2(w[1], w[0])) % 180:.2f} deg")


if __name__ == "__main__":
    main()
