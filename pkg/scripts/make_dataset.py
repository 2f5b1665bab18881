"""Write the concentrated-coordinate training set used by the trainer demo as CSV."""

import argparse

from pdfproj.config import write_csv_atomic
from pdfproj.trainer import informative_dataset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    write_csv_atomic(args.out, None, informative_dataset(args.n, args.seed).tolist())


if __name__ == "__main__":
    main()
