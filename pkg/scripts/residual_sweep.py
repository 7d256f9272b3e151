"""Armitage ODE residual on a (Y, gamma) grid, written as CSV."""

import argparse

import numpy as np

from nzlab.fokker_planck import residual_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="armitage_sweep.csv")
    ap.add_argument("--gamma-max", type=float, default=30.0)
    args = ap.parse_args()
    Ys = [0.5, 1.5, 2.3, 3.7]
    gammas = np.linspace(1.0, args.gamma_max, 59)
    rows = residual_sweep(Ys, gammas, path=args.out)
    print(f"{len(rows)} rows, max residual {max(r[2] for r in rows):.3e} -> {args.out}")


if __name__ == "__main__":
    main()
