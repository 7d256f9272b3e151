"""Scan the rank-2 critical-line function on a gamma window and compare routes."""

import argparse
import warnings

from nzlab.moduli import build_grid
from nzlab.resolvent import averaged_phi_eval
from nzlab.zeta import find_zeros


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=0.0)
    ap.add_argument("--hi", type=float, default=20.0)
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()
    grid = build_grid(args.levels)
    direct = find_zeros(2, args.lo, args.hi, grid=grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        phi = find_zeros(2, args.lo, args.hi, grid=grid, route="phi",
                         evaluator=lambda g: averaged_phi_eval(g, grid))
    print("route,gamma,tol")
    for r in direct + phi:
        print(f"{r.route},{r.gamma:.12f},{r.tol:.2e}")
    for w in caught:
        print("# warning:", w.message)


if __name__ == "__main__":
    main()
