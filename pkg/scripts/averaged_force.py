"""Node-wise OU covariance check weighted over the moduli grid."""

import argparse
import json

from nzlab.langevin import averaged_force_report
from nzlab.moduli import build_grid, rank1_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rank", type=int, default=2, choices=(1, 2))
    ap.add_argument("--level", type=int, default=1)
    ap.add_argument("--paths", type=int, default=4000)
    args = ap.parse_args()
    grid = rank1_grid() if args.rank == 1 else build_grid(args.level)
    print(json.dumps(averaged_force_report(grid, paths=args.paths), indent=2))


if __name__ == "__main__":
    main()
