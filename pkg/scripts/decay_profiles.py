"""Decay exponents of the averaged force at rank-2 zeros over short and long ranges."""

import argparse
import json

from nzlab.moduli import build_grid
from nzlab.resolvent import decay_profile

ZEROS = (7.769080111582953, 11.019004015715138, 13.110798328233523,
         15.580525818540795, 17.073670929138900, 19.215398184372098)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r-max", type=float, nargs="+", default=[20.0, 50.0])
    args = ap.parse_args()
    grid = build_grid(4)
    out = {}
    for g in ZEROS:
        out[f"{g:.6f}"] = {f"r_max={r:g}": max(decay_profile(g, grid, r_max=r, points=int(8 * r)).values())
                          for r in args.r_max}
        print(json.dumps({f"{g:.6f}": out[f"{g:.6f}"]}))


if __name__ == "__main__":
    main()
