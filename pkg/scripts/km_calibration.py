"""Compare Kramers-Moyal extrapolation degrees on the OU and multiplicative models."""

import argparse

import numpy as np

from nzlab.langevin import km_estimate, km_theoretical, make_model, simulate


def worst_z(model, ens, order, extrapolation, x_range=None):
    def target(x):
        D1, D2 = km_theoretical(model, x[:, None])
        return {1: D1[:, 0], 2: D2[:, 0, 0]}.get(order, np.zeros_like(x))
    est = km_estimate(ens, order, bins=8, x_range=x_range, extrapolation=extrapolation, target=target)
    return float(np.nanmax(np.abs(est.value - est.target) / est.err))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ou = make_model("ou", theta=1.0, sigma=1.0)
    mu = make_model("multiplicative")
    e_ou = simulate(ou, [0.0], 0.01, 400, args.paths, seed=args.seed, store_paths=True)
    e_ou.stationary_from = 200
    runs = {"ou": (ou, e_ou, None)}
    for dt, every in ((0.005, 1), (0.001, 5)):
        e = simulate(mu, [1.0], dt, int(5.0 / dt), args.paths, seed=args.seed, record_every=every,
                     store_paths=True)
        runs[f"mult dt={dt}"] = (mu, e, (0.5, 2.0))
    print("case,extrapolation,order,max_z")
    for name, (m, e, xr) in runs.items():
        for deg in ("linear", "quadratic", "cubic"):
            for order in (1, 2, 3, 4):
                print(f"{name},{deg},{order},{worst_z(m, e, order, deg, xr):.2f}")


if __name__ == "__main__":
    main()
