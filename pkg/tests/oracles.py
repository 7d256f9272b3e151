"""Independent reference implementations used by the tests.

Nothing here imports the package's numerical code: the oracles are built from
mpmath, sympy or brute-force sums only.
"""

from __future__ import annotations

import itertools
import math

import mpmath as mp
import numpy as np

# first Riemann zeta ordinates, from mpmath.zetazero
RIEMANN_ZEROS = (14.134725141734695, 21.022039638771556, 25.01085758014569)

ZETA2_RESIDUE = math.pi / 3 - 1


def xi(s, dps: int = 30):
    """Completed Riemann zeta ``pi^{-s/2} Gamma(s/2) zeta(s)``."""
    with mp.workdps(dps):
        s = mp.mpc(s)
        return complex(mp.pi ** (-s / 2) * mp.gamma(s / 2) * mp.zeta(s))


def zeta2_closed_form(s, dps: int = 30):
    """Rank-2 completed zeta via ``2 xi(2s)/(s-1) - 2 xi(2s-1)/s``."""
    with mp.workdps(dps):
        s = mp.mpc(s)
        x = lambda z: mp.pi ** (-z / 2) * mp.gamma(z / 2) * mp.zeta(z)
        return complex(2 * x(2 * s) / (s - 1) - 2 * x(2 * s - 1) / s)


def zeta2_zeros(gmax: float = 20.0, step: float = 0.05, dps: int = 40):
    """Critical-line zeros of the rank-2 closed form by sign change and root polish."""
    with mp.workdps(dps):
        def f(g):
            s = mp.mpf(1) / 2 + 1j * mp.mpf(g)
            v = 2 * _x(2 * s) / (s - 1) - 2 * _x(2 * s - 1) / s
            return mp.re(v) * mp.exp(mp.pi * g / 2)
        out = []
        gs = np.arange(step, gmax + 1e-9, step)
        vals = [f(g) for g in gs]
        for a, b, va, vb in zip(gs[:-1], gs[1:], vals[:-1], vals[1:]):
            if va * vb < 0:
                out.append(float(mp.findroot(f, (a, b), solver="anderson")))
        return out


def _x(z):
    return mp.pi ** (-z / 2) * mp.gamma(z / 2) * mp.zeta(z)


def theta_bruteforce(h: np.ndarray, x, t: float, radius: int = 12) -> complex:
    """Plain box sum of ``exp(-pi t lam.h.lam + 2 pi i lam.x)``."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    x = np.asarray(x, dtype=float)
    total = 0j
    for lam in itertools.product(range(-radius, radius + 1), repeat=n):
        lam = np.array(lam)
        total += np.exp(-math.pi * t * lam @ h @ lam + 2j * math.pi * lam @ x)
    return complex(total)


def theta1_jacobi(x: float, t: float) -> complex:
    """Rank-1 theta via mpmath's Jacobi theta_3 with nome ``e^{-pi t}``."""
    return complex(mp.jtheta(3, mp.pi * x, mp.exp(-mp.pi * t)))


def ou_stationary_variance(theta: float, sigma: float) -> float:
    """Variance for ``dx = -theta x dt + sigma Gamma`` with ``<Gamma Gamma> = 2 delta``."""
    return sigma * sigma / theta
