"""Non-abelian zeta functions of Q in ranks 1 and 2, and critical-line zeros.

The evaluation uses the representation, entire apart from its poles,

    zeta_n(s) = vol / (s (s - 1))
              + (n/2) int_1^inf (t^{n s/2} + t^{n (1-s)/2}) J(t) dt / t,

    J(t) = int_{M[1]} (theta_L(t) - 1) dmu(L),

where ``J`` is tabulated once per grid at the nodes of a fixed quadrature in
``T = log t``.
"""

from __future__ import annotations

import csv
import math
import os
import time
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import mpmath
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_fn, gammaincc

from .errors import ConsistencyError, PoleError
from .lattice import GramMatrix, enumerate_points
from .moduli import ModuliGrid, build_grid, rank1_grid
from .reduction import ordered_map, pairwise_sum
from .theta import truncation

T_MAX = 16.0
T_PANELS = 24
T_ORDER = 16
ROUND = 64 * np.finfo(float).eps


class InconclusiveScanWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ZetaValue:
    s: complex
    value: complex
    err: float


@dataclass(frozen=True)
class ZeroRecord:
    gamma: float
    bracket: Tuple[float, float]
    tol: float
    route: str = "direct"
    n: int = 1


# -- reference --------------------------------------------------------------

def zeta_rank1_reference(s, dps: int = 30) -> complex:
    """Completed Riemann zeta ``pi^{-s/2} Gamma(s/2) zeta(s)`` in extended precision."""
    s = complex(s)
    if s == 0 or s == 1:
        raise PoleError(f"completed zeta has a pole at s={s}")
    with mpmath.workdps(dps):
        ms = mpmath.mpc(s.real, s.imag)
        return complex(mpmath.pi ** (-ms / 2) * mpmath.gamma(ms / 2) * mpmath.zeta(ms))


# -- J profile --------------------------------------------------------------

def _t_rule(t_max: float, panels: int, order: int):
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, math.log(t_max), panels + 1)
    T = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * g for a, b in zip(edges[:-1], edges[1:])])
    W = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return T, W


@dataclass(eq=False)
class JProfile:
    """Tabulated ``J(t) = int (theta_L(t) - 1) dmu`` at the T-quadrature nodes.

    ``values[level]`` holds J at ``T_nodes`` (fine rule) and ``values_coarse``
    at the coarse rule; ``volume[level]`` the quadrature volume.
    """

    n: int
    T_nodes: np.ndarray
    T_weights: np.ndarray
    T_coarse: np.ndarray
    W_coarse: np.ndarray
    values: Dict[int, np.ndarray]
    values_coarse: Dict[int, np.ndarray]
    volume: Dict[int, float]
    level: int
    t_max: float
    theta_eps: float
    C: float = 0.0
    m: float = 1.0
    _spline: Optional[CubicSpline] = field(default=None, repr=False)

    def __post_init__(self):
        J = self.values[self.level]
        t = np.exp(self.T_nodes)
        self._spline = CubicSpline(self.T_nodes, np.log(J))
        sel = t >= 2.0
        # J ~ C exp(-pi m t): fit in the decaying regime
        slope, icpt = np.polyfit(t[sel], np.log(J[sel]), 1)
        self.m = -slope / math.pi
        # inflate C so the model bounds every tabulated value
        self.C = float(np.max(J * np.exp(math.pi * self.m * t)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        T = np.log(t)
        inside = np.exp(self._spline(np.clip(T, self.T_nodes[0], self.T_nodes[-1])))
        tail = self.C * np.exp(-math.pi * self.m * t)
        return np.where(t <= math.exp(self.T_nodes[-1]), inside, tail)


def _theta_minus_one_average(lam_q: np.ndarray, w: np.ndarray, t_nodes: np.ndarray) -> np.ndarray:
    """``sum_i w_i sum_k exp(-pi t q_ik)`` for each t, pairwise over nodes."""
    def block(ts):
        return np.stack([pairwise_sum(w * np.exp(-math.pi * t * lam_q).sum(axis=1)) for t in ts])
    parts = ordered_map(block, np.array_split(t_nodes, max(1, min(8, len(t_nodes)))))
    return np.concatenate(parts)


def common_lattice_box(grid: ModuliGrid, level: int, eps: float, degree: int = 0):
    """One symmetric box of nonzero lattice points valid for every node of ``level``.

    Returns ``(lam, q)`` with ``q[i, k]`` the norm of ``lam[k]`` at node ``i``.
    """
    h = grid.grams(level)
    # truncation radius valid for every node (t >= 1)
    radius = 0.0
    inv_diag = 0.0
    inv = np.max(np.diagonal(np.linalg.inv(h), axis1=1, axis2=2), axis=1)
    inv_diag = float(inv.max())
    # the tail bound grows with the inverse diagonal; include the worst node
    sample = sorted(set(range(0, len(h), max(1, len(h) // 64))) | {int(np.argmax(inv))})
    for i in sample:
        spec = truncation(GramMatrix(h[i]), 1.0, eps, degree)
        radius = max(radius, spec.radius)
    r = int(math.floor(math.sqrt(radius * inv_diag))) + 1
    axes = [np.arange(-r, r + 1)] * grid.rank
    lam = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.rank)
    lam = lam[np.any(lam != 0, axis=1)]
    q = np.einsum("ka,nab,kb->nk", lam, h, lam)
    return lam, q


_PROFILE_CACHE: Dict[Tuple[int, int], JProfile] = {}


def j_profile(grid: ModuliGrid, eps: float = 1e-17, t_max: float = T_MAX) -> JProfile:
    key = (id(grid), grid.rank)
    prof = _PROFILE_CACHE.get(key)
    if prof is not None and prof.theta_eps <= eps and prof.t_max == t_max:
        return prof
    T, W = _t_rule(t_max, T_PANELS, T_ORDER)
    Tc, Wc = _t_rule(t_max, T_PANELS // 2, T_ORDER)
    levels = [grid.levels] if grid.rank == 1 else [grid.levels, grid.levels - 1]
    values, values_c, vol = {}, {}, {}
    for lv in levels:
        _, _, w = grid.select(lv)
        _, q = common_lattice_box(grid, lv, eps)
        values[lv] = _theta_minus_one_average(q, w, np.exp(T))
        values_c[lv] = _theta_minus_one_average(q, w, np.exp(Tc))
        vol[lv] = 1.0 if grid.rank == 1 else float(pairwise_sum(w))
    prof = JProfile(grid.rank, T, W, Tc, Wc, values, values_c, vol, grid.levels, t_max, eps)
    _PROFILE_CACHE[key] = prof
    grid._cache["jprofile"] = prof
    return prof


# -- evaluation --------------------------------------------------------------

_DEFAULT_GRIDS: Dict[int, ModuliGrid] = {}


def default_grid(n: int) -> ModuliGrid:
    if n not in _DEFAULT_GRIDS:
        _DEFAULT_GRIDS[n] = rank1_grid() if n == 1 else build_grid(4, "gl6")
    return _DEFAULT_GRIDS[n]


def _integral(n: int, s: complex, T: np.ndarray, W: np.ndarray, J: np.ndarray) -> Tuple[complex, float]:
    k1 = np.exp((n * s / 2.0) * T)
    k2 = np.exp((n * (1.0 - s) / 2.0) * T)
    terms = W * (k1 + k2) * J
    return complex((n / 2.0) * pairwise_sum(terms)), float((n / 2.0) * np.sum(np.abs(terms)))


def _tail(prof: JProfile, n: int, s: complex) -> float:
    p = n * max(s.real, 1.0 - s.real) / 2.0
    x = math.pi * prof.m * prof.t_max
    if p > 0:
        upper = gamma_fn(p) * gammaincc(p, x)
    else:
        upper = prof.t_max ** (p - 1) * math.exp(-x) / (math.pi * prof.m) * (math.pi * prof.m) ** p
    return float(n * prof.C * (math.pi * prof.m) ** (-p) * upper)


def zeta_integral(n: int, s, grid: ModuliGrid | None = None, eps: float = 1e-17) -> ZetaValue:
    s = complex(s)
    if s == 0 or s == 1:
        raise PoleError(f"zeta_{n} has a pole at s={s}")
    if n not in (1, 2):
        raise ValueError("only ranks 1 and 2 are supported")
    grid = default_grid(n) if grid is None else grid
    if grid.rank != n:
        raise ValueError(f"grid of rank {grid.rank} used for n={n}")
    prof = j_profile(grid, eps)
    pole = 1.0 / (s * (s - 1.0))
    L = prof.level
    main, scale = _integral(n, s, prof.T_nodes, prof.T_weights, prof.values[L])
    value = prof.volume[L] * pole + main
    coarse_t, _ = _integral(n, s, prof.T_coarse, prof.W_coarse, prof.values_coarse[L])
    err = abs(main - coarse_t)
    if n > 1:
        main_c, _ = _integral(n, s, prof.T_nodes, prof.T_weights, prof.values[L - 1])
        err += abs(value - (prof.volume[L - 1] * pole + main_c))
    err += _tail(prof, n, s)
    err += eps * prof.volume[L] * math.exp(n * max(abs(s.real), abs(1 - s.real)) / 2 * prof.T_nodes[-1])
    err += ROUND * (abs(prof.volume[L] * pole) + scale)
    return ZetaValue(s, value, err)


def critical_line_eval(n: int, gamma: float, grid: ModuliGrid | None = None) -> Tuple[float, float]:
    zv = zeta_integral(n, complex(0.5, gamma), grid)
    if abs(zv.value.imag) > 10 * zv.err:
        raise ConsistencyError(f"|Im zeta_{n}(1/2+{gamma}i)| = {abs(zv.value.imag):.3e} exceeds 10*err")
    return zv.value.real, zv.err


def critical_line_value(n: int, gamma: float, grid: ModuliGrid | None = None) -> float:
    return critical_line_eval(n, gamma, grid)[0]


# -- zero finding ------------------------------------------------------------

def _bisect(f, lo: float, hi: float, flo: float, tol: float) -> Tuple[float, float]:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid, mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo, hi


def scan_sign_changes(f, gmin: float, gmax: float, step: float):
    """Sample ``f`` on a uniform grid; returns nodes, values, errors."""
    k = max(1, int(math.ceil((gmax - gmin) / step - 1e-9)))
    g = np.linspace(gmin, gmax, k + 1)
    vals = [f(x) for x in g]
    v = np.array([a for a, _ in vals])
    e = np.array([b for _, b in vals])
    return g, v, e


def find_zeros(n: int, gamma_min: float, gamma_max: float, step: float = 0.1, tol: float = 1e-8,
               grid: ModuliGrid | None = None, route: str = "direct", evaluator=None) -> List[ZeroRecord]:
    """Sign-change zeros of the real critical-line restriction on ``[gamma_min, gamma_max]``.

    ``evaluator(gamma) -> (value, err)`` overrides the direct zeta route.
    """
    grid = default_grid(n) if grid is None else grid
    f = evaluator or (lambda g: critical_line_eval(n, g, grid))
    g, v, e = scan_sign_changes(f, gamma_min, gamma_max, step)
    records = []
    suspects = []
    for i in range(len(g) - 1):
        a, b = v[i], v[i + 1]
        if a == 0.0:
            records.append(ZeroRecord(float(g[i]), (float(g[i]), float(g[i])), tol, route, n))
            continue
        if (a < 0) != (b < 0) and b != 0.0:
            lo, hi = _bisect(lambda x: f(x)[0], float(g[i]), float(g[i + 1]), a, tol)
            # value noise over the local slope bounds the ordinate accuracy
            slope = abs(b - a) / (g[i + 1] - g[i])
            eff = max(tol, 0.5 * (hi - lo), 3.0 * max(e[i], e[i + 1]) / slope)
            records.append(ZeroRecord(0.5 * (lo + hi), (lo, hi), float(eff), route, n))
        elif max(abs(a), abs(b)) <= 3 * max(e[i], e[i + 1]):
            suspects.append((float(g[i]), float(g[i + 1])))
    # local minima of |v| without a sign change may hide a tangency or a missed pair
    for i in range(1, len(g) - 1):
        if abs(v[i]) < abs(v[i - 1]) and abs(v[i]) < abs(v[i + 1]):
            if (v[i - 1] < 0) == (v[i] < 0) == (v[i + 1] < 0):
                slope = max(abs(v[i + 1] - v[i]), abs(v[i] - v[i - 1]))
                if abs(v[i]) < 0.25 * slope:
                    suspects.append((float(g[i - 1]), float(g[i + 1])))
    if suspects:
        warnings.warn(f"inconclusive scan intervals: {suspects}", InconclusiveScanWarning, stacklevel=2)
    return records


# -- zero cache --------------------------------------------------------------

CACHE_FIELDS = ["n", "gamma", "tol", "route", "timestamp"]


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch is not None else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def read_zero_cache(path) -> List[dict]:
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["n"] = int(r["n"])
        r["gamma"] = float(r["gamma"])
        r["tol"] = float(r["tol"])
    return rows


def merge_zero_records(path, records: List[ZeroRecord]) -> List[dict]:
    """Merge records into the CSV cache; an existing (n, route) entry within
    ``max(tol)`` of a new ordinate is kept unchanged."""
    rows = read_zero_cache(path)
    stamp = _timestamp()
    for rec in records:
        dup = any(r["n"] == rec.n and r["route"] == rec.route
                  and abs(r["gamma"] - rec.gamma) <= max(r["tol"], rec.tol, 1e-9)
                  for r in rows)
        if not dup:
            rows.append({"n": rec.n, "gamma": rec.gamma, "tol": rec.tol, "route": rec.route,
                         "timestamp": stamp})
    rows.sort(key=lambda r: (r["n"], r["route"], r["gamma"]))
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CACHE_FIELDS)
        for r in rows:
            w.writerow([r["n"], f"{r['gamma']:.17g}", f"{r['tol']:.17g}", r["route"], r["timestamp"]])
    os.replace(tmp, path)
    return rows
