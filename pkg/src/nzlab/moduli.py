"""Quadrature over the truncated fundamental domain D1 with measure dx dy / y^2.

D1 = {|x| <= 1/2, x^2 + y^2 >= 1, y <= 1}. Each x-panel is mapped to a
rectangle through ``y = y0(x) + (1 - y0(x)) v`` with ``y0 = sqrt(1 - x^2)``,
then a tensor Gauss-Legendre rule is applied. Level ``l >= 1`` splits both
axes into ``2**(l-1)`` panels; level 0 is the one-point companion rule used
only for the error estimate of level 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from .errors import DomainError, EvaluationError
from .lattice import gram_from_tau
from .reduction import pairwise_sum

VOLUME_D1 = math.pi / 3 - 1


@dataclass(frozen=True, eq=False)
class ModuliGrid:
    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray
    level: np.ndarray
    levels: int
    rank: int = 2
    scheme: str = "gl6"
    target_rel_err: float = 1e-8
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def select(self, level: int | None = None):
        level = self.levels if level is None else level
        m = self.level == level
        return self.x[m], self.y[m], self.weight[m]

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.level == self.levels))

    def grams(self, level: int | None = None) -> np.ndarray:
        """Stack of Gram matrices, shape ``(N, n, n)``."""
        x, y, _ = self.select(level)
        if self.rank == 1:
            return np.ones((len(x), 1, 1))
        h = np.empty((len(x), 2, 2))
        h[:, 0, 0] = (x * x + y * y) / y
        h[:, 0, 1] = h[:, 1, 0] = x / y
        h[:, 1, 1] = 1.0 / y
        return h

    def error_level(self) -> int:
        return self.levels - 1

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "weight", "level"])
            for row in zip(self.x, self.y, self.weight, self.level):
                w.writerow([f"{row[0]:.17g}", f"{row[1]:.17g}", f"{row[2]:.17g}", int(row[3])])

    @classmethod
    def load_csv(cls, path, scheme: str = "loaded") -> "ModuliGrid":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        x = np.array([float(r["x"]) for r in rows])
        y = np.array([float(r["y"]) for r in rows])
        w = np.array([float(r["weight"]) for r in rows])
        lv = np.array([int(r["level"]) for r in rows])
        return cls(x, y, w, lv, int(lv.max()) if len(lv) else 0, 2, scheme)


def contains_d1(x, y, tol: float = 1e-12) -> np.ndarray:
    x = np.asarray(x)
    y = np.asarray(y)
    return (np.abs(x) <= 0.5 + tol) & (y <= 1 + tol) & (x * x + y * y >= 1 - tol)


def _level_nodes(level: int, order: int):
    if level == 0:
        panels, g, gw = 1, np.array([0.0]), np.array([2.0])
    else:
        panels = 2 ** (level - 1)
        g, gw = np.polynomial.legendre.leggauss(order)
    # x panels on [-1/2, 1/2], v panels on [0, 1]
    edges = np.linspace(-0.5, 0.5, panels + 1)
    vedges = np.linspace(0.0, 1.0, panels + 1)
    xs, xw = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (a + b) + 0.5 * (b - a) * g)
        xw.append(0.5 * (b - a) * gw)
    vs, vw = [], []
    for a, b in zip(vedges[:-1], vedges[1:]):
        vs.append(0.5 * (a + b) + 0.5 * (b - a) * g)
        vw.append(0.5 * (b - a) * gw)
    xs, xw = np.concatenate(xs), np.concatenate(xw)
    vs, vw = np.concatenate(vs), np.concatenate(vw)
    X, V = np.meshgrid(xs, vs, indexing="ij")
    WX, WV = np.meshgrid(xw, vw, indexing="ij")
    y0 = np.sqrt(1.0 - X * X)
    Y = y0 + (1.0 - y0) * V
    W = WX * WV * (1.0 - y0) / (Y * Y)
    return X.ravel(), Y.ravel(), W.ravel()


def build_grid(levels: int, rule: str = "gl6") -> ModuliGrid:
    """Nested tensor Gauss grids over D1 for levels ``0..levels``.

    ``rule`` is ``"glP"`` with ``P`` the Gauss order per panel.
    """
    if levels < 1:
        raise DomainError("levels must be >= 1")
    if not rule.startswith("gl"):
        raise DomainError(f"unknown quadrature rule {rule!r}")
    order = int(rule[2:] or 3)
    parts = [_level_nodes(l, order) for l in range(levels + 1)]
    x = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    w = np.concatenate([p[2] for p in parts])
    lv = np.concatenate([np.full(len(p[0]), l) for l, p in enumerate(parts)])
    return ModuliGrid(x, y, w, lv, levels, 2, rule)


def rank1_grid() -> ModuliGrid:
    """The rank-1 moduli space: the single lattice Z with weight 1."""
    one = np.array([1.0])
    return ModuliGrid(np.array([0.0]), one, one, np.array([1]), 1, rank=1, scheme="point")


def _weighted_sum(f: Callable, grid: ModuliGrid, level: int, vectorized: bool) -> complex:
    x, y, w = grid.select(level)
    tau = x + 1j * y
    if vectorized:
        vals = np.asarray(f(tau), dtype=complex)
        vals = np.broadcast_to(vals, tau.shape)
    else:
        vals = np.array([complex(f(t)) for t in tau])
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise EvaluationError(f"non-finite integrand at tau={tau[i]!r}", node=(level, i, tau[i]))
    return complex(pairwise_sum(w * vals))


def integrate_moduli(f: Callable, grid: ModuliGrid, vectorized: bool = True) -> Tuple[complex, float]:
    """``sum_i w_i f(tau_i)`` on the finest level, with a two-level error estimate."""
    if grid.rank == 1:
        val = _weighted_sum(f, grid, grid.levels, vectorized)
        return val, 0.0
    val = _weighted_sum(f, grid, grid.levels, vectorized)
    coarse = _weighted_sum(f, grid, grid.levels - 1, vectorized)
    return val, abs(val - coarse)


def volume_m1(grid: ModuliGrid) -> float:
    if grid.rank == 1:
        return 1.0
    return integrate_moduli(lambda t: np.ones(t.shape), grid)[0].real


def node_grams(grid: ModuliGrid, level: int | None = None):
    """Gram matrices as ``GramMatrix`` objects (slow path, for per-node work)."""
    x, y, _ = grid.select(level)
    return [gram_from_tau(complex(a, b)) for a, b in zip(x, y)]
