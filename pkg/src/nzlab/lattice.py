"""Lattice-level arithmetic on the integer frame with a Gram metric."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np

from .errors import DomainError, NZLError, ResourceError

MAX_CANDIDATES = 10**6


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Positive-definite symmetric metric ``h^{ab}`` on Z^n."""

    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float, copy=True)
        if h.ndim == 0:
            h = h.reshape(1, 1)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DomainError(f"Gram matrix must be square, got shape {h.shape}")
        if not np.allclose(h, h.T, rtol=1e-13, atol=1e-14):
            raise DomainError("Gram matrix must be symmetric")
        h = 0.5 * (h + h.T)
        if np.linalg.eigvalsh(h).min() <= 0:
            raise DomainError("Gram matrix must be positive definite")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @cached_property
    def det(self) -> float:
        return float(np.linalg.det(self.h))

    @cached_property
    def inv(self) -> np.ndarray:
        return np.linalg.inv(self.h)

    @property
    def covolume(self) -> float:
        return math.sqrt(self.det)

    def __array__(self, dtype=None, copy=None):
        return self.h if dtype is None else self.h.astype(dtype)

    def __repr__(self):
        return f"GramMatrix({self.h.tolist()!r})"


def as_gram(H) -> GramMatrix:
    return H if isinstance(H, GramMatrix) else GramMatrix(np.asarray(H, dtype=float))


@dataclass(frozen=True)
class Rank2Tau:
    """Point ``tau = x + i y`` of the upper half plane."""

    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise DomainError(f"tau must have positive imaginary part, got y={self.y}")

    @property
    def tau(self) -> complex:
        return complex(self.x, self.y)

    def in_D(self) -> bool:
        r2 = self.x * self.x + self.y * self.y
        if r2 < 1.0 or not (-0.5 <= self.x < 0.5):
            return False
        if r2 == 1.0 and self.x > 0:
            return False
        return True

    def in_D1(self) -> bool:
        return self.in_D() and self.y <= 1.0


def gram_from_tau(tau) -> GramMatrix:
    if isinstance(tau, complex):
        tau = Rank2Tau(tau.real, tau.imag)
    if not isinstance(tau, Rank2Tau):
        tau = Rank2Tau(*tau)
    x, y = tau.x, tau.y
    return GramMatrix(np.array([[x * x + y * y, x], [x, 1.0]]) / y)


def dual_gram(H) -> GramMatrix:
    H = as_gram(H)
    if H.n == 2:
        # closed form keeps det exactly 1 for moduli input
        (a, b), (_, d) = H.h
        return GramMatrix(np.array([[d, -b], [-b, a]]) / H.det)
    try:
        return GramMatrix(np.linalg.inv(H.h))
    except np.linalg.LinAlgError as exc:
        raise NZLError(f"singular Gram matrix: {exc}") from exc


def norm_sq(H, lam) -> float:
    H = as_gram(H)
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != H.n:
        raise DomainError(f"lattice point of length {lam.shape[-1]} for rank {H.n}")
    return np.einsum("...a,ab,...b->...", lam, H.h, lam)


def box_radii(H, bound: float) -> np.ndarray:
    """Per-coordinate bounds with ``lam^T H lam <= bound => |lam_i| <= r_i``."""
    H = as_gram(H)
    return np.floor(np.sqrt(bound * np.diag(H.inv)) + 1e-12).astype(int)


def enumerate_points(H, bound: float, include_zero: bool = False,
                     cap: int = MAX_CANDIDATES) -> Tuple[np.ndarray, np.ndarray]:
    """All integer points with norm <= bound, sorted by norm then lexicographically."""
    H = as_gram(H)
    if bound < 0:
        raise DomainError("bound must be non-negative")
    radii = box_radii(H, bound)
    count = int(np.prod(2 * radii.astype(np.int64) + 1))
    if count > cap:
        raise ResourceError(f"enumeration needs {count} candidates (cap {cap})")
    axes = [np.arange(-r, r + 1) for r in radii]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, H.n)
    q = norm_sq(H, pts)
    keep = q <= bound * (1 + 1e-14)
    if not include_zero:
        keep &= np.any(pts != 0, axis=1)
    pts, q = pts[keep], q[keep]
    order = np.lexsort(tuple(pts[:, i] for i in reversed(range(H.n))) + (q,))
    return pts[order], q[order]


def shortest_vectors(H, bound: float) -> List[Tuple[Tuple[int, ...], float]]:
    if not bound > 0:
        raise DomainError("bound must be positive")
    pts, q = enumerate_points(H, bound)
    return [(tuple(int(v) for v in p), float(v)) for p, v in zip(pts, q)]


def min_norm(H) -> float:
    H = as_gram(H)
    _, q = enumerate_points(H, float(np.max(np.diag(H.h))))
    return float(q[0])


def is_semistable(H) -> bool:
    """Semi-stability test for rank <= 2.

    In rank 2 the only nontrivial sublattices are rank-1 ones, so the test
    is ``vol(L1)^2 >= vol(L)`` for the shortest vector.
    """
    H = as_gram(H)
    if H.n == 1:
        return True
    if H.n > 2:
        raise NotImplementedError("semi-stability is only implemented for rank <= 2")
    return min_norm(H) >= H.covolume * (1 - 1e-12)
