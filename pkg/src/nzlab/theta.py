"""Theta series of a lattice and a closed algebra of Gaussian-exponential terms.

A lattice term is ``P(X, u) * exp(-pi u^2 |lam|^2) * exp(2 pi i u <lam, X>)``
with ``u = exp(T/2)``; a Gaussian term is ``P(X) * exp(-pi |X|^2)``. Both
families are closed under X-derivatives, so the operator
``Omega = (1/4pi) sum h^{ab} d_a d_b + (1/2) <X, d/dX>`` acts exactly on the
polynomial prefactors. Coefficients are stored per lattice point as arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .lattice import GramMatrix, as_gram, enumerate_points, min_norm
from .polyalg import Poly

TWO_PI_I = 2j * math.pi


# -- truncation ---------------------------------------------------------------

def _shell_count(H: GramMatrix, r):
    """Upper bound for #{lam : |lam|^2 <= r} from the enumeration box."""
    return np.prod(2.0 * np.sqrt(np.multiply.outer(r, np.diag(H.inv))) + 1.0, axis=-1)


def tail_bound(H, t: float, radius: float, degree: int = 0) -> float:
    """Bound on ``sum_{|lam|^2 > radius} (1 + pi t |lam|^2)^degree e^{-pi t |lam|^2}``.

    Points with norm in ``(k, k+1]`` are at most ``N(k+1)``, each contributing
    at most the summand value at norm ``k``.
    """
    H = as_gram(H)
    k0 = math.floor(radius)
    terms_needed = int(max(50, 800.0 / (math.pi * t))) + 1
    k = np.arange(k0, k0 + terms_needed, dtype=float)
    k = np.maximum(k, radius)
    poly = (1.0 + math.pi * t * (k + 1)) ** degree
    return float(np.sum(_shell_count(H, k + 1) * poly * np.exp(-math.pi * t * k)))


@dataclass(frozen=True)
class TruncationSpec:
    eps: float
    radius: float


def truncation(H, t: float, eps: float, degree: int = 0) -> TruncationSpec:
    """Smallest radius (on a 1/4 grid) whose tail bound is below ``eps``."""
    H = as_gram(H)
    if not t > 0:
        raise DomainError("t must be positive")
    if not eps > 0:
        raise DomainError("eps must be positive")
    r = max(min_norm(H), 0.25)
    while tail_bound(H, t, r, degree) > eps:
        r += 0.25
    return TruncationSpec(eps, r)


# -- term algebra -------------------------------------------------------------

class TermSeries:
    """Sum of a lattice component and a Gaussian component in the term algebra.

    Polynomials use variables ``(X_1, ..., X_n, u)``.
    """

    def __init__(self, H, lam: Optional[np.ndarray] = None, lattice: Optional[Poly] = None,
                 gauss: Optional[Poly] = None):
        self.H = as_gram(H)
        self.n = self.H.n
        nv = self.n + 1
        self.lam = np.zeros((0, self.n), dtype=int) if lam is None else np.asarray(lam)
        self.q = np.einsum("ka,ab,kb->k", self.lam, self.H.h, self.lam)
        self.lattice = lattice if lattice is not None else Poly(nv)
        self.gauss = gauss if gauss is not None else Poly(nv)

    # constructors
    @classmethod
    def theta(cls, H, eps: float = 1e-16, include_zero: bool = True, t_min: float = 1.0,
              degree: int = 8) -> "TermSeries":
        """The big theta series ``Theta(X, T)`` truncated for all ``e^T >= t_min``."""
        H = as_gram(H)
        spec = truncation(H, t_min, eps, degree)
        lam, _ = enumerate_points(H, spec.radius, include_zero=include_zero)
        ones = np.ones(len(lam), dtype=complex)
        return cls(H, lam, Poly.constant(H.n + 1, ones))

    @classmethod
    def gaussian(cls, H, c: complex = 1.0) -> "TermSeries":
        """``c * exp(-pi |X|^2)`` (Euclidean norm of X)."""
        H = as_gram(H)
        return cls(H, gauss=Poly.constant(H.n + 1, complex(c)))

    # linear structure
    def _like(self, lattice: Poly, gauss: Poly) -> "TermSeries":
        out = TermSeries.__new__(TermSeries)
        out.H, out.n, out.lam, out.q = self.H, self.n, self.lam, self.q
        out.lattice, out.gauss = lattice, gauss
        return out

    def _check(self, other: "TermSeries"):
        if other.lam is not self.lam and len(other.lattice) and len(self.lattice):
            if other.lam.shape != self.lam.shape or np.any(other.lam != self.lam):
                raise ValueError("lattice components use different point sets")

    def __add__(self, other):
        if not isinstance(other, TermSeries):
            return NotImplemented
        self._check(other)
        base = self if len(self.lattice) else other
        out = base._like(self.lattice + other.lattice, self.gauss + other.gauss)
        return out

    def __sub__(self, other):
        return self + other * (-1.0)

    def __mul__(self, c):
        return self._like(self.lattice.scale(c), self.gauss.scale(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    # differential operators
    def d(self, a: int) -> "TermSeries":
        """Derivative along ``X_a``."""
        n = self.n
        lat = self.lattice.diff(a) + self.lattice.mul_var(n, TWO_PI_I * self.lam[:, a])
        gau = self.gauss.diff(a) + self.gauss.mul_var(a, -2.0 * math.pi)
        return self._like(lat, gau)

    def laplacian(self) -> "TermSeries":
        """``sum h^{ab} d_a d_b`` with the metric itself (the dual Laplacian)."""
        h = self.H.h
        first = [self.d(a) for a in range(self.n)]
        out = self * 0.0
        for a in range(self.n):
            for b in range(self.n):
                if h[a, b] != 0.0:
                    out = out + first[a].d(b) * h[a, b]
        return out

    def euler(self) -> "TermSeries":
        """``<X, d/dX>``."""
        out = self * 0.0
        for a in range(self.n):
            da = self.d(a)
            out = out + da._like(da.lattice.mul_var(a), da.gauss.mul_var(a))
        return out

    def omega(self) -> "TermSeries":
        return self.laplacian() * (1.0 / (4.0 * math.pi)) + self.euler() * 0.5

    def shifted_omega(self) -> "TermSeries":
        """``(2 Omega + n/2)`` applied to the series."""
        return self.omega() * 2.0 + self * (self.n / 2.0)

    def resolvent_operator(self, gamma: float) -> "TermSeries":
        """``((2 Omega + n/2)^2 + (n gamma)^2)`` applied to the series."""
        a1 = self.shifted_omega()
        return a1.shifted_omega() + self * ((self.n * gamma) ** 2)

    def dT(self) -> "TermSeries":
        """Time derivative with ``u = e^{T/2}``; Gaussian terms are T-independent."""
        n = self.n
        lat = self.lattice.diff(n).mul_var(n, 0.5)
        lat = lat + self.lattice.shift(tuple([0] * n + [2]), -math.pi * self.q)
        for a in range(n):
            e = [0] * (n + 1)
            e[a] = 1
            e[n] = 1
            lat = lat + self.lattice.shift(tuple(e), 1j * math.pi * self.lam[:, a])
        return self._like(lat, Poly(n + 1))

    # evaluation
    def evaluate(self, X, u=1.0):
        """Value at fiber point ``X`` for scale(s) ``u = e^{T/2}``; shape of ``u``."""
        X = np.asarray(X, dtype=float).reshape(self.n)
        u = np.asarray(u, dtype=float)
        uu = np.atleast_1d(u).ravel()
        total = np.zeros(uu.shape, dtype=complex)
        if len(self.lattice) and len(self.lam):
            phase = self.lam @ X
            E = np.exp(np.outer(-math.pi * self.q, uu * uu) + np.outer(TWO_PI_I * phase, uu))
            for e, c in self.lattice.items():
                xm = np.prod(X ** np.asarray(e[:self.n])) if any(e[:self.n]) else 1.0
                c = np.broadcast_to(np.asarray(c, dtype=complex), (len(self.lam),))
                total += xm * (uu ** e[self.n]) * (c @ E)
        if len(self.gauss):
            g = math.exp(-math.pi * float(X @ X))
            gv = 0.0
            for e, c in self.gauss.items():
                gv += complex(c) * np.prod(X ** np.asarray(e[:self.n]))
            total += gv * g
        return total.reshape(u.shape) if u.ndim else complex(total[0])


# -- theta functions ----------------------------------------------------------

def _points_for(H, t, eps):
    spec = truncation(H, t, eps)
    return enumerate_points(H, spec.radius, include_zero=True)


def theta(H, x, t: float, eps: float = 1e-15) -> complex:
    """``sum_lam exp(-pi t |lam|^2) exp(2 pi i <lam, x>)`` to absolute accuracy eps."""
    H = as_gram(H)
    if not t > 0:
        raise DomainError("theta requires t > 0")
    lam, q = _points_for(H, t, eps)
    x = np.asarray(x, dtype=float).reshape(H.n)
    w = np.exp(-math.pi * t * q)
    return complex(np.sum(w * np.exp(TWO_PI_I * (lam @ x))))


def big_theta(H, X, T: float, eps: float = 1e-15) -> complex:
    X = np.asarray(X, dtype=float)
    return theta(H, X * math.exp(T / 2.0), math.exp(T), eps)


def heat_residual(H, x, t: float, fd_step: float | None = 1e-4, eps: float = 1e-15) -> float:
    """``|(1/4pi) Lap theta - d theta/dt|`` with an exact termwise Laplacian.

    ``fd_step=None`` differentiates in t termwise too.
    """
    H = as_gram(H)
    if fd_step is not None and not (t > fd_step > 0):
        raise DomainError("need t > fd_step > 0")
    t_lo = t - fd_step if fd_step else t
    lam, q = _points_for(H, t_lo, eps)
    x = np.asarray(x, dtype=float).reshape(H.n)
    phase = np.exp(TWO_PI_I * (lam @ x))
    # Laplacian from the second-derivative tensor, independent of |lam|^2
    hess = np.einsum("ka,kb,ab->k", TWO_PI_I * lam, TWO_PI_I * lam, H.h)
    lap = np.sum(hess / (4.0 * math.pi) * np.exp(-math.pi * t * q) * phase)
    if fd_step is None:
        dt = np.sum(-math.pi * q * np.exp(-math.pi * t * q) * phase)
    else:
        plus = np.sum(np.exp(-math.pi * (t + fd_step) * q) * phase)
        minus = np.sum(np.exp(-math.pi * (t - fd_step) * q) * phase)
        dt = (plus - minus) / (2.0 * fd_step)
    return float(abs(lap - dt))


def big_theta_pde_residual(H, X, T: float, eps: float = 1e-16, time_derivative: str = "exact",
                           fd_step: float = 1e-4) -> float:
    """``|dTheta/dT - Omega Theta|`` at ``(X, T)``."""
    H = as_gram(H)
    S = TermSeries.theta(H, eps=eps, t_min=math.exp(T - (fd_step if time_derivative == "fd" else 0.0)))
    u = math.exp(T / 2.0)
    om = S.omega().evaluate(X, u)
    if time_derivative == "exact":
        dt = S.dT().evaluate(X, u)
    elif time_derivative == "fd":
        dt = (S.evaluate(X, math.exp((T + fd_step) / 2)) - S.evaluate(X, math.exp((T - fd_step) / 2))) / (2 * fd_step)
    else:
        raise ValueError(f"unknown time_derivative {time_derivative!r}")
    return float(abs(dt - om))
