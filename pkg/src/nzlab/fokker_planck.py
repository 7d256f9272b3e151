"""Fourier-side operator calculus for the averaged fat-zeta equation.

Conventions: ``f^(Y) = int e^{-2 pi i <Y, X>} f(X) dX``; ``Q = sum h^{ab} Y_a Y_b``;
``E = sum Y_a d_a``; ``D = sum d_a Y_a = n + E``; ``B f = sum d_a d_b (Y_a Y_b f)``.
Under the transform ``(2 Omega + n/2)^2 + (n gamma)^2`` becomes the mixed form

    D^2 - n D + 2 pi (Q D + D Q) + 4 pi^2 Q^2 - 2 pi n Q + n^2 (1/4 + gamma^2).

Operators act on any algebra object exposing ``d(a)``, ``mul_var(a)``,
``scale(c)``, ``+`` and ``evaluate(Y)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .lattice import GramMatrix, as_gram
from .polyalg import Poly

FORMS = ("mixed", "forward", "backward", "btemplate", "forward_printed", "backward_printed")


# -- function algebras --------------------------------------------------------

class TestFunction:
    """``P(Y) exp(-pi s |Y|^2)`` with exact derivatives of every order."""

    __test__ = False  # not a pytest class

    def __init__(self, poly: Poly, s: float = 1.0):
        self.poly = poly
        self.n = poly.nvars
        self.s = float(s)

    @classmethod
    def gaussian(cls, n: int, s: float = 1.0, c: complex = 1.0) -> "TestFunction":
        return cls(Poly.constant(n, c), s)

    @classmethod
    def monomial(cls, exps: Sequence[int], s: float = 1.0, c: complex = 1.0) -> "TestFunction":
        return cls(Poly(len(exps), {tuple(int(e) for e in exps): c}), s)

    def _like(self, poly: Poly) -> "TestFunction":
        return TestFunction(poly, self.s)

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return self._like(self.poly + other.poly)

    def __sub__(self, other: "TestFunction") -> "TestFunction":
        return self._like(self.poly - other.poly)

    def scale(self, c) -> "TestFunction":
        return self._like(self.poly.scale(c))

    def mul_var(self, a: int, c=1.0) -> "TestFunction":
        return self._like(self.poly.mul_var(a, c))

    def d(self, a: int) -> "TestFunction":
        return self._like(self.poly.diff(a) + self.poly.mul_var(a, -2.0 * math.pi * self.s))

    def evaluate(self, Y) -> complex:
        Y = np.asarray(Y, dtype=float).reshape(self.n)
        return complex(self.poly(*Y)) * math.exp(-math.pi * self.s * float(Y @ Y))

    def zero(self) -> "TestFunction":
        return self._like(Poly(self.n))


class RayTerm:
    """``exp(-pi Y^2) Y^beta sum_k c_k Y^k`` on ``Y > 0`` (rank 1, Laurent coefficients)."""

    def __init__(self, coeffs: Dict[int, complex], beta: complex):
        self.coeffs = {k: complex(v) for k, v in coeffs.items() if v != 0}
        self.beta = complex(beta)
        self.n = 1

    def _like(self, coeffs) -> "RayTerm":
        return RayTerm(coeffs, self.beta)

    def __add__(self, other: "RayTerm") -> "RayTerm":
        if other.beta != self.beta:
            raise ValueError("ray terms with different exponents")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return self._like(out)

    def scale(self, c) -> "RayTerm":
        return self._like({k: c * v for k, v in self.coeffs.items()})

    def mul_var(self, a: int = 0, c=1.0) -> "RayTerm":
        return self._like({k + 1: c * v for k, v in self.coeffs.items()})

    def d(self, a: int = 0) -> "RayTerm":
        out: Dict[int, complex] = {}
        for k, v in self.coeffs.items():
            out[k - 1] = out.get(k - 1, 0) + v * (k + self.beta)
            out[k + 1] = out.get(k + 1, 0) - 2.0 * math.pi * v
        return self._like(out)

    def evaluate(self, Y) -> complex:
        y = float(np.asarray(Y, dtype=float).reshape(-1)[0])
        if not y > 0:
            raise DomainError("ray terms are evaluated on Y > 0")
        tot = sum(v * y ** k for k, v in self.coeffs.items())
        return complex(tot * math.exp(-math.pi * y * y) * y ** self.beta)

    def zero(self) -> "RayTerm":
        return self._like({})


# -- operator building blocks ------------------------------------------------

def _sum(fs):
    fs = list(fs)
    out = fs[0]
    for f in fs[1:]:
        out = out + f
    return out


def op_E(f):
    return _sum(f.d(a).mul_var(a) for a in range(f.n))


def op_D(f):
    return _sum(f.mul_var(a).d(a) for a in range(f.n))


def op_Q(f, h):
    n = f.n
    return _sum(f.mul_var(b).mul_var(a).scale(h[a, b]) for a in range(n) for b in range(n))


def op_diagQ(f, h):
    """``sum_a h^{aa} Y_a^2 f``."""
    return _sum(f.mul_var(a).mul_var(a).scale(h[a, a]) for a in range(f.n))


def op_diagY(f, h):
    """``sum_a h^{aa} Y_a f``."""
    return _sum(f.mul_var(a).scale(h[a, a]) for a in range(f.n))


def op_YYdd(f):
    n = f.n
    return _sum(f.d(b).d(a).mul_var(b).mul_var(a) for a in range(n) for b in range(n))


def op_B(f):
    n = f.n
    return _sum(f.mul_var(b).mul_var(a).d(b).d(a) for a in range(n) for b in range(n))


@dataclass(frozen=True)
class FPOperatorForm:
    form: str
    H: GramMatrix
    gamma: float

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}; choose from {FORMS}")

    @property
    def n(self) -> int:
        return self.H.n


def fp_form(form: str, H, gamma: float) -> FPOperatorForm:
    return FPOperatorForm(form, as_gram(H), float(gamma))


def fp_operator(form: FPOperatorForm, f):
    """Apply the per-lattice operator of ``form`` to ``f`` (no moduli average, no kappa)."""
    h = form.H.h
    n = form.n
    c = n * n * (0.25 + form.gamma ** 2)
    pi = math.pi
    Q = lambda g: op_Q(g, h)
    D = op_D
    if form.form == "mixed":
        Df = D(f)
        return _sum([D(Df), Df.scale(-n), Q(Df).scale(2 * pi), D(Q(f)).scale(2 * pi),
                     Q(Q(f)).scale(4 * pi * pi), Q(f).scale(-2 * pi * n), f.scale(c)])
    if form.form == "forward":
        Ef = op_E(f)
        return _sum([op_YYdd(f), Q(Ef).scale(4 * pi), Ef.scale(n + 1), Q(Q(f)).scale(4 * pi * pi),
                     Q(f).scale(2 * pi * (n + 2)), f.scale(c)])
    if form.form == "backward":
        return _sum([op_B(f), D(f).scale(-(n + 1)), D(Q(f)).scale(4 * pi), Q(Q(f)).scale(4 * pi * pi),
                     Q(f).scale(-2 * pi * (n + 2)), f.scale(c)])
    if form.form == "btemplate":
        # (D)^2 (B2 f) + D (B1 f) + B0 f + gamma^2 f with B2 = 1, B1 = 4 pi Q - n
        B1f = Q(f).scale(4 * pi) + f.scale(-n)
        B0f = _sum([Q(Q(f)).scale(4 * pi * pi), Q(f).scale(-2 * pi * (n + 2)),
                    f.scale(n * n / 4.0 + (n * n - 1) * form.gamma ** 2)])
        return _sum([D(D(f)), D(B1f), B0f, f.scale(form.gamma ** 2)])
    if form.form == "forward_printed":
        Ef = op_E(f)
        # ((2 pi Q + 1)^2 - (2 pi sum h^aa Y_a^2 + 1)) expanded
        return _sum([op_YYdd(f), Q(Ef).scale(4 * pi), Ef.scale(n + 1), Q(Q(f)).scale(4 * pi * pi),
                     Q(f).scale(4 * pi), op_diagQ(f, h).scale(-2 * pi), f.scale(c)])
    if form.form == "backward_printed":
        g = f + Q(f).scale(4 * pi)
        return _sum([op_B(f), D(g).scale(-(n + 1)), Q(Q(f)).scale(4 * pi * pi),
                     Q(f).scale(-2 * pi * (n + 2)), op_diagQ(f, h).scale(2 * pi),
                     op_diagY(f, h).scale(-2 * pi), f.scale(c)])
    raise ValueError(form.form)


def fp_apply(form: FPOperatorForm, f, Y) -> complex:
    return fp_operator(form, f).evaluate(Y)


# -- rearrangement identities -------------------------------------------------

IDENTITIES = ("expand_DD", "expand_nD", "QD", "DQ", "backward_DD", "backward_QD",
              "DQ_printed", "backward_QD_printed")


def identity_sides(name: str, f, H):
    """Left and right sides of a rearrangement identity applied to ``f``."""
    h = as_gram(H).h
    n = f.n
    Q = lambda g: op_Q(g, h)
    if name == "expand_DD":
        return op_D(op_D(f)), _sum([f.scale(n * n), op_E(f).scale(2 * n + 1), op_YYdd(f)])
    if name == "expand_nD":
        return op_D(f).scale(n), f.scale(n * n) + op_E(f).scale(n)
    if name == "QD":
        return Q(op_D(f)), Q(f).scale(n) + Q(op_E(f))
    if name == "DQ":
        return op_D(Q(f)), Q(f).scale(n + 2) + Q(op_E(f))
    if name == "DQ_printed":
        return op_D(Q(f)), _sum([op_diagQ(f, h).scale(-1.0), Q(f).scale(n + 3), Q(op_E(f))])
    if name == "backward_DD":
        return op_D(op_D(f)), op_B(f) + op_D(f).scale(-1.0)
    if name == "backward_QD":
        return Q(op_D(f)), op_D(Q(f)) + Q(f).scale(-2.0)
    if name == "backward_QD_printed":
        return Q(op_D(f)), _sum([op_D(Q(f)), Q(f).scale(-2.0), op_diagQ(f, h), op_diagY(f, h).scale(-1.0)])
    raise ValueError(f"unknown identity {name!r}")


def lemma_identity_residual(name: str, f, Y, H=None) -> float:
    H = np.eye(f.n) if H is None else H
    lhs, rhs = identity_sides(name, f, H)
    return float(abs(lhs.evaluate(Y) - rhs.evaluate(Y)))


# -- Fourier transform checks -------------------------------------------------

def quadrature_ft(f, Y, half_width: float = 8.0, samples: int = 256) -> complex:
    """Trapezoid transform of ``f`` on ``[-w, w]^n`` (spectrally accurate for Gaussians)."""
    n = f.n
    x = np.linspace(-half_width, half_width, samples, endpoint=False)
    dx = x[1] - x[0]
    grid = np.stack(np.meshgrid(*([x] * n), indexing="ij"), axis=-1).reshape(-1, n)
    vals = _evaluate_many(f, grid)
    ph = np.exp(-2j * math.pi * (grid @ np.asarray(Y, dtype=float).reshape(n)))
    return complex(np.sum(vals * ph) * dx ** n)


def _evaluate_many(f: TestFunction, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(pts), dtype=complex)
    for e, c in f.poly.items():
        out += complex(c) * np.prod(pts ** np.asarray(e), axis=1)
    return out * np.exp(-math.pi * f.s * np.sum(pts * pts, axis=1))


def fourier_derivative_identities_check(f: TestFunction, a: Sequence[int], Y=None,
                                        half_width: float = 8.0, samples: int = 256) -> float:
    """Residuals of ``FT(D^a f) = (2 pi i Y)^a FT(f)`` and ``FT(x_b d_b f) = -d_b(Y_b FT f)``."""
    a = tuple(int(v) for v in a)
    n = f.n
    if len(a) != n or sum(a) > 3:
        raise DomainError("multi-index must match the rank and have order <= 3")
    Ys = [np.full(n, 0.3), np.linspace(-0.4, 0.7, n)] if Y is None else [np.asarray(Y, float)]
    kw = dict(half_width=half_width, samples=samples)
    worst = 0.0
    for y in Ys:
        g = f
        for i, k in enumerate(a):
            for _ in range(k):
                g = g.d(i)
        lhs = quadrature_ft(g, y, **kw)
        rhs = np.prod((2j * math.pi * y) ** np.asarray(a)) * quadrature_ft(f, y, **kw)
        worst = max(worst, abs(lhs - rhs))
        for b in range(n):
            lhs2 = quadrature_ft(f.d(b).mul_var(b), y, **kw)
            # d_b FT(f) = FT(-2 pi i x_b f)
            rhs2 = -(quadrature_ft(f, y, **kw) + y[b] * quadrature_ft(f.mul_var(b, -2j * math.pi), y, **kw))
            worst = max(worst, abs(lhs2 - rhs2))
    return float(worst)


# -- rank-1 ray representation -------------------------------------------------

def _check_off_integers(Y: float, margin: float = 1e-6):
    # the modes are |m| >= 1; the origin is a regular point
    if round(Y) != 0 and abs(Y - round(Y)) < margin:
        raise DomainError(f"Y={Y} is within {margin} of an integer")


def phi_hat_terms(Y: float, gamma: float) -> Tuple[List[RayTerm], RayTerm]:
    """Ray terms (one per lattice mode ``0 < |m| < |Y|``) and the Gaussian term, on ``|Y|``.

    ``2 |m|^{-1/2} Re(|m|^{-i gamma} Y^{-1/2 + i gamma}) e^{-pi Y^2}`` per mode; the real part
    is kept by adding the conjugate-exponent term.
    """
    y = abs(Y)
    rays = []
    for m in range(1, int(math.floor(y)) + 1):
        if m >= y:
            break
        c = m ** -0.5 * m ** (-1j * gamma)
        rays.append(RayTerm({0: c}, -0.5 + 1j * gamma))
        rays.append(RayTerm({0: np.conj(c)}, -0.5 - 1j * gamma))
    gauss = RayTerm({0: -1.0 / (0.25 + gamma * gamma)}, 0.0)
    return rays, gauss


def phi_hat_rank1(Y: float, gamma: float, eps: float = 0.0) -> float:
    """``(e^{-pi Y^2}/|Y|) sum 2 |Y/m|^{1/2} cos(gamma log|Y/m|) - e^{-pi Y^2}/(1/4 + gamma^2)``."""
    _check_off_integers(Y)
    if Y == 0:
        return -1.0 / (0.25 + gamma * gamma)
    rays, gauss = phi_hat_terms(Y, gamma)
    return float(sum(r.evaluate(abs(Y)) for r in rays).real + gauss.evaluate(abs(Y)).real)


def kappa_hat_smooth_rank1(Y: float, gamma: float) -> float:
    """Transform of ``[(2 Omega + 1/2)^2 + gamma^2] exp(-pi X^2) / (1/4 + gamma^2)``.

    Built in X-space with the term algebra, then transformed monomial by monomial
    via ``FT(X^k G) = (i / 2 pi)^k d^k exp(-pi Y^2)``.
    """
    from .theta import TermSeries
    G = TermSeries.gaussian([[1.0]]).resolvent_operator(gamma).gauss
    total = 0.0
    for e, c in G.items():
        k = e[0]
        g = TestFunction.gaussian(1)
        for _ in range(k):
            g = g.d(0)
        total += complex(c) * (1j / (2 * math.pi)) ** k * g.evaluate([Y])
    return float((total / (0.25 + gamma * gamma)).real)


def kappa_hat_delta_catalogue(m_max: int = 6) -> List[Tuple[int, float, float]]:
    """``(m, w0, w1)``: the singular part of the transformed kappa1 is ``sum w0 delta_m + w1 delta'_m``.

    From ``kappa1 = 2 sum_m e^{-pi m^2} ((1/2 - 2 pi m^2) + 2 pi i m X) e^{2 pi i m X}``.
    """
    out = []
    for m in range(-m_max, m_max + 1):
        if m == 0:
            continue
        g = math.exp(-math.pi * m * m)
        out.append((m, 2 * g * (0.5 - 2 * math.pi * m * m), -2.0 * m * g))
    return out


def armitage_ode_residual(Y: float, gamma: float, sigma: Optional[int] = None) -> float:
    """``|form(1) Phi^ - sigma kappa^_smooth|`` at ``Y`` off the integers (rank 1)."""
    from .resolvent import determine_sign
    _check_off_integers(Y)
    sigma = determine_sign() if sigma is None else sigma
    form = fp_form("mixed", [[1.0]], gamma)
    y = abs(Y) if Y != 0 else 1e-300
    rays, gauss = phi_hat_terms(Y, gamma)
    lhs = sum(fp_operator(form, r).evaluate(y) for r in rays) if rays else 0.0
    lhs = lhs + fp_operator(form, gauss).evaluate(y)
    return float(abs(lhs.real - sigma * kappa_hat_smooth_rank1(Y, gamma)) + abs(lhs.imag))


def phi_rank1_samples(X: np.ndarray, gamma: float) -> np.ndarray:
    """``Phi_Z(X, gamma)`` at many points: cosine transform per mode, then the Gaussian term."""
    from .resolvent import kernel, u_max_for, u_rule
    X = np.asarray(X, dtype=float)
    out = np.zeros(len(X))
    u_max = u_max_for(minnorm=1.0)
    xm = float(np.max(np.abs(X)))
    for m in range(1, 8):
        if math.exp(-math.pi * m * m) < 1e-30:
            break
        u, w = u_rule(u_max, 2 * math.pi * m * xm + gamma + 1.0, per_osc=1)
        wk = w * kernel(1, gamma, u) * np.exp(-math.pi * m * m * u * u)
        for j0 in range(0, len(X), 2048):
            xs = X[j0:j0 + 2048]
            out[j0:j0 + 2048] += 2.0 * (np.cos(2 * math.pi * m * np.outer(xs, u)) @ wk)
    return out - np.exp(-math.pi * X * X) / (0.25 + gamma * gamma)


def planck_taper(x: np.ndarray, flat: float, edge: float) -> np.ndarray:
    """Smooth window equal to 1 on ``|x| <= flat`` and 0 for ``|x| >= edge``."""
    a = np.abs(np.asarray(x, dtype=float))
    w = np.ones_like(a)
    w[a >= edge] = 0.0
    mid = (a > flat) & (a < edge)
    z = (a[mid] - flat) / (edge - flat)
    w[mid] = 1.0 / (1.0 + np.exp(np.clip(1.0 / (1.0 - z) - 1.0 / z, -700.0, 700.0)))
    return w


def windowed_ft_rank1(Y, gamma: float, half_width: float = 30.0, samples: int = 2 ** 14) -> np.ndarray:
    """Numerical transform of ``Phi_Z`` on ``[-w, w]`` with a flat-top taper (flat on ``[-2w/3, 2w/3]``)."""
    X = np.linspace(-half_width, half_width, samples, endpoint=False)
    dx = X[1] - X[0]
    vals = phi_rank1_samples(X, gamma) * planck_taper(X, 2 * half_width / 3, half_width)
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    return np.cos(2 * math.pi * np.outer(Y, X)) @ vals * dx


def validate_ray_formula(gamma: float, Ys: Iterable[float] = (0.5, 1.5, 2.3, 3.7), tol: float = 1e-4) -> float:
    """Max deviation of the ray formula from the windowed transform; raises if above ``tol``."""
    Ys = list(Ys)
    num = windowed_ft_rank1(Ys, gamma)
    dev = max(abs(phi_hat_rank1(y, gamma) - v) for y, v in zip(Ys, num))
    if dev > tol:
        from .errors import ConsistencyError
        raise ConsistencyError(f"ray formula deviates from the numerical transform by {dev:.3e}")
    return float(dev)


# -- sweeps -------------------------------------------------------------------

def residual_sweep(Ys: Iterable[float], gammas: Iterable[float], path=None,
                   form: str = "mixed") -> List[Tuple[float, float, float, str]]:
    rows = [(float(y), float(g), armitage_ode_residual(y, g), form) for g in gammas for y in Ys]
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["Y", "gamma", "residual", "form"])
            for y, g, r, fm in rows:
                w.writerow([f"{y:.17g}", f"{g:.17g}", f"{r:.17g}", fm])
    return rows
