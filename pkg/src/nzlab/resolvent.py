"""Resolvent images of the big theta series and the averaged fat-zeta equation.

With ``u = e^{T/2}`` the normalized transform of ``Theta - 1`` reads

    Phi1(X, gamma) = 2n int_1^inf u^{n/2 - 1} cos(n gamma log u) (Theta(X, u) - 1) du,

which is real for real gamma. Operators in X act termwise through the
``TermSeries`` algebra before the u-integral is taken.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConsistencyError, ConstructionError
from .lattice import GramMatrix, as_gram, min_norm
from .moduli import ModuliGrid
from .reduction import pairwise_sum
from .theta import TermSeries

U_ORDER = 12
CHEB = 16
EPS = 1e-15


@dataclass(frozen=True)
class PhiEvaluation:
    X: Tuple[float, ...]
    gamma: float
    value: complex
    err: float
    H: Optional[GramMatrix] = None


@dataclass(frozen=True)
class KappaEvaluation:
    X: Tuple[float, ...]
    gamma: float
    value: complex
    H: Optional[GramMatrix] = None


# -- u-quadrature ------------------------------------------------------------

def u_max_for(H=None, minnorm: Optional[float] = None) -> float:
    """Upper u-limit where ``exp(-pi u^2 minnorm) = e^{-40}``, with ``T_max <= 12``."""
    m = min_norm(H) if minnorm is None else minnorm
    return math.sqrt(min(40.0 / (math.pi * m), math.exp(12.0)))


def u_rule(u_max: float, fmax: float, refine: int = 1, order: int = U_ORDER, per_osc: int = 2):
    """Composite Gauss rule on ``[1, u_max]`` with ``per_osc`` panels per oscillation of ``fmax``."""
    panels = refine * (4 + per_osc * int(math.ceil((u_max - 1.0) * fmax / (2 * math.pi))))
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(1.0, u_max, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * g).ravel(), (0.5 * (b - a) * w).ravel()


def kernel(n: int, gamma: float, u: np.ndarray) -> np.ndarray:
    return 2.0 * n * u ** (n / 2.0 - 1.0) * np.cos(n * gamma * np.log(u))


def _fmax(S: TermSeries, X, gamma: float) -> float:
    X = np.asarray(X, dtype=float)
    phase = np.max(np.abs(S.lam @ X)) if len(S.lam) else 0.0
    return 2 * math.pi * phase + S.n * abs(gamma) + 1.0


def integrate_u(S: TermSeries, X, gamma: float, u_max: float) -> Tuple[complex, float]:
    """``int_1^{u_max} kernel(u) S(X, u) du`` for the lattice part of ``S``."""
    fmax = _fmax(S, X, gamma)
    vals = []
    for refine in (1, 2):
        u, w = u_rule(u_max, fmax, refine)
        lat = S._like(S.lattice, type(S.gauss)(S.n + 1))
        vals.append(complex(pairwise_sum(w * kernel(S.n, gamma, u) * lat.evaluate(X, u))))
    return vals[1], abs(vals[1] - vals[0])


# -- per-lattice objects -----------------------------------------------------

_SERIES: Dict[Tuple, TermSeries] = {}


def theta_minus_one(H, eps: float = EPS) -> TermSeries:
    H = as_gram(H)
    key = (H.h.tobytes(), eps)
    if key not in _SERIES:
        _SERIES[key] = TermSeries.theta(H, eps=eps, include_zero=False)
    return _SERIES[key]


def _pole(gamma: float) -> float:
    return 1.0 / (0.25 + gamma * gamma)


def _X(X, n):
    return np.asarray(X, dtype=float).reshape(n)


def phi1(H, X, gamma: float, eps: float = 1e-12) -> PhiEvaluation:
    H = as_gram(H)
    S = theta_minus_one(H)
    v, e = integrate_u(S, _X(X, H.n), gamma, u_max_for(H))
    return PhiEvaluation(tuple(_X(X, H.n)), gamma, v, e + EPS, H)


def kappa1(H, X) -> complex:
    """``2n (2 Omega + n/2)(Theta(X, 0) - 1)``, exactly termwise."""
    H = as_gram(H)
    S = theta_minus_one(H)
    return complex(2 * H.n * S.shifted_omega().evaluate(_X(X, H.n), 1.0))


def gaussian_correction(H, X, gamma: float, operator: bool = False) -> complex:
    """``G / (1/4 + gamma^2)`` or its image under ``(2 Omega + n/2)^2 + (n gamma)^2``."""
    G = TermSeries.gaussian(H)
    if operator:
        G = G.resolvent_operator(gamma)
    return complex(G.evaluate(_X(X, as_gram(H).n))) * _pole(gamma)


def phi_full(H, X, gamma: float, eps: float = 1e-12) -> PhiEvaluation:
    """``Phi = Phi1 - exp(-pi |X|^2) / (1/4 + gamma^2)``, so ``int Phi(0) dmu`` is the zeta value."""
    p = phi1(H, X, gamma, eps)
    return PhiEvaluation(p.X, gamma, p.value - gaussian_correction(H, X, gamma), p.err, p.H)


def kappa_full(H, X, gamma: float) -> complex:
    return kappa1(H, X) + gaussian_correction(H, X, gamma, operator=True)


def operator_on_phi(H, X, gamma: float) -> Tuple[complex, float]:
    """``[(2 Omega + n/2)^2 + (n gamma)^2] Phi`` with the operator under the integral."""
    H = as_gram(H)
    S = theta_minus_one(H).resolvent_operator(gamma)
    v, e = integrate_u(S, _X(X, H.n), gamma, u_max_for(H))
    return v - gaussian_correction(H, X, gamma, operator=True), e


_SIGN: List[int] = []


def determine_sign() -> int:
    """Sign ``sigma`` with ``[(2 Omega + n/2)^2 + (n gamma)^2] Phi = sigma kappa``.

    Fixed once from a rank-1 oracle at a generic point.
    """
    if not _SIGN:
        lhs, _ = operator_on_phi([[1.0]], [0.3], 2.7)
        rhs = kappa_full([[1.0]], [0.3], 2.7)
        _SIGN.append(1 if (lhs / rhs).real > 0 else -1)
    # negative-control hook for the verify suite
    if os.environ.get("NZL_CORRUPT_SIGN") == "1":
        return -_SIGN[0]
    return _SIGN[0]


def resolvent_identity_residual(H, X, gamma: float) -> float:
    lhs, _ = operator_on_phi(H, X, gamma)
    return float(abs(lhs - determine_sign() * kappa_full(H, X, gamma)))


# -- moduli averages ---------------------------------------------------------

def _interp_matrix(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Barycentric interpolation matrix for Chebyshev points of the second kind."""
    m = len(nodes)
    bw = (-1.0) ** np.arange(m)
    bw[0] *= 0.5
    bw[-1] *= 0.5
    diff = targets[:, None] - nodes[None, :]
    exact = diff == 0
    diff[exact] = 1.0
    c = bw / diff
    c = c / c.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    c[hit] = exact[hit].astype(float)
    return c


class AveragedPhi:
    """``int_{M[1]} d^j Phi(X, gamma) dmu`` with the tau-sum done once per u-node.

    Since ``<lam, X>`` does not depend on tau, ``g_lam(u) = sum_i w_i exp(-pi u^2 q_i(lam))``
    is tabulated for a fixed u-rule covering ``|X|_inf <= x_max`` and ``|gamma| <= gamma_max``.
    """

    def __init__(self, grid: ModuliGrid, level: Optional[int] = None, x_max: float = 0.0,
                 gamma_max: float = 10.0, eps: float = 1e-16, direction=None):
        from .zeta import common_lattice_box
        self.grid = grid
        self.n = grid.rank
        self.level = grid.levels if level is None else level
        _, _, w = grid.select(self.level)
        if grid.rank == 1:
            lam, _ = TermSeries.theta([[1.0]], eps=eps, include_zero=False).lam, None
            q = (lam[:, 0].astype(float) ** 2)[None, :]
        else:
            lam, q = common_lattice_box(grid, self.level, eps, degree=8)
        self.lam = lam
        self.volume = float(pairwise_sum(w)) if grid.rank == 2 else 1.0
        self.gamma_max = gamma_max
        self.x_max = x_max
        u_max = u_max_for(minnorm=float(q.min()))
        # along a fixed direction only <lam, d> sets the oscillation rate
        reach = np.abs(lam).sum(axis=1) if direction is None else np.abs(lam @ np.asarray(direction))
        self.direction = direction
        fmax = 2 * math.pi * x_max * float(reach.max()) + self.n * gamma_max + 1.0
        # g is smooth in u: tabulate on Chebyshev panels, then interpolate
        edges = np.linspace(1.0, u_max, int(math.ceil((u_max - 1.0) / 0.25)) + 1)
        cheb = []
        for a, b in zip(edges[:-1], edges[1:]):
            nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * np.arange(CHEB) / (CHEB - 1))
            e = np.exp(-math.pi * q[:, :, None] * (nodes * nodes)[None, None, :])
            cheb.append((a, b, nodes, pairwise_sum(w[:, None, None] * e, axis=0)))
        self.rules = []
        for refine in (1, 2):
            u, wu = u_rule(u_max, fmax, refine, per_osc=1)
            g = np.zeros((len(lam), len(u)))
            for a, b, nodes, vals in cheb:
                m = (u >= a) & (u <= b)
                g[:, m] = vals @ _interp_matrix(nodes, u[m]).T
            self.rules.append((u, wu, g))

    def _gauss(self, X, deriv) -> float:
        G = TermSeries.gaussian(np.eye(self.n))
        if deriv is not None:
            a, j = deriv
            for _ in range(j):
                G = G.d(a)
        return complex(G.evaluate(X)).real

    def evaluate(self, X, gamma: float, deriv: Optional[Tuple[int, int]] = None) -> Tuple[complex, float]:
        """Averaged value (or ``d^j/dX_a^j`` for ``deriv=(a, j)``) and its u-quadrature error."""
        return self.evaluate_many(X, gamma, [deriv])[0]

    def evaluate_many(self, X, gamma: float, derivs) -> List[Tuple[complex, float]]:
        if abs(gamma) > self.gamma_max:
            raise ValueError(f"|gamma| exceeds the tabulated range {self.gamma_max}")
        X = _X(X, self.n)
        if self.direction is None:
            if np.max(np.abs(X)) > self.x_max + 1e-12:
                raise ValueError(f"|X| exceeds the tabulated range {self.x_max}")
        elif np.linalg.norm(X) > self.x_max + 1e-12:
            raise ValueError(f"|X| exceeds the tabulated range {self.x_max}")
        proj = self.lam @ X
        weighted = self._weighted(gamma, tuple(derivs))
        sums = []
        for (u, _, _), Gd in zip(self.rules, weighted):
            base = np.exp(2j * math.pi * np.outer(proj, u))
            sums.append(np.tensordot(Gd, base, axes=([1, 2], [0, 1])))
        res = []
        for k, deriv in enumerate(derivs):
            val = complex(sums[1][k]) - self.volume * self._gauss(X, deriv) * _pole(gamma)
            res.append((val, abs(complex(sums[1][k] - sums[0][k])) + 1e-16))
        return res

    def evaluate_ray(self, d, rr: np.ndarray, gamma: float, derivs) -> np.ndarray:
        """Values at ``X = r d`` for uniformly spaced ``rr``; shape ``(len(rr), len(derivs))``.

        The phase is advanced by a fixed complex factor per step.
        """
        d = _X(d, self.n)
        rr = np.asarray(rr, dtype=float)
        if rr[-1] * np.linalg.norm(d) > self.x_max + 1e-12:
            raise ValueError(f"|X| exceeds the tabulated range {self.x_max}")
        dr = rr[1] - rr[0] if len(rr) > 1 else 0.0
        proj = self.lam @ d
        weighted = self._weighted(gamma, tuple(derivs))
        (u, _, _) = self.rules[1]
        Gd = weighted[1]
        phase = np.exp(2j * math.pi * np.outer(proj, u) * rr[0])
        step = np.exp(2j * math.pi * np.outer(proj, u) * dr)
        out = np.empty((len(rr), len(derivs)), dtype=complex)
        for k, r in enumerate(rr):
            out[k] = np.tensordot(Gd, phase, axes=([1, 2], [0, 1]))
            for m, deriv in enumerate(derivs):
                out[k, m] -= self.volume * self._gauss(r * d, deriv) * _pole(gamma)
            phase *= step
        return out

    def _weighted(self, gamma: float, derivs: tuple):
        """``g * w_u * kernel * (2 pi i u lam_a)^j`` per rule, cached for the last call."""
        key = (gamma, derivs)
        if getattr(self, "_wkey", None) != key:
            out = []
            for u, wu, g in self.rules:
                base = g * (wu * kernel(self.n, gamma, u))[None, :]
                stack = []
                for deriv in derivs:
                    if deriv is None:
                        stack.append(base)
                    else:
                        a, j = deriv
                        stack.append(base * (2j * math.pi * np.outer(self.lam[:, a], u)) ** j)
                out.append(np.array(stack, dtype=complex))
            self._wkey, self._wval = key, out
        return self._wval


_AVG: Dict[Tuple, AveragedPhi] = {}


def _averaged(grid: ModuliGrid, level: int, x_max: float = 0.0, gamma: float = 0.0,
              direction=None, eps: float = 1e-16) -> AveragedPhi:
    """Cached table; the gamma range is bucketed in steps of 10."""
    gmax = 10.0 * max(1, math.ceil(abs(gamma) / 10.0 + 1e-12))
    dkey = None if direction is None else tuple(np.round(direction, 15))
    key = (id(grid), level, x_max, gmax, dkey, eps)
    if key not in _AVG:
        _AVG[key] = AveragedPhi(grid, level, x_max, gmax, eps, direction)
    return _AVG[key]


def averaged_phi_eval(gamma: float, grid: ModuliGrid) -> Tuple[float, float]:
    """``int Phi(0, gamma) dmu`` with an error from u-refinement and moduli levels."""
    fine, e1 = _averaged(grid, grid.levels, gamma=gamma).evaluate(np.zeros(grid.rank), gamma)
    err = e1
    if grid.rank == 2:
        coarse, _ = _averaged(grid, grid.levels - 1, gamma=gamma).evaluate(np.zeros(grid.rank), gamma)
        err += abs(fine - coarse)
    err += 64 * np.finfo(float).eps * (1.0 + abs(fine))
    if abs(fine.imag) > max(err, 1e-14):
        raise ConsistencyError(f"averaged Phi has imaginary part {fine.imag:.3e}")
    return fine.real, float(err)


def averaged_phi_at_zero(gamma: float, grid: ModuliGrid) -> float:
    return averaged_phi_eval(gamma, grid)[0]


def decay_direction(n: int) -> np.ndarray:
    """Sampling direction with no rational relation between coordinates."""
    if n == 1:
        return np.array([1.0])
    d = np.array([1.0, (1 + math.sqrt(5)) / 2])
    return d / np.linalg.norm(d)


def decay_exponent(r: np.ndarray, f: np.ndarray) -> float:
    """Log-log slope of the tail envelope ``M(r) = max_{s >= r} |f(s)|``.

    The envelope is monotone, so oscillation zeros of ``f`` do not bias the fit.
    """
    M = np.maximum.accumulate(np.abs(f)[::-1])[::-1]
    keep = M > 0
    return float(np.polyfit(np.log(r[keep]), np.log(M[keep]), 1)[0])


def decay_profile(gamma: float, grid: ModuliGrid, r_max: float = 20.0, points: int = 240,
                  level: Optional[int] = None) -> Dict[str, float]:
    """Decay exponents of ``d^j/dX_a^j`` of the averaged Phi along ``decay_direction``."""
    n = grid.rank
    lvl = (grid.levels - 1 if n == 2 else grid.levels) if level is None else level
    d = decay_direction(n)
    far = _averaged(grid, lvl, x_max=r_max, gamma=gamma, direction=d, eps=1e-10)
    rr = np.linspace(1.0, r_max, points)
    derivs = [None] + [(a, j) for a in range(n) for j in range(1, 5)]
    vals = far.evaluate_ray(d, rr, gamma, derivs)
    out = {}
    for k, dv in enumerate(derivs):
        name = "d0" if dv is None else f"d{dv[1]}_X{dv[0] + 1}"
        out[name] = decay_exponent(rr, vals[:, k])
    return out


def theorem6_report(gamma: float, grid: ModuliGrid, nodes: int = 8, seed: int = 0,
                    slack: float = 0.2, extended: bool = True, zero_tol: float = 1e-5) -> dict:
    """JSON-serialisable check of the averaged equation and its initial conditions."""
    n = grid.rank
    rng = np.random.default_rng(seed)
    x, y, w = grid.select(grid.levels)
    pick = np.unique(np.linspace(0, len(x) - 1, min(nodes, len(x))).astype(int))
    worst, agg, worst_node = 0.0, 0.0, None
    for i in pick:
        H = [[1.0]] if n == 1 else GramMatrix(np.array([[x[i] ** 2 + y[i] ** 2, x[i]], [x[i], 1.0]]) / y[i])
        X = rng.uniform(-1, 1, n)
        r = resolvent_identity_residual(H, X, gamma)
        agg += w[i] * r
        if r >= worst:
            worst, worst_node = r, {"tau": [float(x[i]), float(y[i])], "X": X.tolist()}
    c1, c1_err = averaged_phi_eval(gamma, grid)
    avg0 = _averaged(grid, grid.levels, gamma=gamma)
    odd_d = [(a, j) for a in range(n) for j in (1, 3)]
    odd = {f"d{j}_X{a + 1}": abs(v) for (a, j), (v, _) in zip(odd_d, avg0.evaluate_many(np.zeros(n), gamma, odd_d))}
    slopes = decay_profile(gamma, grid)
    report = {
        "gamma": gamma,
        "rank": n,
        "sigma": determine_sign(),
        "equation": {"max_residual": worst, "weighted_residual": agg, "worst_node": worst_node,
                     "pass": worst <= 1e-6},
        "condition1": {"value": c1, "err": c1_err, "pass": abs(c1) <= zero_tol},
        "condition2": {"values": odd, "pass": max(odd.values()) <= 1e-10},
        "condition3": {"direction": decay_direction(n).tolist(), "range": [1.0, 20.0],
                       "exponents": slopes, "pass": max(slopes.values()) <= -1 + slack},
    }
    if extended:
        report["condition3"]["extended_exponents"] = decay_profile(gamma, grid, r_max=50.0, points=400)
    return report


# -- projection perturbation -------------------------------------------------

def _hermite_basis(z: np.ndarray, order: int) -> List[np.ndarray]:
    from numpy.polynomial.hermite import hermval
    g = np.exp(-0.5 * z * z)
    return [hermval(z, np.eye(order + 1)[k]) * g for k in range(order + 1)]


@dataclass(frozen=True, eq=False)
class ProjectionOp:
    """Rank-one map ``P f = -(<f, phi>/<alpha, phi>) kappa_t`` on a fiber grid.

    ``kappa_t = sigma * kappa`` is the right-hand side of the resolvent
    identity as implemented, so ``P(alpha) = -kappa_t``.
    """

    H: GramMatrix
    gamma: float
    points: np.ndarray
    weights: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    kappa: np.ndarray
    phi: np.ndarray
    phi_index: Tuple[int, ...]
    op_phi: np.ndarray = field(repr=False)

    def inner(self, f, g) -> complex:
        return complex(np.sum(self.weights * f * np.conj(g)))

    def __call__(self, f: np.ndarray) -> np.ndarray:
        return -(self.inner(f, self.phi) / self.inner(self.alpha, self.phi)) * self.kappa


def build_projection(H, gamma: float, half_width: float = 3.0, points: int = 24,
                     order: int = 8, tol: float = 1e-8) -> ProjectionOp:
    H = as_gram(H)
    n = H.n
    axis = np.linspace(-half_width, half_width, points, endpoint=False)
    h = axis[1] - axis[0]
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    weights = np.full(len(grid), h ** n)
    phi_vals = np.array([phi_full(H, X, gamma).value for X in grid])
    op = np.array([operator_on_phi(H, X, gamma)[0] for X in grid])
    kap = determine_sign() * np.array([kappa_full(H, X, gamma) for X in grid])
    alpha, beta = phi_vals.real, phi_vals.imag
    basis1 = [_hermite_basis(grid[:, a], order) for a in range(n)]
    idx = sorted(np.ndindex(*([order + 1] * n)), key=lambda k: (sum(k), k))
    ip = lambda f, g: float(np.sum(weights * f * g))
    nb, na = math.sqrt(ip(beta, beta)), math.sqrt(ip(alpha, alpha))
    for k in idx:
        b = np.prod([basis1[a][k[a]] for a in range(n)], axis=0)
        nrm = math.sqrt(ip(b, b))
        if abs(ip(beta, b)) <= tol * max(nb, 1e-300) * nrm + tol * nrm and abs(ip(alpha, b)) > tol * na * nrm:
            return ProjectionOp(H, gamma, grid, weights, alpha, beta, kap, b, k, op)
    raise ConstructionError("no admissible phi in the Hermite-Gaussian search basis")


def perturbed_residual(P: ProjectionOp, H=None, X=None, gamma: Optional[float] = None) -> float:
    """Max over the grid of ``|[(2 Omega + n/2)^2 + P + (n gamma)^2] Phi|``."""
    phi = P.alpha + 1j * P.beta
    return float(np.max(np.abs(P.op_phi + P(phi))))


def projection_symmetry_residual(H, gamma: float, **kw) -> float:
    """``max |P_{gamma} f - P_{-gamma} f|`` over the Hermite test functions."""
    a = build_projection(H, gamma, **kw)
    b = build_projection(H, -gamma, **kw)
    worst = 0.0
    for k in range(3):
        f = np.prod([_hermite_basis(a.points[:, i], 2)[k] for i in range(a.points.shape[1])], axis=0)
        worst = max(worst, float(np.max(np.abs(a(f) - b(f)))))
    return worst
