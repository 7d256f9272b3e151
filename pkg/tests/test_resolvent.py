import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from oracles import xi, zeta2_closed_form
from nzlab.lattice import gram_from_tau
from nzlab.moduli import build_grid, rank1_grid
from nzlab.resolvent import (AveragedPhi, averaged_phi_eval, build_projection, decay_exponent,
                             determine_sign, kappa1, perturbed_residual, phi1, phi_full,
                             projection_symmetry_residual, resolvent_identity_residual, theorem6_report)

taus = st.tuples(st.floats(-0.5, 0.5), st.floats(0.0, 1.0)).map(
    lambda p: (p[0], math.sqrt(1 - p[0] ** 2) + p[1] * (1 - math.sqrt(1 - p[0] ** 2))))


def phi1_rank1_quad(X: float, gamma: float) -> float:
    """Independent Phi1 for Z: adaptive quadrature over Jacobi theta values."""
    def f(u):
        th = float(mp.re(mp.jtheta(3, mp.pi * X * u, mp.exp(-mp.pi * u * u))))
        return 2 * u ** (-0.5) * math.cos(gamma * math.log(u)) * (th - 1.0)
    return quad(f, 1.0, 7.0, limit=400, epsabs=1e-14, epsrel=1e-13)[0]


@pytest.mark.parametrize("X,gamma", [(0.0, 2.0), (0.37, 6.5), (-1.2, 14.13)])
def test_phi1_rank1_against_adaptive_quadrature(X, gamma):
    p = phi1([[1.0]], [X], gamma)
    assert abs(p.value - phi1_rank1_quad(X, gamma)) < 1e-11


def test_phi1_at_origin_reproduces_completed_zeta():
    # Phi1(0, gamma) = xi(1/2 + i gamma) + 1/(1/4 + gamma^2) in rank 1
    for g in (0.0, 3.3, 21.0):
        v = phi1([[1.0]], [0.0], g).value
        assert abs(v - (xi(0.5 + 1j * g).real + 1 / (0.25 + g * g))) < 1e-13


def test_sign_fixed_by_rank1_oracle():
    assert determine_sign() == -1
    # kappa1 at X = 0 for Z: 2 (2 Omega + 1/2)(Theta - 1) evaluated at T = 0
    assert kappa1([[1.0]], [0.0]) == pytest.approx(-1.0, abs=1e-13)


@given(taus, st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 20))
def test_resolvent_identity_rank2(tau, x1, x2, gamma):
    assert resolvent_identity_residual(gram_from_tau(tau), [x1, x2], gamma) <= 1e-6


@given(st.floats(-2, 2), st.floats(0, 30))
def test_resolvent_identity_rank1(x, gamma):
    assert resolvent_identity_residual([[1.0]], [x], gamma) <= 1e-6


def test_corrupted_sign_breaks_identity(monkeypatch):
    monkeypatch.setenv("NZL_CORRUPT_SIGN", "1")
    assert resolvent_identity_residual([[1.0]], [0.3], 4.0) > 1e-3


@pytest.mark.parametrize("gamma", [2.5, 9.0])
def test_averaged_phi_matches_zeta(gamma):
    v1, e1 = averaged_phi_eval(gamma, rank1_grid())
    assert abs(v1 - xi(0.5 + 1j * gamma).real) <= e1
    v2, e2 = averaged_phi_eval(gamma, build_grid(4))
    assert abs(v2 - zeta2_closed_form(0.5 + 1j * gamma).real) <= e2


def test_averaged_phi_is_even_in_X():
    avg = AveragedPhi(build_grid(3), x_max=1.0, gamma_max=10.0)
    a, _ = avg.evaluate(np.array([0.3, -0.4]), 5.0)
    b, _ = avg.evaluate(np.array([-0.3, 0.4]), 5.0)
    assert abs(a - b) < 1e-13


def test_averaged_phi_matches_node_sum():
    g = build_grid(2)
    avg = AveragedPhi(g, x_max=1.0, gamma_max=10.0)
    X, gamma = np.array([0.2, 0.5]), 4.0
    x, y, w = g.select(g.levels)
    direct = sum(wi * phi_full(gram_from_tau((xi_, yi)), X, gamma).value for xi_, yi, wi in zip(x, y, w))
    assert abs(avg.evaluate(X, gamma)[0] - direct) < 1e-10


def test_decay_exponent_of_power_law():
    r = np.linspace(1, 20, 200)
    assert decay_exponent(r, np.cos(5 * r) / r ** 1.5) == pytest.approx(-1.5, abs=0.1)


def test_theorem_report_rank1_at_first_zero():
    rep = theorem6_report(14.134725141734695, rank1_grid(), extended=False)
    assert rep["sigma"] == -1
    assert rep["equation"]["pass"] and rep["condition1"]["pass"]
    assert rep["condition2"]["pass"] and rep["condition3"]["pass"]


def test_projection_reproduces_kappa():
    H = [[1.0]]
    P = build_projection(H, 3.0)
    np.testing.assert_allclose(P(P.alpha), -P.kappa, atol=1e-12)
    assert perturbed_residual(P) <= 1e-6 * max(1.0, np.max(np.abs(P.kappa)))


def test_projection_even_in_gamma():
    assert projection_symmetry_residual([[1.0]], 3.0) < 1e-10
