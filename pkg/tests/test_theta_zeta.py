import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import RIEMANN_ZEROS, theta1_jacobi, theta_bruteforce, xi, zeta2_closed_form
from nzlab.errors import DomainError, PoleError
from nzlab.lattice import dual_gram, enumerate_points, gram_from_tau
from nzlab.moduli import build_grid
from nzlab.theta import (TermSeries, big_theta, big_theta_pde_residual, heat_residual, tail_bound,
                         theta, truncation)
from nzlab.zeta import (ZeroRecord, critical_line_eval, find_zeros, merge_zero_records, read_zero_cache,
                        zeta_integral, zeta_rank1_reference)

taus = st.tuples(st.floats(-0.5, 0.5), st.floats(0.0, 1.0)).map(
    lambda p: (p[0], math.sqrt(1 - p[0] ** 2) + p[1] * (1 - math.sqrt(1 - p[0] ** 2))))


# -- theta ------------------------------------------------------------------------

@given(st.floats(-1, 1), st.floats(0.2, 3.0))
def test_rank1_theta_matches_jacobi(x, t):
    assert abs(theta([[1.0]], [x], t) - theta1_jacobi(x, t)) < 1e-13


def test_rank2_theta_matches_bruteforce():
    H = gram_from_tau((0.2, 0.99))
    for x, t in [((0.1, -0.3), 0.5), ((0.7, 0.25), 1.7)]:
        assert abs(theta(H, x, t) - theta_bruteforce(H.h, x, t)) < 1e-13


@given(taus, st.floats(0.3, 3.0))
def test_poisson_summation(tau, t):
    # theta_L(0, t) = det^{-1/2} t^{-n/2} theta_{L dual}(0, 1/t)
    H = gram_from_tau(tau)
    lhs = theta(H, [0.0, 0.0], t)
    rhs = theta(dual_gram(H), [0.0, 0.0], 1.0 / t) / t
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)


def test_tail_bound_dominates_true_tail():
    H = gram_from_tau((0.4, 0.95))
    t = 0.4
    spec = truncation(H, t, 1e-12)
    pts, q = enumerate_points(H, spec.radius + 40)
    true_tail = np.sum(np.exp(-math.pi * t * q[q > spec.radius]))
    assert true_tail <= tail_bound(H, t, spec.radius) <= 1e-12


def test_theta_domain():
    with pytest.raises(DomainError):
        theta([[1.0]], [0.0], 0.0)
    with pytest.raises(DomainError):
        truncation([[1.0]], 1.0, -1.0)


@given(taus, st.floats(-1, 1), st.floats(-1, 1), st.floats(0.3, 3.0))
def test_heat_equation_exact(tau, x1, x2, t):
    H = gram_from_tau(tau)
    assert heat_residual(H, [x1, x2], t, fd_step=None) <= 1e-12
    assert big_theta_pde_residual(H, [x1, x2], math.log(t)) <= 1e-12


def test_heat_equation_fd():
    H = gram_from_tau((0.1, 0.99))
    assert heat_residual(H, [0.2, 0.4], 0.7) <= 1e-6
    assert big_theta_pde_residual(H, [0.2, 0.4], -0.3, time_derivative="fd") <= 1e-6
    with pytest.raises(ValueError):
        big_theta_pde_residual(H, [0.2, 0.4], 0.0, time_derivative="spectral")


def test_term_series_evaluates_big_theta():
    H = gram_from_tau((-0.3, 0.96))
    S = TermSeries.theta(H)
    X, T = np.array([0.3, -0.2]), 0.4
    assert abs(S.evaluate(X, math.exp(T / 2)) - big_theta(H, X, T)) < 1e-13


def test_term_series_derivative_vs_fd():
    H = gram_from_tau((0.0, 1.0))
    S = TermSeries.theta(H) + TermSeries.gaussian(H, 0.5)
    X, u, h = np.array([0.3, -0.2]), 1.3, 1e-5
    e = np.array([h, 0.0])
    fd = (S.evaluate(X + e, u) - S.evaluate(X - e, u)) / (2 * h)
    assert abs(S.d(0).evaluate(X, u) - fd) < 1e-7


# -- zeta -------------------------------------------------------------------------

def test_rank1_reference_oracle():
    for s in [0.3 + 2j, 1.7 - 11j, 0.5 + 14.1j]:
        assert abs(zeta_rank1_reference(s) - xi(s)) < 1e-14 * max(1.0, abs(xi(s)))
    with pytest.raises(PoleError):
        zeta_rank1_reference(1.0)


@pytest.mark.parametrize("s", [0.5 + 0j, 0.2 + 5j, 1.8 - 20j, 0.5 + 29.5j])
def test_rank1_matches_completed_zeta(s):
    z = zeta_integral(1, s)
    assert abs(z.value - xi(s)) <= max(z.err, 1e-15)
    assert z.err < 1e-12


@pytest.mark.parametrize("s", [0.5 + 3j, 0.25 + 0j, 1.6 + 9j])
def test_rank2_matches_closed_form(s):
    z = zeta_integral(2, s)
    assert abs(z.value - zeta2_closed_form(s)) <= max(z.err, 1e-15)


@given(st.floats(0.05, 0.95), st.floats(-20, 20), st.sampled_from([1, 2]))
def test_functional_equation(re, im, n):
    s = complex(re, im)
    a, b = zeta_integral(n, s), zeta_integral(n, 1 - s)
    assert abs(a.value - b.value) <= 2 * max(a.err, b.err)


def test_coarse_grid_reports_larger_error():
    s = 0.5 + 4j
    fine = zeta_integral(2, s)
    coarse = zeta_integral(2, s, grid=build_grid(2))
    assert coarse.err > fine.err
    assert abs(coarse.value - zeta2_closed_form(s)) <= coarse.err


def test_zeta_poles():
    for n in (1, 2):
        with pytest.raises(PoleError):
            zeta_integral(n, 0.0)
        with pytest.raises(PoleError):
            zeta_integral(n, 1.0)


def test_critical_line_value_is_real():
    v, e = critical_line_eval(2, 9.3)
    assert abs(zeta2_closed_form(0.5 + 9.3j) - v) <= e


def test_rank1_zeros():
    recs = find_zeros(1, 10, 30)
    assert [round(r.gamma, 5) for r in recs] == [round(g, 5) for g in RIEMANN_ZEROS]
    for r, g in zip(recs, RIEMANN_ZEROS):
        assert abs(r.gamma - g) <= 1e-5
        assert r.bracket[0] <= r.gamma <= r.bracket[1]


def test_scan_flags_tangency():
    # a double root produces no sign change and must be reported
    f = lambda g: ((g - 1.03) ** 2, 1e-6)
    with pytest.warns(Warning, match="inconclusive"):
        recs = find_zeros(1, 0.0, 2.0, step=0.1, evaluator=f)
    assert recs == []


def test_zero_cache_merge_is_idempotent(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    p = tmp_path / "zeros.csv"
    recs = [ZeroRecord(14.1347251417, (14.13, 14.14), 1e-8), ZeroRecord(21.0220396388, (21.0, 21.1), 1e-8)]
    merge_zero_records(p, recs)
    first = p.read_bytes()
    merge_zero_records(p, recs + [ZeroRecord(14.1347251418, (14.13, 14.14), 1e-8)])
    assert p.read_bytes() == first
    rows = read_zero_cache(p)
    assert [r["gamma"] for r in rows] == [14.1347251417, 21.0220396388]
    assert rows[0]["timestamp"] == "1970-01-01T00:00:00Z"
