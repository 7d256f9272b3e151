import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from nzlab.errors import DomainError, EvaluationError, ResourceError
from nzlab.lattice import (GramMatrix, dual_gram, enumerate_points, gram_from_tau, is_semistable,
                           min_norm, norm_sq, shortest_vectors)
from nzlab.moduli import (VOLUME_D1, ModuliGrid, build_grid, contains_d1, integrate_moduli,
                          rank1_grid, volume_m1)
from nzlab.polyalg import Poly
from nzlab.reduction import chunks, ordered_map, pairwise_sum

taus = st.tuples(st.floats(-0.5, 0.5), st.floats(0.0, 1.0)).map(
    lambda p: (p[0], math.sqrt(1 - p[0] ** 2) + p[1] * (1 - math.sqrt(1 - p[0] ** 2))))


# -- polynomials ------------------------------------------------------------------

def test_poly_matches_sympy():
    X, Y = sp.symbols("X Y")
    expr = 3 * X ** 2 * Y - 2 * Y ** 3 + X + 5
    p = Poly(2, {(2, 1): 3.0, (0, 3): -2.0, (1, 0): 1.0, (0, 0): 5.0})
    for a, b in [(0.3, -1.2), (2.0, 0.5)]:
        assert p(a, b) == pytest.approx(float(expr.subs({X: a, Y: b})))
        assert p.diff(0)(a, b) == pytest.approx(float(sp.diff(expr, X).subs({X: a, Y: b})))
        assert (p * p)(a, b) == pytest.approx(float((expr ** 2).subs({X: a, Y: b})))
        assert p.mul_var(1, 2.0)(a, b) == pytest.approx(2 * b * p(a, b))
    assert p.degree() == 3 and p.degree(0) == 2


def test_poly_array_coefficients_broadcast():
    c = np.array([1.0, 2.0, 3.0])
    p = Poly.constant(1, c) + Poly.variable(1, 0, c)
    np.testing.assert_allclose(p(2.0), 3 * c)


# -- reductions -------------------------------------------------------------------

@given(st.lists(st.floats(-1e6, 1e6), min_size=0, max_size=60))
def test_pairwise_sum_close_to_fsum(vals):
    assert pairwise_sum(np.array(vals, dtype=float)) == pytest.approx(math.fsum(vals), abs=1e-6)


def test_ordered_map_independent_of_workers():
    items = list(range(17))
    assert ordered_map(lambda v: v * v, items, workers=1) == ordered_map(lambda v: v * v, items, workers=4)
    assert [len(c) for c in chunks(items, 5)] == [5, 5, 5, 2]


# -- lattice ----------------------------------------------------------------------

def test_gram_validation():
    with pytest.raises(DomainError):
        GramMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DomainError):
        GramMatrix(np.array([[1.0, 0.0], [0.0, -1.0]]))


@given(taus)
def test_moduli_grams_have_unit_volume_and_are_semistable(tau):
    H = gram_from_tau(tau)
    assert H.det == pytest.approx(1.0, rel=1e-12)
    assert is_semistable(H)
    D = dual_gram(H)
    np.testing.assert_allclose(D.h @ H.h, np.eye(2), atol=1e-12)


def test_enumeration_matches_bruteforce():
    H = gram_from_tau((0.31, 0.97))
    pts, q = enumerate_points(H, 6.0, include_zero=True)
    brute = {(a, b) for a in range(-8, 9) for b in range(-8, 9)
             if norm_sq(H, [a, b]) <= 6.0}
    assert {tuple(p) for p in pts} == brute
    assert np.all(np.diff(q) >= -1e-15)


def test_shortest_vectors_and_min_norm():
    H = gram_from_tau((0.0, 1.0))          # square lattice
    assert min_norm(H) == pytest.approx(1.0)
    sv = shortest_vectors(H, 1.0)
    assert sorted(v for v, _ in sv) == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    with pytest.raises(DomainError):
        shortest_vectors(H, 0.0)


def test_unstable_lattice_detected():
    # y > 1: the second basis vector is shorter than the covolume allows
    H = GramMatrix(np.array([[4.0, 0.0], [0.0, 0.25]]))
    assert not is_semistable(H)


def test_enumeration_cap():
    H = GramMatrix(np.array([[1e-6, 0.0], [0.0, 1e-6]]))
    with pytest.raises(ResourceError):
        enumerate_points(H, 1.0, cap=1000)


# -- moduli quadrature ------------------------------------------------------------

def test_d1_volume_converges():
    g = build_grid(4)
    assert volume_m1(g) == pytest.approx(VOLUME_D1, abs=1e-12)
    assert VOLUME_D1 == pytest.approx(math.pi / 3 - 1)


def test_grid_nodes_inside_d1():
    g = build_grid(3)
    assert np.all(contains_d1(g.x, g.y))
    assert np.all(g.weight >= 0)
    assert np.all(g.weight[g.level >= 1] > 0)


def test_moduli_integral_against_monte_carlo():
    # 1/y against dx dy / y^2 is the plain area integral of y^-3; compare with uniform sampling
    g = build_grid(4)
    val, err = integrate_moduli(lambda t: 1.0 / t.imag, g)
    rng = np.random.default_rng(1)
    x = rng.uniform(-0.5, 0.5, 400_000)
    y = rng.uniform(math.sqrt(0.75), 1.0, 400_000)
    inside = x * x + y * y >= 1
    box = 1.0 - math.sqrt(0.75)
    mc = np.mean(np.where(inside, 1.0 / y ** 3, 0.0)) * box
    se = np.std(np.where(inside, 1.0 / y ** 3, 0.0)) * box / math.sqrt(len(x))
    assert abs(val.real - mc) < 4 * se
    assert err < 1e-10


def test_moduli_integral_exact_for_x_polynomial():
    # int_{D1} x^2 dx dy / y^2 has a closed form via sympy
    X = sp.symbols("x")
    Y = sp.symbols("y", positive=True)
    exact = sp.integrate(sp.integrate(X ** 2 / Y ** 2, (Y, sp.sqrt(1 - X ** 2), 1)), (X, -sp.Rational(1, 2), sp.Rational(1, 2)))
    val, _ = integrate_moduli(lambda t: t.real ** 2, build_grid(4))
    assert val.real == pytest.approx(float(exact), abs=1e-12)


def test_nonfinite_integrand_reports_node():
    with pytest.raises(EvaluationError) as exc:
        integrate_moduli(lambda t: np.where(t.real > 0.4, np.nan, 1.0), build_grid(2))
    assert exc.value.node is not None


def test_grid_roundtrip(tmp_path):
    g = build_grid(2)
    p = tmp_path / "grid.csv"
    g.dump_csv(p)
    h = ModuliGrid.load_csv(p)
    np.testing.assert_array_equal(h.x, g.x)
    np.testing.assert_array_equal(h.weight, g.weight)
    assert h.levels == g.levels


def test_rank1_grid_is_single_point():
    g = rank1_grid()
    assert g.rank == 1 and g.size == 1 and volume_m1(g) == 1.0


def test_build_grid_validation():
    with pytest.raises(DomainError):
        build_grid(0)
    with pytest.raises(DomainError):
        build_grid(2, "simpson")
