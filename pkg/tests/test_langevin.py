import math

import numpy as np
import pytest

from oracles import ou_stationary_variance
from nzlab.errors import BlowUpError, DomainError
from nzlab.langevin import (FPGrid1D, LangevinConfig, SDEModel, adjoint_residual, backward_apply,
                            fp_solve_1d, fp_vs_histogram, increment_correlation, km_estimate,
                            km_theoretical, make_model, reconstruct_model, run_config, simulate,
                            write_km_csv, write_moments_csv)


def test_brownian_equipartition():
    m = make_model("brownian", m=2.0, alpha=3.0, gammaT=0.7)
    ens = simulate(m, [0.0], 0.01, 400, 40_000, seed=3)
    v2, se = ens.moments[-1, 1, 0], ens.moment_se[-1, 1, 0]
    assert abs(v2 - 0.7 / 2.0) <= 3 * se


def test_ou_mean_relaxation():
    m = make_model("ou", theta=1.5, sigma=0.8)
    ens = simulate(m, [2.0], 0.005, 200, 20_000, seed=1, record_every=50)
    expected = 2.0 * np.exp(-1.5 * ens.times)
    assert np.all(np.abs(ens.moments[:, 0, 0] - expected) <= 4 * ens.moment_se[:, 0, 0] + 1e-4)
    assert ou_stationary_variance(1.5, 0.8) == pytest.approx(0.8 ** 2 / 1.5)


def test_wiener_variance_and_independent_increments():
    ens = simulate(make_model("wiener"), [0.0], 0.01, 100, 20_000, seed=2, store_paths=True)
    assert abs(ens.moments[-1, 1, 0] - 2.0) <= 3 * ens.moment_se[-1, 1, 0]
    r, se = increment_correlation(ens, [(0, 40), (50, 100)])
    assert abs(r) <= 4 * se
    with pytest.raises(DomainError):
        increment_correlation(ens, [(0, 60), (50, 100)])


def test_stratonovich_versus_ito_mean():
    # g = x: the Stratonovich mean grows like e^t, the Ito mean stays put
    m = make_model("multiplicative")
    strat = simulate(m, [1.0], 0.002, 250, 20_000, seed=4)
    ito = simulate(m, [1.0], 0.002, 250, 20_000, seed=4, scheme="ito")
    assert abs(strat.moments[-1, 0, 0] - math.e ** 0.5) <= 4 * strat.moment_se[-1, 0, 0]
    assert abs(ito.moments[-1, 0, 0] - 1.0) <= 4 * ito.moment_se[-1, 0, 0]


def test_results_independent_of_worker_count():
    m = make_model("ou")
    a = simulate(m, [0.5], 0.01, 20, 9000, seed=7, workers=1)
    b = simulate(m, [0.5], 0.01, 20, 9000, seed=7, workers=3)
    np.testing.assert_array_equal(a.moments, b.moments)


def test_blow_up_is_reported():
    m = SDEModel("cubic", 1, lambda x: x ** 3, lambda x: np.zeros((len(x), 1, 1)),
                 lambda x: np.zeros((len(x), 1, 1, 1)), {})
    with np.errstate(all="ignore"), pytest.raises(BlowUpError) as exc:
        simulate(m, [10.0], 0.1, 50, 4)
    assert exc.value.step is not None


def test_simulation_validation():
    with pytest.raises(DomainError):
        simulate(make_model("ou"), [0.0], -0.1, 10, 10)
    with pytest.raises(DomainError):
        simulate(make_model("ou"), [0.0], 0.1, 10, 0)
    with pytest.raises(DomainError):
        make_model("levy")


def test_km_recovers_ou_coefficients():
    m = make_model("ou", theta=1.0, sigma=1.0)
    ens = simulate(m, [0.0], 0.01, 300, 4000, seed=5, store_paths=True)
    ens.stationary_from = 100
    for order in (1, 2, 3, 4):
        est = km_estimate(ens, order, bins=6, target=lambda x, o=order: {1: -x, 2: np.ones_like(x)}.get(o, 0 * x))
        z = np.abs(est.value - est.target) / est.err
        assert np.mean(z <= 3) >= 5 / 6, (order, z)


def test_km_theoretical_spurious_drift():
    D1, D2 = km_theoretical(make_model("multiplicative", h0=0.2), np.array([[2.0]]))
    assert D1[0, 0] == pytest.approx(0.2 + 2.0)
    assert D2[0, 0, 0] == pytest.approx(4.0)


def test_reconstruct_model_roundtrip():
    m = make_model("ou2d")
    x = np.array([[0.3, -0.4], [1.0, 0.2]])
    D1, D2 = km_theoretical(m, x)
    r = reconstruct_model(lambda y: km_theoretical(m, y)[0], lambda y: km_theoretical(m, y)[1], 2)
    R1, R2 = km_theoretical(r, x)
    np.testing.assert_allclose(R1, D1, atol=1e-8)
    np.testing.assert_allclose(R2, D2, atol=1e-12)


def test_fp_solver_reaches_ou_stationary_density():
    g = FPGrid1D(-6, 6, 600, 0.01)
    x = g.x
    W0 = np.exp(-(x - 1.5) ** 2 / 0.1)
    W0 /= W0.sum() * g.dx
    W = fp_solve_1d(lambda y: -y, lambda y: np.ones_like(y), W0, g, 10.0)
    exact = np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    assert np.sum(np.abs(W - exact)) * g.dx < 1e-3
    assert np.sum(W) * g.dx == pytest.approx(1.0, abs=1e-10)


def test_fp_explicit_stability_guard():
    g = FPGrid1D(-3, 3, 200, 0.5)
    W0 = np.full(200, 1 / 6)
    with pytest.raises(DomainError):
        fp_solve_1d(lambda y: -y, lambda y: np.ones_like(y), W0, g, 1.0, scheme="explicit")
    with pytest.raises(DomainError):
        fp_solve_1d(lambda y: -y, lambda y: np.ones_like(y), 2 * W0, g, 1.0)


def test_fp_matches_simulation_histogram():
    m = make_model("ou")
    ens = simulate(m, [1.0], 0.01, 200, 40_000, seed=11, store_paths=True, record_every=10)
    _, _, _, l1 = fp_vs_histogram(m, ens)
    assert l1 < 0.05


def test_adjoint_residual():
    x = np.linspace(-8, 8, 1601)
    W = np.exp(-x * x / 2)
    f = np.exp(-(x - 0.5) ** 2) * x
    D1 = lambda y: -y
    D2 = lambda y: 1 + 0.2 * np.tanh(y)
    assert adjoint_residual(D1, D2, W, f, x) <= 1e-6
    assert adjoint_residual(D1, D2, W, f, x, convention="printed") > 1e-2


def test_backward_apply_conventions():
    x = np.array([0.3, 1.1])
    f, df, d2f = np.sin, np.cos, lambda y: -np.sin(y)
    D1, D2 = (lambda y: -y), (lambda y: 2 + 0 * y)
    a = backward_apply(D1, D2, f, x, df=df, d2f=d2f)
    np.testing.assert_allclose(a, -x * np.cos(x) - 2 * np.sin(x))
    b = backward_apply(D1, D2, f, x, convention="printed", df=df, d2f=d2f)
    np.testing.assert_allclose(b, x * np.cos(x) - 2 * np.sin(x))
    np.testing.assert_allclose(backward_apply(D1, D2, f, x), a, atol=1e-5)


def test_config_roundtrip_and_outputs(tmp_path):
    cfg = LangevinConfig(model="ou", steps=50, paths=500, seed=9)
    again = LangevinConfig.from_json(cfg.to_json())
    assert again == cfg
    with pytest.raises(DomainError):
        LangevinConfig.from_json('{"model": "ou", "bogus": 1}')
    ens = run_config(cfg)
    with open(tmp_path / "m.csv", "w", newline="") as fh:
        write_moments_csv(ens, fh)
    with open(tmp_path / "k.csv", "w", newline="") as fh:
        write_km_csv([km_estimate(ens, 1, bins=4, min_count=10)], fh)
    assert (tmp_path / "m.csv").read_text().startswith("t,component,m1")
    assert len((tmp_path / "k.csv").read_text().splitlines()) == 5


def test_averaged_force_report_rank1():
    from nzlab.moduli import rank1_grid
    from nzlab.langevin import averaged_force_report
    rep = averaged_force_report(rank1_grid(), paths=4000, seed=1)
    assert rep["nodes"] == 1 and rep["max_z"] <= 4
