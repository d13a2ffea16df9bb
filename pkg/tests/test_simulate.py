import math

import numpy as np
import pytest
from scipy import stats

import oracles
from gompertz_opt.errors import DomainError
from gompertz_opt.model import CALIBRATED_PARAMS, EfficacyModel
from gompertz_opt.simulate import (
    Analytic,
    ConstantRates,
    Custom,
    ScaleC,
    SimConfig,
    optimality_probe,
    simulate,
)

ZERO = EfficacyModel.zero()
M_INIT = 0.01


def gompertz_survival(t, m, beta):
    return np.exp(-m * np.expm1(beta * t) / beta)


def test_same_seed_reproduces_bit_for_bit(params, efficacy, curve):
    cfg = SimConfig(n_paths=2000, horizon=100, seed=7, block_size=500)
    a = simulate(params, efficacy, Analytic(curve), cfg)
    b = simulate(params, efficacy, Analytic(curve), SimConfig(**{**cfg.__dict__, "workers": 3}))
    assert np.array_equal(a.welfare, b.welfare)
    assert np.array_equal(a.death_flat, b.death_flat)
    c = simulate(params, efficacy, Analytic(curve), SimConfig(**{**cfg.__dict__, "seed": 8}))
    assert not np.array_equal(a.welfare, c.welfare)


def test_no_wealth_loss_makes_welfare_deterministic():
    params = CALIBRATED_PARAMS.replace(zeta=1.0, beta=0.0)
    c, horizon = 0.03, 80.0
    out = simulate(params, ZERO, ConstantRates(c), SimConfig(n_paths=200, horizon=horizon, m_init=M_INIT))
    gamma = params.gamma
    rho = params.delta - (1 - gamma) * (params.r - c)
    expected = c ** (1 - gamma) / (1 - gamma) * -math.expm1(-rho * horizon) / rho
    assert out.std_err < 1e-12
    np.testing.assert_allclose(out.welfare, expected, rtol=1e-10)


def test_first_death_follows_gompertz_law(params):
    out = simulate(params, ZERO, ConstantRates(0.02), SimConfig(n_paths=4000, horizon=150, m_init=M_INIT, seed=3))
    tau = out.first_death
    assert np.all(np.isfinite(tau))
    cdf = lambda t: 1.0 - gompertz_survival(t, M_INIT, params.beta)
    assert stats.kstest(tau, cdf).pvalue > 0.001
    for t in (10.0, 20.0, 40.0):
        p = gompertz_survival(t, M_INIT, params.beta)
        se = math.sqrt(p * (1 - p) / tau.size)
        assert abs(np.mean(tau > t) - p) < 4 * se


def test_death_times_are_increasing(params, efficacy, curve):
    out = simulate(params, efficacy, Analytic(curve), SimConfig(n_paths=500, horizon=200, m_init=0.05))
    assert sum(len(d) for d in out.death_times) == out.n_deaths.sum()
    for d in out.death_times:
        assert np.all(np.diff(d) > 0)


def test_engines_agree_on_common_random_numbers(params, efficacy, curve):
    cfg = SimConfig(n_paths=300, horizon=60, seed=11)
    det = simulate(params, ZERO, ConstantRates(0.03), SimConfig(**{**cfg.__dict__, "m_init": M_INIT}))
    step = simulate(params, ZERO, Custom(lambda t, m, n: (0.03, 0.0), pi=0.0),
                    SimConfig(**{**cfg.__dict__, "m_init": M_INIT}))
    np.testing.assert_allclose(step.welfare, det.welfare, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(step.first_death, det.first_death, rtol=1e-9)


def test_constant_hazard_value_matches_closed_form():
    params = CALIBRATED_PARAMS.replace(beta=0.0)
    m = 0.02
    c = oracles.C0_AT_002
    out = simulate(params, ZERO, ConstantRates(c), SimConfig(n_paths=4000, horizon=150, m_init=m, seed=5))
    assert out.completed_mean == pytest.approx(oracles.V_CONST_002, abs=3 * out.completed_std_err)
    assert abs(out.mean - oracles.V_CONST_002) <= 3 * out.std_err + out.truncation_bound


def test_truncation_bound_covers_the_exact_remainder(params, efficacy, curve):
    out = simulate(params, efficacy, Analytic(curve), SimConfig(n_paths=1000, horizon=40, m_init=M_INIT))
    assert np.all(np.abs(out.continuation) <= out.tail * (1 + 1e-12))
    assert out.truncation_bound > 0


def test_invalid_custom_policy_is_rejected(params):
    bad = Custom(lambda t, m, n: (np.where(t > 1.0, -0.1, 0.02), 0.0))
    with pytest.raises(DomainError, match="invalid rates"):
        simulate(params, ZERO, bad, SimConfig(n_paths=10, horizon=5, m_init=M_INIT))


def test_unit_scaling_is_the_identity(params, efficacy, curve):
    probe = optimality_probe(params, efficacy, curve, ScaleC(1.0), SimConfig(n_paths=200, horizon=50))
    assert probe.gap == 0.0
    assert not probe.significant_worse
    with pytest.raises(DomainError):
        optimality_probe(params, efficacy, curve, ScaleC(2.5), SimConfig(n_paths=10))


def test_outcome_csv(tmp_path, params, efficacy, curve):
    out = simulate(params, efficacy, Analytic(curve), SimConfig(n_paths=50, horizon=30))
    out.to_csv(tmp_path / "s.csv")
    out.paths_to_csv(tmp_path / "p.csv")
    head, row = (tmp_path / "s.csv").read_text().splitlines()
    assert head.split(",")[:3] == ["n_paths", "mean", "std_err"]
    assert float(row.split(",")[1]) == out.mean
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 51


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(n_paths=0)
    with pytest.raises(DomainError):
        simulate(CALIBRATED_PARAMS, ZERO, ConstantRates(0.02), SimConfig(n_paths=10, risky=True))
