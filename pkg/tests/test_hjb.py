import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import oracles
from gompertz_opt.baseline import c0, u0, u0_derivative
from gompertz_opt.errors import BracketBreach, ConditionError, ConvergenceError, DomainError, ExtrapolationError
from gompertz_opt.hjb import (
    CSV_HEADER,
    beta_g,
    ode_residual,
    read_policy_csv,
    second_divided_differences,
    solve_du,
    solve_u_star,
)
from gompertz_opt.model import CALIBRATED_PARAMS, EfficacyModel, GridSpec


def test_beta_g_frozen(params, efficacy):
    assert beta_g(params, efficacy) == pytest.approx(oracles.BETA_G, rel=1e-13)
    assert beta_g(params, EfficacyModel.zero()) == params.beta


def test_beta_g_affine_in_conjugate(params):
    # S scales as a^(1/(1-q)), so a * 2^(1-q) doubles it; a = 0.06 keeps both well posed
    efficacy = EfficacyModel.isoelastic(0.06, 0.46)
    doubled = EfficacyModel.isoelastic(0.06 * 2 ** (1 - 0.46), 0.46)
    s = efficacy.conjugate(params.k)[0]
    assert doubled.conjugate(params.k)[0] == pytest.approx(2 * s, rel=1e-13)
    assert beta_g(params, doubled) == pytest.approx(beta_g(params, efficacy) - s, rel=1e-12)


def test_beta_g_requires_well_posed(params):
    with pytest.raises(ConditionError):
        beta_g(params, EfficacyModel.isoelastic(1.0, 0.46))


def test_residual_zero_efficacy_on_u0(params):
    zero = EfficacyModel.zero()
    for m in (1e-3, 0.1, 2.0):
        u, du = u0(m, params), u0_derivative(m, params)
        assert abs(ode_residual(m, u, du, params, zero)) < 1e-9 * u * u


def test_residual_isoelastic_formula(params, efficacy):
    m, u, du = 0.3, 0.2, 0.25
    k, a, q = params.k, 0.1, 0.46
    s = m * du
    expected = (u * u - c0(m, params) * u - params.beta * s
                + (1 - q) / q * a ** (1 / (1 - q)) * (k * u) ** (-q / (1 - q)) * s ** (1 / (1 - q)))
    assert ode_residual(m, u, du, params, efficacy) == pytest.approx(expected, rel=1e-13)


def test_c0_is_subsolution_and_c0_plus_beta_supersolution(params, efficacy):
    slope = params.mortality_slope
    for m in np.geomspace(1e-4, 50.0, 30):
        base = c0(m, params)
        assert ode_residual(m, base, slope, params, efficacy) < 0
        assert ode_residual(m, base + params.beta, slope, params, efficacy) > 0


def test_residual_rejects_nonpositive_slope(params, efficacy):
    with pytest.raises(DomainError):
        ode_residual(1.0, 0.5, 0.0, params, efficacy)


def test_solve_du_zero_efficacy_exact(params):
    m, u = 0.5, 0.3
    expected = (u * u - c0(m, params) * u) / params.beta / m
    assert solve_du(m, u, params, EfficacyModel.zero()) == pytest.approx(expected, rel=1e-15)


def test_solve_du_continuation_in_a(params):
    m, u = 0.5, c0(0.5, params) + 0.04
    limit = (u * u - c0(m, params) * u) / params.beta / m
    slopes = [solve_du(m, u, params, EfficacyModel.isoelastic(a, 0.46)) for a in (1e-2, 1e-4, 1e-6)]
    gaps = [abs(s - limit) for s in slopes]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-6 * limit
    # the healthcare term is positive, so the root lies above the no-healthcare slope
    assert all(s >= limit for s in slopes)


def test_solve_du_breaches(params, efficacy):
    m = 1.0
    with pytest.raises(BracketBreach) as low:
        solve_du(m, c0(m, params) * 0.99, params, efficacy)
    assert low.value.side == "low"
    with pytest.raises(BracketBreach) as high:
        solve_du(m, c0(m, params) + 2 * params.beta, params, efficacy)
    assert high.value.side == "high"


def test_solve_du_consistent_on_curve(curve, params, efficacy):
    for i in (10, 100, 200, 255):
        m, u = curve.nodes[i], curve.u[i]
        du = solve_du(m, u, params, efficacy)
        assert abs(ode_residual(m, u, du, params, efficacy)) <= 1e-8 * u * u


def test_curve_invariants(curve, params):
    assert np.all(np.diff(curve.u) > 0)
    assert np.max(second_divided_differences(curve.nodes, curve.u)) <= 1e-9
    assert np.max(np.abs(curve.residual) / curve.u ** 2) < 1e-8
    assert np.all(curve.u - curve.bracket_lo >= -1e-9)
    assert np.all(curve.bracket_hi - curve.u >= -1e-9)
    # strictly inside on the open interval
    assert np.all(curve.u > curve.bracket_lo) and np.all(curve.u < curve.bracket_hi)


def test_curve_limits(curve, params):
    assert curve.u[0] == pytest.approx(params.c_bar, rel=0.5)
    i10 = int(np.argmin(np.abs(curve.nodes - 10.0)))
    gap10 = curve.u_at(10.0) - c0(10.0, params)
    assert gap10 == pytest.approx(curve.beta_g, rel=0.02), i10
    elasticity = curve.nodes[-1] * curve.du[-1] / curve.u[-1]
    assert abs(elasticity - 1) < 0.05


def test_brackets_pin_the_zero_hazard_limit(curve, params):
    # both brackets equal c_bar at m = 0, so the sandwich forces u*(0+) = c_bar
    assert u0(0.0, params, beta_override=curve.beta_g) == pytest.approx(params.c_bar, rel=1e-14)
    assert u0(0.0, params) == pytest.approx(params.c_bar, rel=1e-14)
    lo = u0(1e-12, params, beta_override=curve.beta_g)
    hi = u0(1e-12, params)
    assert params.c_bar < lo < hi < 1.05 * params.c_bar


def test_anchor_interval_shrinks(curve):
    widths = np.array(curve.trace)
    assert np.all(np.diff(widths) <= 0)
    lo, hi = curve.anchor_interval
    assert lo <= curve.u[-1] <= hi


def test_zero_efficacy_through_shooting(zero_curve, params):
    np.testing.assert_allclose(zero_curve.u, u0(zero_curve.nodes, params), rtol=1e-7)
    assert zero_curve.method == "shoot"


def test_degenerate_a_dispatches_to_quadrature(params):
    curve = solve_u_star(params, EfficacyModel.isoelastic(0.0, 0.46), GridSpec(n_points=64))
    assert curve.method == "quadrature"
    np.testing.assert_allclose(curve.u, u0(curve.nodes, params), rtol=1e-12)
    assert np.all(curve.h == 0)


def test_tiny_a_matches_baseline(params):
    curve = solve_u_star(params, EfficacyModel.isoelastic(1e-9, 0.46), GridSpec(n_points=64))
    np.testing.assert_allclose(curve.u, u0(curve.nodes, params), rtol=1e-7)


def test_grid_refinement(params, efficacy):
    coarse = solve_u_star(params, efficacy, GridSpec(n_points=129))
    fine = solve_u_star(params, efficacy, GridSpec(n_points=257))
    np.testing.assert_allclose(fine.nodes[::2], coarse.nodes, rtol=1e-13)
    np.testing.assert_allclose(fine.u[::2], coarse.u, rtol=1e-6)


@pytest.mark.parametrize("which", ["beta_g", "mid", "beta"])
def test_supersolution_frontier(which, params, efficacy):
    bg = beta_g(params, efficacy)
    alpha = {"beta_g": bg, "mid": 0.5 * (bg + params.beta), "beta": params.beta}[which]
    for m in np.geomspace(1e-5, 20.0, 100):
        assert ode_residual(m, c0(m, params) + alpha, params.mortality_slope, params, efficacy) > 0


def test_half_beta_g_is_not_a_supersolution(params, efficacy):
    alpha = 0.5 * beta_g(params, efficacy)
    res = [ode_residual(m, c0(m, params) + alpha, params.mortality_slope, params, efficacy)
           for m in np.geomspace(1e-5, 20.0, 100)]
    assert min(res) < 0


def test_interpolation_and_range(curve):
    m = np.sqrt(curve.nodes[100] * curve.nodes[101])
    assert curve.u[100] < curve.u_at(m) < curve.u[101]
    assert curve.u_at(curve.nodes[50]) == pytest.approx(curve.u[50], rel=1e-14)
    with pytest.raises(ExtrapolationError):
        curve.u_at(25.0)
    with pytest.raises(ExtrapolationError):
        curve.du_at(1e-7)


def test_csv_roundtrip(tmp_path, curve):
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    data = read_policy_csv(path)
    np.testing.assert_array_equal(data["u"], curve.u)
    np.testing.assert_array_equal(data["m"], curve.nodes)
    np.testing.assert_array_equal(data["c"], curve.u)


def test_validation_failure(params):
    with pytest.raises(ConditionError):
        solve_u_star(params, EfficacyModel.isoelastic(1.0, 0.46))


def test_unreachable_tolerance_raises_with_trace(params, efficacy):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ConvergenceError) as info:
            solve_u_star(params, efficacy, GridSpec(n_points=32), tol=1e-20)
    assert info.value.trace


@settings(max_examples=6, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(a=st.floats(0.02, 0.15), q=st.floats(0.3, 0.6))
def test_invariants_across_efficacy(a, q):
    eff = EfficacyModel.isoelastic(a, q)
    params = CALIBRATED_PARAMS
    h = eff.inverse_marginal(params.k)
    if eff.g(h) >= 0.95 * params.beta:
        return
    curve = solve_u_star(params, eff, GridSpec(n_points=64), tol=1e-7)
    assert np.all(np.diff(curve.u) > 0)
    assert np.all(curve.u >= curve.bracket_lo - 1e-9)
    assert np.all(curve.u <= curve.bracket_hi + 1e-9)
    assert np.all(np.diff(curve.h) >= -1e-12)
