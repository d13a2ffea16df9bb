"""Economic outputs derived from a solved :class:`PolicyCurve`."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, ExtrapolationError, IntegrationError
from .hjb import PolicyCurve, health_rate
from .model import EfficacyModel, ModelParams

PROFILE_HEADER = ("age", "mortality", "c", "h", "share")
PLOT_HEADER = PROFILE_HEADER + ("log_mortality", "gompertz_mortality", "log_gompertz")


def controls(m, curve: PolicyCurve, efficacy: EfficacyModel | None = None):
    """Optimal consumption and healthcare rates (fractions of wealth) at hazard ``m``."""
    efficacy = curve.efficacy if efficacy is None else efficacy
    u = curve.u_at(m)
    du = curve.du_at(m)
    h = health_rate(m, u, du, curve.params, efficacy)
    return u, (float(h) if np.ndim(h) == 0 else h)


def mortality_growth(m, curve: PolicyCurve, efficacy: EfficacyModel | None = None):
    """Growth rate of the hazard under optimal healthcare, β - g(ĥ(m))."""
    efficacy = curve.efficacy if efficacy is None else efficacy
    _, h = controls(m, curve, efficacy)
    return curve.params.beta - efficacy.g(h)


@dataclass(frozen=True)
class AgeProfile:
    ages: np.ndarray
    mortality: np.ndarray
    consumption_rate: np.ndarray
    health_rate: np.ndarray
    health_share: np.ndarray
    beta: float = math.nan
    anchor: tuple[float, float] = (math.nan, math.nan)

    def gompertz(self) -> np.ndarray:
        """Pure Gompertz hazard through the same anchor."""
        age0, m0 = self.anchor
        return m0 * np.exp(self.beta * (self.ages - age0))

    def to_csv(self, path: str | Path, plot_columns: bool = False):
        cols = [self.ages, self.mortality, self.consumption_rate, self.health_rate, self.health_share]
        header = PROFILE_HEADER
        if plot_columns:
            gomp = self.gompertz()
            cols += [np.log(self.mortality), gomp, np.log(gomp)]
            header = PLOT_HEADER
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in zip(*cols):
                writer.writerow([repr(float(v)) for v in row])


def endogenous_mortality(params: ModelParams, efficacy: EfficacyModel, curve: PolicyCurve,
                         age_span: tuple[float, float], anchor: tuple[float, float],
                         ages=None, rtol: float = 1e-10) -> AgeProfile:
    """Hazard path dM = (β - g(ĥ(M))) M dt through ``anchor = (age, hazard)``.

    ``ages`` defaults to whole years in ``age_span``. The hazard must stay
    within the solved range of ``curve``; leaving it raises ExtrapolationError.
    """
    t0, t1 = map(float, age_span)
    if not t1 > t0:
        raise DomainError(f"age span must be increasing, got {age_span}")
    age0, m_anchor = map(float, anchor)
    if not curve.m_min <= m_anchor <= curve.m_max:
        raise ExtrapolationError(f"anchor hazard {m_anchor} outside [{curve.m_min}, {curve.m_max}]")
    ages = np.arange(math.ceil(t0), math.floor(t1) + 1, dtype=float) if ages is None else np.asarray(ages, float)
    if ages.size == 0 or np.any(np.diff(ages) <= 0):
        raise DomainError("ages must be a nonempty ascending sequence")

    max_step = float(np.min(np.diff(ages))) if ages.size > 1 else np.inf
    beta = params.beta
    x_lo, x_hi = math.log(curve.m_min), math.log(curve.m_max)

    def rhs(_t, y):
        if efficacy.is_zero:
            return [beta]
        m = math.exp(min(max(y[0], x_lo), x_hi))
        return [beta - float(efficacy.g(controls(m, curve, efficacy)[1]))]

    def leave_top(_t, y):
        return y[0] - x_hi
    leave_top.terminal = True

    def leave_bottom(_t, y):
        return y[0] - x_lo
    leave_bottom.terminal = True

    log_m = np.empty_like(ages)
    y0 = math.log(m_anchor)
    for mask, end in ((ages >= age0, ages[-1]), (ages < age0, ages[0])):
        if not mask.any():
            continue
        t_eval = ages[mask] if end >= age0 else ages[mask][::-1]
        if end == age0:
            log_m[mask] = y0
            continue
        # dense output between long steps is far less accurate than rtol
        sol = solve_ivp(rhs, (age0, end), [y0], method="RK45", rtol=rtol, atol=1e-12,
                        t_eval=t_eval, events=(leave_top, leave_bottom), max_step=max_step)
        if sol.status == 1:
            age_hit = float(sol.t_events[0][0] if sol.t_events[0].size else sol.t_events[1][0])
            raise ExtrapolationError(
                f"hazard leaves the solved range [{curve.m_min:.3g}, {curve.m_max:.3g}] at age {age_hit:.2f}"
            )
        if not sol.success:
            last = float(sol.t[-1]) if sol.t.size else age0
            raise IntegrationError(f"mortality integration failed: {sol.message}", last_good=last)
        vals = sol.y[0] if end >= age0 else sol.y[0][::-1]
        log_m[mask] = vals

    mortality = np.exp(log_m)
    c, h = controls(np.clip(mortality, curve.m_min, curve.m_max), curve, efficacy)
    c = np.asarray(c, dtype=float)
    h = np.asarray(h, dtype=float)
    return AgeProfile(ages=ages, mortality=mortality, consumption_rate=c, health_rate=h,
                      health_share=h / (c + h), beta=beta, anchor=(age0, m_anchor))


def portfolio_and_equivalent_rate(params: ModelParams) -> tuple[float, float]:
    """Merton fraction μ/(γσ²) and the equivalent safe rate r + μ²/(2γσ²)."""
    if params.mu == 0:
        return 0.0, params.r
    if not params.sigma > 0:
        raise DomainError("sigma must be > 0 when mu != 0")
    return params.mu / (params.gamma * params.sigma ** 2), params.r_eq


def value_function(x, m, curve: PolicyCurve):
    """V(x, m) = x^(1-γ)/(1-γ) u*(m)^(-γ)."""
    gamma = curve.params.gamma
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("wealth must be >= 0")
    u = curve.u_at(m)
    out = x_arr ** (1.0 - gamma) / (1.0 - gamma) * np.asarray(u) ** (-gamma)
    return float(out) if np.ndim(out) == 0 else out
