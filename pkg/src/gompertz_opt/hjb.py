"""Reduced HJB equation of the full model (aging plus healthcare).

With V(x, m) = x^(1-γ)/(1-γ) u(m)^(-γ) the problem reduces to the
first-order ODE

    L u = u^2 - c0 u + m u' (S(k u / (m u')) - β) = 0,   k = (1-γ)/γ,

where S(y) = sup_h {g(h) - y h}. Writing s = m u' (the slope in log m),
L u = 0 is the scalar equation

    φ(s) = (u^2 - c0 u) - β s + s S(k u / s) = 0,

convex in s with φ'(s) = g(I(k u / s)) - β. The optimal solution follows
the smaller root, the branch that tends to (u^2 - c0 u)/β as g -> 0.

The increasing solution defined on all of (0, ∞) is a saddle path: its
neighbours blow up or fall below c0 as m grows. We therefore bisect the
value at the largest node by integrating *forward* and watching which way
trial solutions leave, then integrate *backward*, which contracts errors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline, PchipInterpolator

from .baseline import c0 as _checked_c0
from .baseline import u0, u0_derivative
from .errors import BracketBreach, ConvergenceError, DomainError, ExtrapolationError
from .model import AgingHealth, EfficacyModel, GridSpec, ModelParams, validate

CSV_HEADER = ("m", "u", "du", "c", "h", "residual", "bracket_lo", "bracket_hi")

# below this conjugate value the healthcare term is numerically invisible
DEGENERATE_S = 1e-12
# forward integration span (in log m) used to classify a trial value
CLASSIFY_SPAN = 6.0
# u* touches its upper bracket when a = 0, so the 1e-9 sandwich slack needs a tight stepper
RTOL_FACTOR = 1e-3
MAX_BISECTIONS = 200
SANDWICH_SLACK = 1e-9
CONCAVITY_SLACK = 1e-9


class SlopeEquation:
    """Solve φ(s) = 0 for s = m u' at given (m, u).

    Constants that depend only on (params, efficacy) are computed once, so
    the right-hand side of the ODE stays cheap inside the integrator.
    """

    def __init__(self, params: ModelParams, efficacy: EfficacyModel):
        self.params = params
        self.efficacy = efficacy
        self.beta = params.beta
        self.k = params.k
        self.c_bar = params.c_bar
        self.slope = params.mortality_slope
        self.zero = efficacy.is_zero
        self.iso = efficacy.kind == "isoelastic" and not self.zero
        if self.iso:
            a, q = efficacy.a, efficacy.q
            self.power = 1.0 / (1.0 - q)
            self.coef = (1.0 - q) / q * a ** self.power
            self.u_exp = -q / (1.0 - q)
        if not self.zero:
            h_beta = efficacy.level_inverse(self.beta)
            # φ has its minimum where g(I(k u / s)) = β, i.e. s = k u / g'(g^{-1}(β))
            self.dg_beta = float(efficacy.dg(h_beta)) if math.isfinite(h_beta) else 0.0

    def c0(self, m: float) -> float:
        return self.c_bar + self.slope * m

    def phi(self, s: float, u: float, A: float) -> float:
        if self.zero or s == 0.0:
            return A - self.beta * s
        if self.iso:
            return A - self.beta * s + self.coef * (self.k * u) ** self.u_exp * s ** self.power
        y = self.k * u / s
        return A - self.beta * s + s * self.efficacy.conjugate(y)[0]

    def dphi(self, s: float, u: float) -> float:
        if self.zero or s == 0.0:
            return -self.beta
        if self.iso:
            return -self.beta + self.power * self.coef * (self.k * u) ** self.u_exp * s ** (self.power - 1.0)
        h = self.efficacy.inverse_marginal(self.k * u / s)
        return float(self.efficacy.g(h)) - self.beta

    def s_min(self, u: float) -> float:
        if self.zero or self.dg_beta == 0.0:
            return math.inf
        return self.k * u / self.dg_beta

    def solve(self, m: float, u: float) -> float:
        """Smaller nonnegative root s of φ; raises BracketBreach when none exists."""
        A = u * (u - self.c0(m))
        if A < 0:
            raise BracketBreach(f"u = {u!r} below c0 at m = {m!r}", side="low")
        if self.zero:
            return A / self.beta
        if A == 0.0:
            return 0.0
        s_star = self.s_min(u)
        if math.isfinite(s_star) and self.phi(s_star, u, A) > 0:
            raise BracketBreach(f"no slope root at m = {m!r}, u = {u!r}", side="high")
        # Newton from s = 0 on a convex decreasing branch approaches the
        # smaller root monotonically from the left; the first step is A/β.
        s = A / self.beta
        for _ in range(200):
            f = self.phi(s, u, A)
            if f <= 0.0:
                break
            fp = self.dphi(s, u)
            if fp >= 0.0:
                break
            step = -f / fp
            s += step
            if step <= 1e-15 * s:
                break
        return s

    def solve_extended(self, m: float, u: float) -> float:
        """:meth:`solve`, continued past the breach boundaries.

        Used for trial stages of the backward integration so the step
        controller can reject them instead of aborting: below c0 the
        slope continues as A/β (A < 0), above the manifold it is pinned
        at the minimiser of φ, where the two roots merge.
        """
        try:
            return self.solve(m, u)
        except BracketBreach as exc:
            if exc.side == "low":
                return u * (u - self.c0(m)) / self.beta
            return self.s_min(u)

    def residual(self, m: float, u: float, du: float) -> float:
        if not du > 0:
            raise DomainError(f"residual needs du > 0, got {du}")
        s = m * du
        return self.phi(s, u, u * (u - self.c0(m)))


def beta_g(params: ModelParams, efficacy: EfficacyModel) -> float:
    """Healthcare-adjusted growth rate β - S((1-γ)/γ)."""
    validate(params, efficacy, AgingHealth()).raise_if_failed()
    return params.beta - efficacy.conjugate(params.k)[0]


def ode_residual(m: float, u: float, du: float, params: ModelParams, efficacy: EfficacyModel) -> float:
    """L u at a single point, given the value ``u`` and slope ``du``."""
    if not m > 0 or not u > 0:
        raise DomainError(f"residual needs m > 0 and u > 0, got m={m}, u={u}")
    return SlopeEquation(params, efficacy).residual(m, u, du)


def solve_du(m: float, u: float, params: ModelParams, efficacy: EfficacyModel) -> float:
    """Slope u'(m) on the no-healthcare continuation branch."""
    if not m > 0:
        raise DomainError(f"solve_du needs m > 0, got {m}")
    return SlopeEquation(params, efficacy).solve(m, u) / m


@dataclass(eq=False)
class PolicyCurve:
    """Tabulated solution on an ascending hazard grid."""

    nodes: np.ndarray
    u: np.ndarray
    du: np.ndarray
    h: np.ndarray
    residual: np.ndarray
    beta_g: float
    bracket_lo: np.ndarray
    bracket_hi: np.ndarray
    params: ModelParams | None = None
    efficacy: EfficacyModel | None = None
    anchor_interval: tuple[float, float] = (math.nan, math.nan)
    trace: list = field(default_factory=list)
    method: str = "shoot"

    def __post_init__(self):
        x = np.log(self.nodes)
        self._u_interp = PchipInterpolator(x, self.u, extrapolate=False)
        # a kinked u' stalls adaptive integrators of the hazard path
        self._du_interp = CubicSpline(x, self.du, extrapolate=False)

    @property
    def c(self) -> np.ndarray:
        return self.u

    @property
    def m_min(self) -> float:
        return float(self.nodes[0])

    @property
    def m_max(self) -> float:
        return float(self.nodes[-1])

    def _check_range(self, m):
        m_arr = np.asarray(m, dtype=float)
        lo, hi = self.m_min * (1 - 1e-12), self.m_max * (1 + 1e-12)
        if np.any(m_arr < lo) or np.any(m_arr > hi):
            raise ExtrapolationError(
                f"hazard outside the solved range [{self.m_min:.3g}, {self.m_max:.3g}]"
            )
        return np.clip(m_arr, self.m_min, self.m_max)

    def u_at(self, m):
        """Monotone cubic interpolation of u in log m."""
        m_arr = self._check_range(m)
        out = self._u_interp(np.log(m_arr))
        return float(out) if np.ndim(out) == 0 else out

    def du_at(self, m):
        """Cubic spline interpolation of u' in log m."""
        m_arr = self._check_range(m)
        out = self._du_interp(np.log(m_arr))
        return float(out) if np.ndim(out) == 0 else out

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for row in zip(self.nodes, self.u, self.du, self.u, self.h, self.residual,
                           self.bracket_lo, self.bracket_hi):
                writer.writerow([repr(float(v)) for v in row])


def read_policy_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected policy CSV header {header}")
        rows = np.array([[float(v) for v in row] for row in reader])
    return {name: rows[:, i] for i, name in enumerate(CSV_HEADER)}


def health_rate(m, u, du, params: ModelParams, efficacy: EfficacyModel):
    """ĥ = I(k u / (m u')), elementwise."""
    if efficacy.is_zero:
        return np.zeros_like(np.asarray(u, dtype=float))
    y = params.k * np.asarray(u, dtype=float) / (np.asarray(m, dtype=float) * np.asarray(du, dtype=float))
    if efficacy.kind == "isoelastic":
        return (efficacy.a / y) ** (1.0 / (1.0 - efficacy.q))
    return np.vectorize(efficacy.inverse_marginal, otypes=[float])(y)


def _integrate(eq: SlopeEquation, x0: float, x1: float, u_start: float, rtol: float, t_eval=None,
               extended: bool = False):
    slope = eq.solve_extended if extended else eq.solve

    def rhs(x, y):
        return [slope(math.exp(x), y[0])]

    return solve_ivp(rhs, (x0, x1), [u_start], method="RK45", rtol=rtol,
                     atol=rtol * eq.c_bar * 1e-3, t_eval=t_eval)


def _classify(eq: SlopeEquation, x_top: float, u_trial: float, rtol: float) -> int:
    """-1 if the trial falls below c0 going forward, +1 if it blows up, 0 if unresolved."""
    try:
        _integrate(eq, x_top, x_top + CLASSIFY_SPAN, u_trial, rtol)
    except BracketBreach as exc:
        return -1 if exc.side == "low" else 1
    return 0


def solve_u_star(params: ModelParams, efficacy: EfficacyModel, grid: GridSpec = GridSpec(),
                 tol: float = 1e-8, method: str = "auto") -> PolicyCurve:
    """Solve the reduced HJB equation on ``grid``.

    ``tol`` bounds max |L u| / u^2 over the nodes. ``method`` is ``"shoot"``
    (always integrate the ODE), ``"quadrature"`` (no-healthcare formula,
    only valid when the healthcare term vanishes) or ``"auto"``, which uses
    the quadrature when S((1-γ)/γ) is below 1e-12.
    """
    validate(params, efficacy, AgingHealth()).raise_if_failed()
    if method not in ("auto", "shoot", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    bg = beta_g(params, efficacy)
    s_k = efficacy.conjugate(params.k)[0]
    nodes = grid.nodes()
    eq = SlopeEquation(params, efficacy)
    rtol = tol * RTOL_FACTOR

    if method == "quadrature" or (method == "auto" and s_k < DEGENERATE_S):
        if s_k >= DEGENERATE_S:
            raise ValueError("quadrature route needs a vanishing healthcare term")
        u = u0(nodes, params)
        du = u0_derivative(nodes, params)
        trace, interval, used = [], (float(u[-1]), float(u[-1])), "quadrature"
    else:
        m_top = float(nodes[-1])
        x_top = math.log(m_top)
        lo = float(u0(m_top, params, beta_override=bg))
        hi = float(min(u0(m_top, params), eq.c0(m_top) + bg))
        if lo > hi:
            raise ConvergenceError(f"empty bracket at m = {m_top}: [{lo}, {hi}]")
        trace = [hi - lo]
        seed = 0.5 * (lo + hi)
        for _ in range(MAX_BISECTIONS):
            # backward integration contracts seed errors, so a width far
            # below tol suffices
            if hi - lo <= max(4 * np.finfo(float).eps, 1e-3 * tol) * hi:
                break
            seed = 0.5 * (lo + hi)
            side = _classify(eq, x_top, seed, rtol)
            if side == 0:
                break
            if side < 0:
                lo = seed
            else:
                hi = seed
            trace.append(hi - lo)
        else:
            raise ConvergenceError("bisection did not converge", trace)
        seed = 0.5 * (lo + hi)
        interval = (lo, hi)
        x_nodes = np.log(nodes)[::-1]
        try:
            sol = _integrate(eq, x_top, x_nodes[-1], seed, rtol, t_eval=x_nodes, extended=True)
        except Exception as exc:  # BracketBreach inside the backward pass
            raise ConvergenceError(f"backward integration failed: {exc}", trace) from exc
        if not sol.success or sol.y.shape[1] != nodes.size:
            raise ConvergenceError(f"backward integration failed: {sol.message}", trace)
        u = sol.y[0][::-1].copy()
        u[-1] = seed
        du = np.array([eq.solve(m, v) / m for m, v in zip(nodes, u)])
        used = "shoot"

    residual = np.array([eq.residual(m, v, d) for m, v, d in zip(nodes, u, du)])
    lo_b = np.asarray(u0(nodes, params, beta_override=bg))
    hi_b = np.minimum(np.asarray(u0(nodes, params)), eq.c0(nodes) + bg)
    curve = PolicyCurve(
        nodes=nodes, u=u, du=du, h=health_rate(nodes, u, du, params, efficacy),
        residual=residual, beta_g=bg, bracket_lo=lo_b, bracket_hi=hi_b,
        params=params, efficacy=efficacy, anchor_interval=interval, trace=trace, method=used,
    )
    _check_curve(curve, tol)
    return curve


def second_divided_differences(m: np.ndarray, u: np.ndarray) -> np.ndarray:
    slopes = np.diff(u) / np.diff(m)
    return 2.0 * np.diff(slopes) / (m[2:] - m[:-2])


def _check_curve(curve: PolicyCurve, tol: float):
    problems = []
    rel = np.abs(curve.residual) / curve.u ** 2
    if np.max(rel) > tol:
        problems.append(f"max |L u|/u^2 = {np.max(rel):.3g} > {tol:.3g}")
    if np.any(np.diff(curve.u) <= 0):
        problems.append("u is not strictly increasing")
    if np.max(second_divided_differences(curve.nodes, curve.u)) > CONCAVITY_SLACK:
        problems.append("u is not concave")
    if np.min(curve.u - curve.bracket_lo) < -SANDWICH_SLACK:
        problems.append("u below the lower bracket")
    if np.min(curve.bracket_hi - curve.u) < -SANDWICH_SLACK:
        problems.append("u above the upper bracket")
    if problems:
        raise ConvergenceError("; ".join(problems), curve.trace)


def checked_c0(m, params: ModelParams):
    return _checked_c0(m, params)
