"""Reference solutions without healthcare.

``c0`` is the consumption-wealth ratio of a household whose mortality stays
at ``m`` forever; ``u0`` the ratio when mortality grows at rate beta and no
healthcare is available. ``u0`` has two independent evaluations (a Laplace
type integral and an incomplete-gamma closed form) which check each other.
Both serve as brackets for the full solver in :mod:`gompertz_opt.hjb`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConditionError, DomainError, IncompleteGammaError, QuadratureError
from .model import AgingNoHealth, ConstMortality, EfficacyModel, ModelParams, validate
from .special import upper_gamma_scaled


class _Unbounded:
    """Sentinel for an infinite slope, u0'(0+)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"


UNBOUNDED = _Unbounded()


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-3:
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")


DEFAULT_QUAD = QuadratureSpec()


def c0(m, params: ModelParams):
    """Optimal consumption-wealth ratio under constant mortality ``m``.

    Raises ConditionError when the problem is ill-posed at ``m``
    (equivalently, when the ratio would be nonpositive).
    """
    m_arr = np.asarray(m, dtype=float)
    value = params.c_bar + params.mortality_slope * m_arr
    if np.any(value <= 0):
        bad = float(np.min(m_arr[value <= 0])) if m_arr.ndim else float(m_arr)
        report = validate(params, EfficacyModel.zero(), ConstMortality(bad))
        raise ConditionError(f"constant-mortality problem ill-posed at m = {bad}", report)
    return value if m_arr.ndim else float(value)


def _aging_exponents(params: ModelParams, beta: float) -> tuple[float, float]:
    """(z per unit m, p) of the u0 integral for growth rate ``beta``."""
    gamma = params.gamma
    z_rate = params.mortality_slope / beta
    p = (params.delta + (gamma - 1.0) * params.r_eq) / (beta * gamma)
    return z_rate, p


def _check_aging(params: ModelParams, beta: float):
    report = validate(params.replace(beta=beta), EfficacyModel.zero(), AgingNoHealth())
    if not report.passed:
        raise ConditionError("aging problem without healthcare is ill-posed", report)


def _u0_scalar(m: float, params: ModelParams, beta: float, spec: QuadratureSpec) -> float:
    if m < 0:
        raise DomainError(f"mortality must be >= 0, got {m}")
    z_rate, p = _aging_exponents(params, beta)
    if m == 0:
        return beta * p
    z = z_rate * m
    # y = t/(1-t) maps (0, inf) to (0, 1); the (1-t)^(p-1) factor is left to
    # the algebraic weight so the endpoint singularity is integrated exactly.
    def integrand(t):
        if t >= 1.0:
            return 0.0
        return math.exp(-z * t / (1.0 - t))

    value, err, info = quad(
        integrand, 0.0, 1.0, weight="alg", wvar=(0.0, p - 1.0),
        epsabs=0.0, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1,
    )[:3]
    if not value > 0 or err > 10 * spec.rel_tol * value:
        raise QuadratureError(
            f"u0 quadrature at m={m} reached relative error {err / max(value, 1e-300):.3g}"
        )
    return beta / value


def u0(m, params: ModelParams, beta_override: float | None = None,
       quad_spec: QuadratureSpec = DEFAULT_QUAD):
    """Consumption-wealth ratio with Gompertz aging and no healthcare.

    ``beta_override`` replaces the mortality growth rate; passing beta_g gives
    the lower bracket of the full model.
    """
    beta = params.beta if beta_override is None else beta_override
    if not beta > 0:
        raise DomainError(f"mortality growth must be > 0, got {beta}")
    _check_aging(params, beta)
    m_arr = np.asarray(m, dtype=float)
    if m_arr.ndim == 0:
        return _u0_scalar(float(m_arr), params, beta, quad_spec)
    return np.array([_u0_scalar(float(x), params, beta, quad_spec) for x in m_arr.ravel()]).reshape(
        m_arr.shape
    )


def u0_gamma_form(m, params: ModelParams, beta_override: float | None = None):
    """u0 through the upper incomplete gamma function, beta / E(-p, z).

    Independent of the quadrature in :func:`u0`. Raises
    IncompleteGammaError where the recurrence loses too many digits; callers
    should fall back to :func:`u0` there.
    """
    beta = params.beta if beta_override is None else beta_override
    if not beta > 0:
        raise DomainError(f"mortality growth must be > 0, got {beta}")
    _check_aging(params, beta)
    z_rate, p = _aging_exponents(params, beta)

    def one(mv):
        if mv < 0:
            raise DomainError(f"mortality must be >= 0, got {mv}")
        if mv == 0:
            return beta * p
        return beta / upper_gamma_scaled(-p, z_rate * mv)

    m_arr = np.asarray(m, dtype=float)
    if m_arr.ndim == 0:
        return one(float(m_arr))
    return np.array([one(float(x)) for x in m_arr.ravel()]).reshape(m_arr.shape)


def u0_derivative(m, params: ModelParams, beta_override: float | None = None,
                  quad_spec: QuadratureSpec = DEFAULT_QUAD):
    """u0'(m) from the no-healthcare ODE: (u0^2 - c0 u0) / (beta m).

    Returns :data:`UNBOUNDED` at m == 0.
    """
    beta = params.beta if beta_override is None else beta_override
    if np.ndim(m) == 0:
        if m == 0:
            return UNBOUNDED
        if m < 0:
            raise DomainError(f"mortality must be >= 0, got {m}")
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr <= 0):
        raise DomainError("u0_derivative on arrays needs m > 0")
    u = u0(m_arr, params, beta_override, quad_spec)
    c = params.c_bar + params.mortality_slope * m_arr
    out = (u * u - c * u) / (beta * m_arr)
    return float(out) if m_arr.ndim == 0 else out


def u0_with_fallback(m, params: ModelParams, beta_override: float | None = None) -> float:
    """Incomplete-gamma form when it is accurate, quadrature otherwise."""
    try:
        return u0_gamma_form(m, params, beta_override)
    except IncompleteGammaError:
        return u0(m, params, beta_override)
