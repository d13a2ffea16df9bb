"""Parameters, healthcare efficacy functions and well-posedness checks.

All rates are per year. Wealth never appears here: the value function is
homogeneous in wealth, so every solver works with consumption-wealth ratios
as functions of the mortality hazard ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import ConditionError, DomainError

# Bracket and tolerance for inverting g' (and g) when only callbacks are known.
BISECT_LO = 1e-12
BISECT_HI = 1e6
BISECT_RTOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    r: float
    delta: float
    beta: float
    gamma: float
    zeta: float
    mu: float = 0.0
    sigma: float = 0.0
    m0: float = 0.0

    def __post_init__(self):
        if not (self.gamma > 0) or self.gamma == 1:
            raise DomainError(f"gamma must be positive and != 1, got {self.gamma}")
        if not 0.0 <= self.zeta <= 1.0:
            raise DomainError(f"zeta must lie in [0, 1], got {self.zeta}")
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")
        if self.mu != 0 and not self.sigma > 0:
            raise DomainError("sigma must be > 0 when mu != 0")
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.m0 < 0:
            raise DomainError(f"m0 must be >= 0, got {self.m0}")

    @property
    def k(self) -> float:
        """Price of healthcare in units of marginal efficacy, (1-γ)/γ."""
        return (1.0 - self.gamma) / self.gamma

    @property
    def r_eq(self) -> float:
        """Safe rate raised by the risky asset's squared Sharpe ratio over 2γ."""
        if self.mu == 0:
            return self.r
        return self.r + (self.mu / self.sigma) ** 2 / (2.0 * self.gamma)

    @property
    def mortality_slope(self) -> float:
        """d c0 / dm = (1 - ζ^(1-γ)) / γ."""
        return (1.0 - self.zeta ** (1.0 - self.gamma)) / self.gamma

    @property
    def c_bar(self) -> float:
        """Consumption rate at zero mortality, δ/γ + (1 - 1/γ) r_eq."""
        return self.delta / self.gamma + (1.0 - 1.0 / self.gamma) * self.r_eq

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**self.__dict__, **changes})


CALIBRATED_PARAMS = ModelParams(
    r=0.01, delta=0.01, beta=0.077, gamma=0.67, zeta=0.5, m0=0.00019
)


@dataclass(frozen=True)
class EfficacyModel:
    """Healthcare efficacy g: spending rate -> reduction of mortality growth.

    Build with :meth:`zero`, :meth:`isoelastic` or :meth:`custom`. An
    isoelastic model with ``a == 0`` is accepted and behaves as the zero model.
    """

    kind: str
    a: float = 0.0
    q: float = 0.5
    g_fn: Callable[[float], float] | None = field(default=None, compare=False)
    dg_fn: Callable[[float], float] | None = field(default=None, compare=False)

    @classmethod
    def zero(cls) -> "EfficacyModel":
        return cls("zero")

    @classmethod
    def isoelastic(cls, a: float, q: float) -> "EfficacyModel":
        if a < 0:
            raise DomainError(f"isoelastic scale a must be >= 0, got {a}")
        if not 0 < q < 1:
            raise DomainError(f"isoelastic exponent q must lie in (0, 1), got {q}")
        return cls("isoelastic", a=float(a), q=float(q))

    @classmethod
    def custom(cls, g: Callable[[float], float], dg: Callable[[float], float]) -> "EfficacyModel":
        if abs(g(0.0)) > 1e-14:
            raise DomainError("custom efficacy must satisfy g(0) = 0")
        return cls("custom", g_fn=g, dg_fn=dg)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "isoelastic" and self.a == 0.0)

    def g(self, h):
        if self.is_zero:
            return 0.0 * h
        if self.kind == "isoelastic":
            return self.a * h ** self.q / self.q
        return self.g_fn(h)

    def dg(self, h):
        if self.is_zero:
            return 0.0 * h
        if self.kind == "isoelastic":
            return self.a * h ** (self.q - 1.0)
        return self.dg_fn(h)

    def inverse_marginal(self, y: float) -> float:
        """I(y) = (g')^{-1}(y): spending at which marginal efficacy equals y."""
        if not y > 0:
            raise DomainError(f"inverse marginal efficacy needs y > 0, got {y}")
        if self.is_zero:
            return 0.0
        if self.kind == "isoelastic":
            return (self.a / y) ** (1.0 / (1.0 - self.q))
        # g' is decreasing: find h with g'(h) = y
        return _log_bisect(lambda h: self.dg_fn(h) - y, decreasing=True)

    def level_inverse(self, level: float) -> float:
        """g^{-1}(level), or ``inf`` when g never reaches ``level``."""
        if self.is_zero:
            return math.inf
        if self.kind == "isoelastic":
            return (self.q * level / self.a) ** (1.0 / self.q)
        if self.g_fn(BISECT_HI) < level:
            return math.inf
        return _log_bisect(lambda h: self.g_fn(h) - level, decreasing=False)

    def conjugate(self, k: float) -> tuple[float, float]:
        """sup_{h>=0} {g(h) - k h} and its maximiser I(k)."""
        if not k > 0:
            raise DomainError(f"conjugate is +inf for k <= 0 (got {k})")
        if self.is_zero:
            return 0.0, 0.0
        if self.kind == "isoelastic":
            a, q = self.a, self.q
            s = (1.0 - q) / q * a ** (1.0 / (1.0 - q)) * k ** (-q / (1.0 - q))
            return s, (a / k) ** (1.0 / (1.0 - q))
        h = self.inverse_marginal(k)
        return self.g_fn(h) - k * h, h


def _log_bisect(f: Callable[[float], float], decreasing: bool) -> float:
    """Root of a monotone f on [BISECT_LO, BISECT_HI], bisecting in log h.

    Clamps to the bracket end when f has no sign change inside it.
    """
    lo, hi = math.log(BISECT_LO), math.log(BISECT_HI)
    sign = -1.0 if decreasing else 1.0
    if sign * f(BISECT_LO) >= 0:
        return BISECT_LO
    if sign * f(BISECT_HI) <= 0:
        return BISECT_HI
    # relative tolerance on h is an absolute tolerance on log h
    while hi - lo > BISECT_RTOL:
        mid = 0.5 * (lo + hi)
        if sign * f(math.exp(mid)) < 0:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


CALIBRATED_EFFICACY = EfficacyModel.isoelastic(0.1, 0.46)


def efficacy_conjugate(efficacy: EfficacyModel, k: float) -> tuple[float, float]:
    """Return ``(S(k), h_star)`` with S(k) = sup_h {g(h) - k h}."""
    return efficacy.conjugate(k)


@dataclass(frozen=True)
class GridSpec:
    m_min: float = 1e-5
    m_max: float = 20.0
    n_points: int = 256
    spacing: str = "log"

    def __post_init__(self):
        if not self.m_min > 0:
            raise DomainError(f"grid m_min must be > 0, got {self.m_min}")
        if not self.m_max > self.m_min:
            raise DomainError("grid m_max must exceed m_min")
        if self.n_points < 16:
            raise DomainError(f"grid needs at least 16 points, got {self.n_points}")
        if self.spacing not in ("log", "linear"):
            raise DomainError(f"unknown grid spacing {self.spacing!r}")

    def nodes(self) -> np.ndarray:
        if self.spacing == "log":
            nodes = np.geomspace(self.m_min, self.m_max, self.n_points)
        else:
            nodes = np.linspace(self.m_min, self.m_max, self.n_points)
        nodes[0], nodes[-1] = self.m_min, self.m_max
        return nodes


# --- regimes and validation -------------------------------------------------


@dataclass(frozen=True)
class ConstMortality:
    m: float


@dataclass(frozen=True)
class AgingNoHealth:
    pass


@dataclass(frozen=True)
class AgingHealth:
    pass


Regime = Union[ConstMortality, AgingNoHealth, AgingHealth]


@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    relation: str
    rhs: float
    passed: bool

    def violation(self) -> str:
        """The condition with its relation negated, e.g. ``g(I(k)) ≥ β``."""
        neg = {">": "≤", "<": "≥", ">=": "<", "<=": ">"}[self.relation]
        head, sep, tail = self.name.rpartition(f" {self.relation} ")
        text = f"{head} {neg} {tail}" if sep else f"not ({self.name})"
        return f"{text} ({self.lhs:.6g} vs {self.rhs:.6g})"

    def __str__(self):
        mark = "pass" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.lhs:.6g} {self.relation} {self.rhs:.6g}"


@dataclass(frozen=True)
class ValidationReport:
    regime: str
    conditions: tuple[Condition, ...]
    passed: bool

    def failures(self) -> list[Condition]:
        return [c for c in self.conditions if not c.passed]

    def raise_if_failed(self):
        if not self.passed:
            names = "; ".join(c.name for c in self.failures())
            raise ConditionError(f"{self.regime} well-posedness failed: {names}", report=self)

    def __str__(self):
        head = f"{self.regime}: {'pass' if self.passed else 'FAIL'}"
        return "\n".join([head] + ["  " + str(c) for c in self.conditions])


def _cond(name, lhs, relation, rhs):
    ok = {">": lhs > rhs, "<": lhs < rhs, ">=": lhs >= rhs, "<=": lhs <= rhs}[relation]
    return Condition(name, float(lhs), relation, float(rhs), bool(ok))


def validate(params: ModelParams, efficacy: EfficacyModel, regime: Regime) -> ValidationReport:
    """Evaluate the well-posedness conditions of ``regime``; never raises."""
    p = params
    if isinstance(regime, ConstMortality):
        lhs = p.delta + (1.0 - p.zeta ** (1.0 - p.gamma)) * regime.m - (1.0 - p.gamma) * p.r_eq
        cond = _cond("delta + (1-zeta^(1-gamma)) m - (1-gamma) r > 0", lhs, ">", 0.0)
        return ValidationReport("ConstMortality", (cond,), cond.passed)

    if isinstance(regime, AgingNoHealth):
        drift = p.delta + (p.gamma - 1.0) * p.r_eq
        conds = (
            _cond("beta > 0", p.beta, ">", 0.0),
            _cond("case (i): gamma < 1", p.gamma, "<", 1.0),
            _cond("case (i): 0 < zeta < 1", p.zeta if p.zeta > 0 else math.inf, "<", 1.0),
            _cond("case (i): delta + (gamma-1) r > 0", drift, ">", 0.0),
            _cond("case (ii): gamma > 1", p.gamma, ">", 1.0),
            _cond("case (ii): zeta > 1", p.zeta, ">", 1.0),
        )
        case_i = all(c.passed for c in conds[1:4])
        case_ii = all(c.passed for c in conds[4:6])
        return ValidationReport("AgingNoHealth", conds, conds[0].passed and (case_i or case_ii))

    if isinstance(regime, AgingHealth):
        conds = [
            _cond("beta > 0", p.beta, ">", 0.0),
            _cond("0 < gamma < 1", p.gamma, "<", 1.0),
            _cond("c_bar = delta/gamma + (1-1/gamma) r > 0", p.c_bar, ">", 0.0),
        ]
        if p.gamma < 1:
            h = efficacy.inverse_marginal(p.k)
            conds.append(_cond("g(I((1-γ)/γ)) < β", float(efficacy.g(h)), "<", p.beta))
        else:
            conds.append(Condition("g(I((1-γ)/γ)) < β", math.nan, "<", p.beta, False))
        return ValidationReport("AgingHealth", tuple(conds), all(c.passed for c in conds))

    raise TypeError(f"unknown regime {regime!r}")
