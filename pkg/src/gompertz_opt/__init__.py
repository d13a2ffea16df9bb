"""Optimal consumption, healthcare and investment under Gompertz mortality."""

from .baseline import c0, u0
from .calibration import CohortTable, SearchSpec, fit_efficacy, fit_gompertz, load_cohort_csv
from .config import load_config, parse_config
from .errors import (
    BracketBreach,
    ConditionError,
    ConfigError,
    ConvergenceError,
    DataFormatError,
    DomainError,
    ExtrapolationError,
    InfeasibleError,
    InsufficientDataError,
    IntegrationError,
    ModelError,
)
from .hjb import PolicyCurve, solve_u_star
from .model import (
    CALIBRATED_EFFICACY,
    CALIBRATED_PARAMS,
    AgingHealth,
    AgingNoHealth,
    ConstMortality,
    EfficacyModel,
    GridSpec,
    ModelParams,
    ValidationReport,
    efficacy_conjugate,
    validate,
)
from .policy import controls, endogenous_mortality, portfolio_and_equivalent_rate, value_function
from .simulate import Analytic, ConstantRates, Custom, ScaleC, ScaleH, SimConfig, optimality_probe, simulate

__all__ = [
    "c0", "u0", "CohortTable", "SearchSpec", "fit_efficacy", "fit_gompertz", "load_cohort_csv",
    "load_config", "parse_config", "BracketBreach", "ConditionError", "ConfigError", "ConvergenceError",
    "DataFormatError", "DomainError", "ExtrapolationError", "InfeasibleError", "InsufficientDataError",
    "IntegrationError", "ModelError", "PolicyCurve", "solve_u_star", "CALIBRATED_EFFICACY",
    "CALIBRATED_PARAMS", "AgingHealth", "AgingNoHealth", "ConstMortality", "EfficacyModel", "GridSpec",
    "ModelParams", "ValidationReport", "efficacy_conjugate", "validate", "controls",
    "endogenous_mortality", "portfolio_and_equivalent_rate", "value_function", "Analytic",
    "ConstantRates", "Custom", "ScaleC", "ScaleH", "SimConfig", "optimality_probe", "simulate",
]

__version__ = "0.1.0"
