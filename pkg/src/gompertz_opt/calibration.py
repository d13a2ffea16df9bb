"""Fitting mortality growth, initial hazard and healthcare efficacy to cohort data.

Two steps. A cohort observed before healthcare mattered pins down the
Gompertz pair (β, m0) by least squares on log hazards. A later cohort then
identifies the efficacy parameters (a, q): each trial solves the full model,
integrates the endogenous hazard path from the same anchor, and scores the
squared log-hazard gap to the data.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .errors import (
    DataFormatError,
    DomainError,
    InfeasibleError,
    InsufficientDataError,
    ModelError,
)
from .hjb import solve_u_star
from .model import AgingHealth, EfficacyModel, GridSpec, ModelParams, validate
from .policy import endogenous_mortality

MIN_ROWS = 8


@dataclass(frozen=True, eq=False)
class CohortTable:
    cohort_year: int
    ages: np.ndarray
    rates: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if ages.shape != rates.shape or ages.ndim != 1:
            raise DomainError("ages and rates must be 1-d arrays of equal length")
        if np.any(np.diff(ages) <= 0):
            raise DomainError("ages must be strictly increasing")
        if np.any(~(rates > 0)):
            raise DomainError("hazard rates must be positive")
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "rates", rates)

    def __len__(self):
        return self.ages.size

    def require_rows(self, n: int = MIN_ROWS):
        if len(self) < n:
            raise InsufficientDataError(f"cohort {self.cohort_year}: {len(self)} rows, need at least {n}")


def load_cohort_csv(path: str | Path, cohort_year: int = 0) -> CohortTable:
    """Read an ``age,rate`` file. Rows with a zero or missing rate are dropped and counted."""
    ages, rates, dropped = [], [], 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["age", "rate"]:
            raise DataFormatError(f"expected header 'age,rate', got {header}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataFormatError(f"expected 2 fields, got {len(row)}", lineno)
            age_s, rate_s = (cell.strip() for cell in row)
            try:
                age = float(age_s)
                rate = float(rate_s) if rate_s else 0.0
            except ValueError:
                raise DataFormatError(f"not a number in {row}", lineno) from None
            if not math.isfinite(age) or not math.isfinite(rate) or rate < 0:
                raise DataFormatError(f"invalid values in {row}", lineno)
            if rate == 0.0:
                dropped += 1
                continue
            if ages and age <= ages[-1]:
                raise DataFormatError(f"age {age} does not increase", lineno)
            ages.append(age)
            rates.append(rate)
    return CohortTable(cohort_year, np.array(ages), np.array(rates), dropped)


def save_cohort_csv(table: CohortTable, path: str | Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age", "rate"])
        for age, rate in zip(table.ages, table.rates):
            writer.writerow([repr(float(age)), repr(float(rate))])


@dataclass
class FitResult:
    params: dict[str, float]
    std_errors: dict[str, float]
    loss: float
    n_evals: int
    converged: bool
    diagnostics: dict[str, float] = field(default_factory=dict)
    history: list[float] = field(default_factory=list, repr=False)

    def to_text(self) -> str:
        lines = [f"{k} = {v!r}" for k, v in self.params.items()]
        lines += [f"se_{k} = {v!r}" for k, v in self.std_errors.items()]
        lines += [f"loss = {self.loss!r}", f"n_evals = {self.n_evals}",
                  f"converged = {str(self.converged).lower()}"]
        lines += [f"{k} = {v!r}" for k, v in self.diagnostics.items()]
        return "\n".join(lines) + "\n"


# --- Gompertz regression --------------------------------------------------------


def fit_gompertz(table: CohortTable, anchor_age: float = 0.0) -> FitResult:
    """OLS of log hazard on age; m0 is the fitted hazard at ``anchor_age``."""
    table.require_rows()
    x = table.ages - anchor_age
    y = np.log(table.rates)
    x_mean = x.mean()
    sxx = float(np.sum((x - x_mean) ** 2))
    if sxx <= 0:
        raise DomainError("degenerate design: all ages are equal")
    slope = float(np.sum((x - x_mean) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x_mean)
    resid = y - (intercept + slope * x)
    n = x.size
    sse = float(resid @ resid)
    sigma2 = sse / (n - 2)
    se_slope = math.sqrt(sigma2 / sxx)
    se_intercept = math.sqrt(sigma2 * (1.0 / n + x_mean ** 2 / sxx))
    m0 = math.exp(intercept)
    sst = float(np.sum((y - y.mean()) ** 2))
    return FitResult(
        params={"beta": slope, "m0": m0},
        # delta method for m0 = exp(intercept)
        std_errors={"beta": se_slope, "m0": m0 * se_intercept, "log_m0": se_intercept},
        loss=sse, n_evals=1, converged=True,
        diagnostics={"anchor_age": float(anchor_age), "n_rows": n, "residual_sd": math.sqrt(sigma2),
                     "r_squared": 1.0 - sse / sst if sst > 0 else 1.0,
                     "max_abs_residual": float(np.max(np.abs(resid)))},
    )


# --- efficacy search --------------------------------------------------------------


@dataclass(frozen=True)
class SearchSpec:
    a_bounds: tuple[float, float] = (0.01, 1.0)
    q_bounds: tuple[float, float] = (0.05, 0.95)
    restarts: int = 3
    seed: int = 0
    xatol: float = 1e-4
    fatol: float = 1e-9
    max_evals: int = 300
    start: tuple[float, float] | None = None
    grid: GridSpec = GridSpec(m_min=1e-5, m_max=20.0, n_points=64)
    tol: float = 1e-6
    anchor_age: float = 0.0
    workers: int = 1

    def __post_init__(self):
        (a_lo, a_hi), (q_lo, q_hi) = self.a_bounds, self.q_bounds
        if not 0 < a_lo < a_hi:
            raise DomainError(f"invalid a bounds {self.a_bounds}")
        if not 0 < q_lo < q_hi < 1:
            raise DomainError(f"invalid q bounds {self.q_bounds}")
        if self.restarts < 1:
            raise DomainError("need at least one start")

    def to_unit(self, a: float, q: float) -> np.ndarray:
        return np.array([math.log(a), float(logit((q - self.q_bounds[0]) / (self.q_bounds[1] - self.q_bounds[0])))])

    def from_unit(self, theta) -> tuple[float, float]:
        q_lo, q_hi = self.q_bounds
        return math.exp(theta[0]), q_lo + (q_hi - q_lo) * float(expit(theta[1]))

    def bounds(self):
        # logit is kept finite so the simplex cannot run off to the box edge
        return [(math.log(self.a_bounds[0]), math.log(self.a_bounds[1])), (-12.0, 12.0)]


def efficacy_margin(params: ModelParams, efficacy: EfficacyModel) -> float:
    """β - g(I((1-γ)/γ)); positive when the full model is well posed."""
    h = efficacy.inverse_marginal(params.k)
    return params.beta - float(efficacy.g(h))


def model_log_hazard(params: ModelParams, efficacy: EfficacyModel, ages: np.ndarray,
                     anchor_age: float = 0.0, grid: GridSpec = GridSpec(), tol: float = 1e-8) -> np.ndarray:
    """log M(age) of the endogenous hazard path anchored at (anchor_age, params.m0)."""
    curve = solve_u_star(params, efficacy, grid, tol=tol)
    span = (min(float(ages[0]), anchor_age), max(float(ages[-1]), anchor_age))
    profile = endogenous_mortality(params, efficacy, curve, span, (anchor_age, params.m0), ages=ages)
    return np.log(profile.mortality)


class _Objective:
    """Cached log-hazard loss over the transformed (log a, logit q) plane."""

    def __init__(self, table: CohortTable, params: ModelParams, search: SearchSpec):
        self.ages = table.ages
        self.log_data = np.log(table.rates)
        self.params = params
        self.search = search
        self.cache: dict[tuple[float, float], float] = {}
        self.history: list[float] = []

    def __call__(self, theta) -> float:
        key = (float(theta[0]), float(theta[1]))
        if key in self.cache:
            return self.cache[key]
        a, q = self.search.from_unit(theta)
        loss = math.inf
        try:
            efficacy = EfficacyModel.isoelastic(a, q)
            if validate(self.params, efficacy, AgingHealth()).passed:
                model = model_log_hazard(self.params, efficacy, self.ages, self.search.anchor_age,
                                         self.search.grid, self.search.tol)
                loss = float(np.sum((model - self.log_data) ** 2))
        except ModelError:
            loss = math.inf
        self.cache[key] = loss
        best = min(self.history[-1], loss) if self.history else loss
        self.history.append(best)
        return loss


def _start_points(search: SearchSpec) -> list[np.ndarray]:
    rng = np.random.default_rng(search.seed)
    (la_lo, la_hi), (l_lo, l_hi) = search.bounds()
    if search.start is not None:
        first = search.to_unit(*search.start)
    else:
        first = np.array([0.5 * (la_lo + la_hi), 0.0])
    points = [first]
    for _ in range(search.restarts - 1):
        # random restarts inside the central part of the logit range
        points.append(np.array([rng.uniform(la_lo, la_hi), rng.uniform(-2.0, 2.0)]))
    return points


def _run_start(args):
    table, params, search, x0 = args
    objective = _Objective(table, params, search)
    simplex = [x0, x0 + np.array([0.5, 0.0]), x0 + np.array([0.0, 0.5])]
    # infeasible vertices carry +inf loss, which makes the fatol test compute inf - inf
    with np.errstate(invalid="ignore"):
        res = minimize(objective, x0, method="Nelder-Mead", bounds=search.bounds(),
                       options={"xatol": search.xatol, "fatol": search.fatol, "maxfev": search.max_evals,
                                "initial_simplex": np.array(simplex)})
    verts = res.final_simplex[0]
    diameter = float(max(np.linalg.norm(v - w) for v in verts for w in verts))
    return {"x": res.x, "fun": float(res.fun), "success": bool(res.success),
            "n_evals": len(objective.cache), "history": objective.history, "diameter": diameter}


def fit_efficacy(table_late: CohortTable, fixed: tuple[float, float], params: ModelParams,
                 search: SearchSpec = SearchSpec()) -> FitResult:
    """Fit (a, q) so the endogenous hazard path matches ``table_late``.

    ``fixed = (beta, m0)`` from :func:`fit_gompertz` overrides the growth
    rate and anchor hazard of ``params``.
    """
    table_late.require_rows()
    beta, m0 = fixed
    params = params.replace(beta=float(beta), m0=float(m0))
    starts = _start_points(search)
    jobs = [(table_late, params, search, x0) for x0 in starts]
    if search.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=search.workers) as pool:
            runs = list(pool.map(_run_start, jobs))
    else:
        runs = [_run_start(job) for job in jobs]

    if all(not math.isfinite(run["fun"]) for run in runs):
        margins = []
        for x0 in starts:
            a, q = search.from_unit(x0)
            margins.append((a, q, efficacy_margin(params, EfficacyModel.isoelastic(a, q))))
        detail = "; ".join(f"a={a:.4g}, q={q:.4g}: β - g(I(k)) = {m:.4g}" for a, q, m in margins)
        raise InfeasibleError(f"no feasible efficacy in the search box ({detail})", margins)

    best = min(runs, key=lambda run: run["fun"])
    a_hat, q_hat = search.from_unit(best["x"])
    history, running = [], math.inf
    for run in runs:
        for value in run["history"]:
            running = min(running, value)
            history.append(running)

    (la_lo, la_hi), _ = search.bounds()
    la = math.log(a_hat)
    edge = 1e-3
    at_boundary = (la - la_lo < edge or la_hi - la < edge
                   or (q_hat - search.q_bounds[0]) / (search.q_bounds[1] - search.q_bounds[0]) < edge
                   or (search.q_bounds[1] - q_hat) / (search.q_bounds[1] - search.q_bounds[0]) < edge)
    margin = efficacy_margin(params, EfficacyModel.isoelastic(a_hat, q_hat))
    return FitResult(
        params={"a": a_hat, "q": q_hat},
        std_errors={"a": math.nan, "q": math.nan},
        loss=best["fun"], n_evals=sum(run["n_evals"] for run in runs),
        converged=best["success"] and not at_boundary,
        diagnostics={"boundary": float(at_boundary), "margin": margin,
                     "simplex_diameter": best["diameter"], "restarts": float(len(runs)),
                     "beta": float(beta), "m0": float(m0)},
        history=history,
    )


# --- synthetic cohorts ---------------------------------------------------------


def synthetic_gompertz_cohort(beta: float, m0: float, ages, noise: float = 0.0, seed: int = 0,
                              cohort_year: int = 1900, anchor_age: float = 0.0) -> CohortTable:
    """Hazards m0 exp(β (age - anchor)) with multiplicative lognormal noise."""
    ages = np.asarray(ages, dtype=float)
    rates = m0 * np.exp(beta * (ages - anchor_age))
    if noise > 0:
        rates = rates * np.exp(noise * np.random.default_rng(seed).standard_normal(ages.size))
    return CohortTable(cohort_year, ages, rates)


def synthetic_healthcare_cohort(params: ModelParams, efficacy: EfficacyModel, ages, noise: float = 0.0,
                                seed: int = 0, cohort_year: int = 1940, anchor_age: float = 0.0,
                                grid: GridSpec = GridSpec()) -> CohortTable:
    """Endogenous hazards of the full model through (anchor_age, params.m0), with lognormal noise."""
    ages = np.asarray(ages, dtype=float)
    log_m = model_log_hazard(params, efficacy, ages, anchor_age, grid)
    if noise > 0:
        log_m = log_m + noise * np.random.default_rng(seed).standard_normal(ages.size)
    return CohortTable(cohort_year, ages, np.exp(log_m))


def save_fitted_curve(path: str | Path, ages, observed, fitted):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age", "observed", "fitted"])
        for row in zip(ages, observed, fitted):
            writer.writerow([repr(float(v)) for v in row])
