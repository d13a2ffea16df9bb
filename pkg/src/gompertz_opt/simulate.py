"""Monte Carlo simulation of death arrivals, wealth and realized welfare.

Deaths are generated from i.i.d. Exp(1) clocks: the n-th death occurs when
the hazard integrated since the previous death reaches the n-th clock.
Wealth before mortality losses grows at r - c - h (plus the risky excess
return when a risky asset is held); consumption at time t is
c_t ζ^(N_t) X_t, so each death scales flow utility by ζ^(1-γ).

Two engines share the same random clocks:

* a path-deterministic engine for Markov policies without a risky asset,
  where hazard, rates and pre-loss wealth are deterministic functions of
  time, so death times follow by inverting the cumulative hazard;
* a time-stepping engine for callback policies and risky portfolios.

Random numbers come from Philox streams keyed by (seed, block), with
separate streams for death clocks and Brownian increments, so different
policies evaluated with the same seed see common random numbers.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .baseline import c0 as baseline_c0
from .errors import DomainError, ModelError
from .hjb import PolicyCurve, health_rate
from .model import AgingHealth, AgingNoHealth, ConstMortality, EfficacyModel, ModelParams, validate
from .policy import portfolio_and_equivalent_rate

# utility weight below which later deaths are treated as part of the tail
DEATH_WEIGHT_FLOOR = 1e-16
HAZARD_CEILING = 1e300


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    horizon: float = 300.0
    dt: float = 1.0 / 52.0
    seed: int = 0
    truncation_tol: float = math.inf
    risky: bool = False
    x0: float = 1.0
    m_init: float | None = None
    block_size: int = 10_000
    max_deaths: int = 400
    workers: int | None = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if not 0 < self.dt <= 1.0 / 52.0:
            raise DomainError(f"dt must lie in (0, 1/52], got {self.dt}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not self.x0 > 0:
            raise DomainError(f"initial wealth must be > 0, got {self.x0}")
        if self.block_size < 1 or self.max_deaths < 1:
            raise DomainError("block_size and max_deaths must be >= 1")


# --- policies ---------------------------------------------------------------


@dataclass(frozen=True)
class ConstantRates:
    c: float
    h: float = 0.0
    pi: float = 0.0

    def __post_init__(self):
        if self.c < 0 or self.h < 0:
            raise DomainError("policy rates must be nonnegative")


@dataclass(frozen=True)
class Analytic:
    """Optimal feedback policy of a solved curve, optionally rescaled."""

    curve: PolicyCurve
    scale_c: float = 1.0
    scale_h: float = 1.0

    def rates(self, m):
        u = self.curve.u_at(m)
        h = health_rate(m, u, self.curve.du_at(m), self.curve.params, self.curve.efficacy)
        return self.scale_c * u, self.scale_h * h


@dataclass(frozen=True)
class Custom:
    """Callback ``fn(t, m, n_deaths) -> (c, h)`` evaluated on arrays of paths.

    ``pi`` is the risky share; None means the Merton fraction.
    """

    fn: Callable
    pi: float | None = None


Policy = ConstantRates | Analytic | Custom


@dataclass
class SimOutcome:
    welfare: np.ndarray
    n_deaths: np.ndarray
    death_flat: np.ndarray
    death_offsets: np.ndarray
    mean: float
    std_err: float
    truncation_bound: float
    horizon: float
    seed: int
    tail: np.ndarray = field(repr=False, default=None)
    truncated: bool = False
    continuation: np.ndarray | None = field(repr=False, default=None)

    @property
    def completed(self) -> np.ndarray | None:
        """Per-path welfare plus the exact expected remainder, where that is known."""
        return None if self.continuation is None else self.welfare + self.continuation

    @property
    def completed_mean(self) -> float:
        done = self.completed
        return math.nan if done is None else float(np.sum(done) / done.size)

    @property
    def completed_std_err(self) -> float:
        done = self.completed
        if done is None or done.size < 2:
            return math.nan
        return float(np.std(done, ddof=1) / math.sqrt(done.size))

    @property
    def n_paths(self) -> int:
        return self.welfare.size

    @property
    def death_times(self) -> list[np.ndarray]:
        return np.split(self.death_flat, self.death_offsets[1:-1])

    @property
    def first_death(self) -> np.ndarray:
        out = np.full(self.n_paths, np.inf)
        has = self.n_deaths > 0
        out[has] = self.death_flat[self.death_offsets[:-1][has]]
        return out

    def summary(self) -> dict[str, float]:
        return {
            "n_paths": self.n_paths, "mean": self.mean, "std_err": self.std_err,
            "truncation_bound": self.truncation_bound, "horizon": self.horizon,
            "seed": self.seed, "truncated": int(self.truncated),
            "completed_mean": self.completed_mean, "completed_std_err": self.completed_std_err,
        }

    def to_csv(self, path: str | Path):
        items = self.summary()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(items))
            writer.writerow([repr(v) if isinstance(v, float) else str(v) for v in items.values()])

    def paths_to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "welfare", "n_deaths", "tau1"])
            for i, (w, n, t1) in enumerate(zip(self.welfare, self.n_deaths, self.first_death)):
                writer.writerow([i, repr(float(w)), int(n), repr(float(t1))])


# --- shared helpers -----------------------------------------------------------


def _expint(rate, length):
    """∫_0^length e^(rate s) ds, stable as rate -> 0."""
    rate = np.asarray(rate, dtype=float)
    x = rate * length
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, rate)
    return np.where(small, length * (1.0 + 0.5 * x), np.expm1(x) / safe)


def _expint_inverse(rate, target):
    """s with ∫_0^s e^(rate v) dv = target."""
    rate = np.asarray(rate, dtype=float)
    y = rate * target
    small = np.abs(y) < 1e-8
    safe = np.where(small, 1.0, rate)
    with np.errstate(invalid="ignore"):
        return np.where(small, target * (1.0 - 0.5 * y), np.log1p(y) / safe)


def _utility(x, gamma):
    return x ** (1.0 - gamma) / (1.0 - gamma)


def _streams(seed: int, block: int):
    z_seq, w_seq = np.random.SeedSequence([seed, block]).spawn(2)
    return np.random.Generator(np.random.Philox(z_seq)), np.random.Generator(np.random.Philox(w_seq))


def _death_budget(params: ModelParams, max_deaths: int) -> int:
    zeta, gamma = params.zeta, params.gamma
    if 0 < zeta < 1:
        k = math.ceil(math.log(DEATH_WEIGHT_FLOOR) / ((1.0 - gamma) * math.log(zeta)))
        return max(1, min(k, max_deaths))
    if zeta == 0 and gamma < 1:
        return 1
    return max_deaths


def _worker_count(config: SimConfig) -> int:
    if config.workers is not None:
        return max(1, config.workers)
    env = os.environ.get("GOMPERTZ_OPT_THREADS")
    return max(1, int(env)) if env else 1


def _check_regime(params: ModelParams, efficacy: EfficacyModel, policy, m_init: float):
    if isinstance(policy, Analytic):
        report = validate(params, efficacy, AgingHealth())
    elif params.beta == 0:
        report = validate(params, efficacy, ConstMortality(m_init))
    elif efficacy.is_zero:
        report = validate(params, efficacy, AgingNoHealth())
    else:
        report = validate(params, efficacy, AgingHealth())
    report.raise_if_failed()


def _tail_envelope(params: ModelParams, policy):
    """m -> factor with V(x, m) = U(x) * factor bounding the continuation value.

    With a solved curve the factor is u*(m)^(-γ), the optimum. Otherwise
    c0(m)^(-γ) is used: exact under constant mortality, and an upper bound
    on the optimum for γ < 1 because the optimal rate is at least c0.
    """
    gamma = params.gamma
    if isinstance(policy, Analytic):
        curve = policy.curve
        return lambda m: curve.u_at(np.clip(m, curve.m_min, curve.m_max)) ** (-gamma)
    return lambda m: baseline_c0(m, params) ** (-gamma)


def _exact_continuation(params: ModelParams, efficacy: EfficacyModel, policy):
    """Factor giving E[remaining welfare | state] = U(wealth) * factor, when known.

    Known for the unscaled optimal policy, and for constant rates under a
    constant hazard, where the remaining welfare is U(c x) / ρ with
    ρ = δ - (1-γ)(r - c - h) + m (1 - ζ^(1-γ)).
    """
    gamma = params.gamma
    if isinstance(policy, Analytic) and policy.scale_c == 1.0 and policy.scale_h == 1.0:
        return _tail_envelope(params, policy)
    if isinstance(policy, ConstantRates) and params.beta - float(efficacy.g(policy.h)) == 0.0:
        c, h = policy.c, policy.h

        def factor(m):
            rho = (params.delta - (1.0 - gamma) * (params.r - c - h)
                   + m * (1.0 - params.zeta ** (1.0 - gamma)))
            return np.where(rho > 0, c ** (1.0 - gamma) / np.where(rho > 0, rho, 1.0), np.inf)
        return factor
    return None


# --- path-deterministic engine -----------------------------------------------


@dataclass
class _DeterministicPath:
    t: np.ndarray          # time grid, t[-1] is the effective horizon
    log_m: np.ndarray
    log_x: np.ndarray
    cum_hazard: np.ndarray
    cum_utility: np.ndarray
    util_rate: np.ndarray  # log growth of the utility flow within each step
    haz_rate: np.ndarray   # log growth of the hazard within each step
    truncated: bool


def _deterministic_path(params: ModelParams, efficacy: EfficacyModel, policy, m_init: float,
                        x0: float, config: SimConfig) -> _DeterministicPath:
    beta, r, gamma, delta = params.beta, params.r, params.gamma, params.delta
    horizon = config.horizon
    truncated = False
    if isinstance(policy, ConstantRates):
        growth = beta - float(efficacy.g(policy.h))
        t_cap = horizon
        if growth > 0 and math.log(HAZARD_CEILING / m_init) / growth < horizon:
            t_cap = math.log(HAZARD_CEILING / m_init) / growth
            truncated = True
        n = max(1, math.ceil(t_cap / config.dt))
        t = np.linspace(0.0, t_cap, n + 1)
        log_m = math.log(m_init) + growth * t
        log_x = math.log(x0) + (r - policy.c - policy.h) * t
        c = np.full_like(t, policy.c)
    else:
        curve = policy.curve
        x_top = math.log(curve.m_max)

        def rhs(_t, y):
            m = math.exp(min(y[0], x_top))
            c, h = policy.rates(m)
            return [beta - float(efficacy.g(h)), r - c - h]

        def hits_top(_t, y):
            return y[0] - x_top
        hits_top.terminal = True

        if not curve.m_min <= m_init <= curve.m_max:
            raise DomainError(f"initial hazard {m_init} outside the curve range")
        probe = solve_ivp(rhs, (0.0, horizon), [math.log(m_init), math.log(x0)], rtol=1e-10,
                          atol=1e-12, events=hits_top, dense_output=True)
        if not probe.success:
            raise ModelError(f"hazard path integration failed: {probe.message}")
        t_cap = float(probe.t[-1])
        truncated = t_cap < horizon
        n = max(1, math.ceil(t_cap / config.dt))
        t = np.linspace(0.0, t_cap, n + 1)
        log_m, log_x = probe.sol(t)
        log_m = np.minimum(log_m, x_top)
        c = policy.rates(np.exp(log_m))[0]

    dt = np.diff(t)
    haz_rate = np.diff(log_m) / dt
    m = np.exp(log_m)
    cum_hazard = np.concatenate([[0.0], np.cumsum(m[:-1] * _expint(haz_rate, dt))])
    # utility flow e^(-δt) U(c X) is log-linear within each step
    flow = np.exp(-delta * t) * _utility(c * np.exp(log_x), gamma)
    util_rate = np.diff(np.log(np.abs(flow))) / dt
    cum_utility = np.concatenate([[0.0], np.cumsum(flow[:-1] * _expint(util_rate, dt))])
    return _DeterministicPath(t, log_m, log_x, cum_hazard, cum_utility, util_rate, haz_rate, truncated)


def _interp_step(path: _DeterministicPath, tau):
    """Step index and offset of times ``tau`` (finite, within the grid)."""
    j = np.clip(np.searchsorted(path.t, tau, side="right") - 1, 0, path.t.size - 2)
    return j, tau - path.t[j]


def _run_deterministic_block(path: _DeterministicPath, params: ModelParams, n: int,
                             seed: int, block: int, budget: int):
    gamma, zeta = params.gamma, params.zeta
    z_rng, _ = _streams(seed, block)
    clocks = np.cumsum(z_rng.standard_exponential((n, budget)), axis=1)
    t_end = path.t[-1]
    total_hazard = path.cum_hazard[-1]

    dies = clocks < total_hazard
    j = np.clip(np.searchsorted(path.cum_hazard, clocks, side="right") - 1, 0, path.t.size - 2)
    m_left = np.exp(path.log_m[j])
    offset = _expint_inverse(path.haz_rate[j], (clocks - path.cum_hazard[j]) / m_left)
    tau = np.where(dies, np.minimum(path.t[j] + offset, t_end), np.inf)

    n_deaths = dies.sum(axis=1)
    # deaths beyond the budget are folded into the tail
    stop = np.minimum(np.where(n_deaths >= budget, tau[:, -1], t_end), t_end)

    def utility_at(times):
        jj, off = _interp_step(path, times)
        base = path.cum_utility[jj]
        step_integral = path.cum_utility[jj + 1] - base
        full = _expint(path.util_rate[jj], path.t[jj + 1] - path.t[jj])
        part = _expint(path.util_rate[jj], off)
        return base + step_integral * part / full

    g_tau = utility_at(np.minimum(tau, stop[:, None]))
    g_stop = utility_at(stop)
    marks = np.concatenate([np.zeros((n, 1)), g_tau, g_stop[:, None]], axis=1)
    seg = np.diff(marks, axis=1)
    # the last column (after the budget-th death) is empty by construction of stop
    weights = zeta ** ((1.0 - gamma) * np.arange(budget + 1))
    welfare = seg @ weights

    counted = np.minimum(n_deaths, budget)
    jj, off = _interp_step(path, stop)
    frac = off / (path.t[jj + 1] - path.t[jj])
    log_m_stop = path.log_m[jj] + frac * (path.log_m[jj + 1] - path.log_m[jj])
    log_x_stop = path.log_x[jj] + frac * (path.log_x[jj + 1] - path.log_x[jj])
    wealth = zeta ** counted * np.exp(log_x_stop)
    deaths = [tau[i, : counted[i]] for i in range(n)]
    return welfare, counted, deaths, stop, wealth, np.exp(log_m_stop)


# --- time-stepping engine ---------------------------------------------------


def _policy_arrays(policy, t, m, n_dead, params, efficacy, curve_range):
    if isinstance(policy, ConstantRates):
        size = m.size
        return np.full(size, policy.c), np.full(size, policy.h)
    if isinstance(policy, Analytic):
        lo, hi = curve_range
        return policy.rates(np.clip(m, lo, hi))
    out = policy.fn(t, m, n_dead)
    c, h = (np.broadcast_to(np.asarray(v, dtype=float), m.shape) for v in out[:2])
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(h))) or np.any(c < 0) or np.any(h < 0):
        raise DomainError(f"policy returned invalid rates at t = {t:.6g}")
    return c, h


def _run_stepping_block(params: ModelParams, efficacy: EfficacyModel, policy, n: int,
                        seed: int, block: int, budget: int, x0: float, m_init: float,
                        config: SimConfig):
    gamma, zeta, delta, beta, r = params.gamma, params.zeta, params.delta, params.beta, params.r
    z_rng, w_rng = _streams(seed, block)
    clocks = z_rng.standard_exponential((n, budget))
    pi_hat = portfolio_and_equivalent_rate(params)[0] if config.risky else 0.0
    if isinstance(policy, ConstantRates) and config.risky:
        pi = policy.pi
    elif isinstance(policy, Custom) and policy.pi is not None:
        pi = policy.pi
    else:
        pi = pi_hat
    mu, sigma = (params.mu, params.sigma) if config.risky else (0.0, 0.0)
    curve_range = (policy.curve.m_min, policy.curve.m_max) if isinstance(policy, Analytic) else None

    steps = max(1, math.ceil(config.horizon / config.dt))
    dt = config.horizon / steps
    log_m = np.full(n, math.log(m_init))
    log_x = np.full(n, math.log(x0))
    n_dead = np.zeros(n, dtype=int)
    since = np.zeros(n)          # hazard integrated since the last death
    welfare = np.zeros(n)
    alive = np.ones(n, dtype=bool)  # still within the death budget
    deaths = [[] for _ in range(n)]
    stop_log_m = np.full(n, np.nan)
    stop_log_x = np.full(n, np.nan)
    stop_t = np.full(n, config.horizon)
    stop_dead = np.zeros(n, dtype=int)
    rows = np.arange(n)

    for step in range(steps):
        t = step * dt
        m = np.exp(log_m)
        c, h = _policy_arrays(policy, t, m, n_dead, params, efficacy, curve_range)
        growth = beta - np.asarray(efficacy.g(h), dtype=float)
        drift = r + mu * pi - c - h - 0.5 * (sigma * pi) ** 2
        u_rate = (1.0 - gamma) * drift - delta
        flow0 = np.exp(-delta * t) * _utility(c * np.exp(log_x), gamma)

        start = np.zeros(n)
        # handle every death inside the step, possibly several per path
        while True:
            remaining = dt - start
            need = clocks[rows, np.minimum(n_dead, budget - 1)] - since
            haz_left = np.exp(log_m + growth * start)
            reach = haz_left * _expint(growth, remaining)
            hit = alive & (reach >= need) & (remaining > 0)
            if not hit.any():
                break
            idx = np.nonzero(hit)[0]
            off = _expint_inverse(growth[idx], need[idx] / haz_left[idx])
            off = np.minimum(off, remaining[idx])
            seg = flow0[idx] * np.exp(u_rate[idx] * start[idx]) * _expint(u_rate[idx], off)
            welfare[idx] += zeta ** ((1.0 - gamma) * n_dead[idx]) * seg
            start[idx] += off
            since[idx] = 0.0
            for i, s in zip(idx, start[idx]):
                deaths[i].append(t + s)
            n_dead[idx] += 1
            out = idx[n_dead[idx] >= budget]
            if out.size:
                stop_t[out] = t + start[out]
                stop_log_m[out] = log_m[out] + growth[out] * start[out]
                stop_log_x[out] = log_x[out] + drift[out] * start[out]
                stop_dead[out] = n_dead[out]
                alive[out] = False

        rem = dt - start
        seg = flow0 * np.exp(u_rate * start) * _expint(u_rate, rem)
        welfare += np.where(alive, zeta ** ((1.0 - gamma) * n_dead) * seg, 0.0)
        haz_start = np.exp(log_m + growth * start)
        since += np.where(alive, haz_start * _expint(growth, rem), 0.0)
        log_m = log_m + growth * dt
        noise = w_rng.standard_normal(n) if sigma > 0 else 0.0
        log_x = log_x + drift * dt + sigma * pi * math.sqrt(dt) * noise
        if np.any(log_m > math.log(HAZARD_CEILING)):
            raise ModelError(f"hazard overflow at t = {t + dt:.6g}")

    live = alive
    stop_log_m[live] = log_m[live]
    stop_log_x[live] = log_x[live]
    stop_dead[live] = n_dead[live]
    wealth = zeta ** stop_dead * np.exp(stop_log_x)
    return welfare, n_dead, [np.array(d) for d in deaths], stop_t, wealth, np.exp(stop_log_m)


# --- public API ---------------------------------------------------------------


def simulate(params: ModelParams, efficacy: EfficacyModel, policy: Policy,
             config: SimConfig = SimConfig()) -> SimOutcome:
    """Simulate ``config.n_paths`` households and return realized welfare.

    Welfare is integrated up to the horizon (or until the death budget is
    exhausted); ``truncation_bound`` is the mean discounted value of the
    remaining tail under the analytic value-function envelope. When the
    expected remainder is known exactly for ``policy`` it is returned in
    ``continuation``, and ``completed_mean`` estimates the untruncated
    objective.
    """
    m_init = params.m0 if config.m_init is None else config.m_init
    if not m_init > 0:
        raise DomainError(f"initial hazard must be > 0, got {m_init}")
    if config.risky and params.mu == 0:
        raise DomainError("risky simulation needs mu != 0")
    if isinstance(policy, Analytic) and policy.curve.efficacy is not efficacy and policy.curve.efficacy != efficacy:
        raise DomainError("policy curve was solved for a different efficacy model")
    _check_regime(params, efficacy, policy, m_init)
    envelope = _tail_envelope(params, policy)
    budget = _death_budget(params, config.max_deaths)

    blocks = [(b, min(config.block_size, config.n_paths - b * config.block_size))
              for b in range(math.ceil(config.n_paths / config.block_size))]
    deterministic = not config.risky and isinstance(policy, (ConstantRates, Analytic))
    truncated = False
    if deterministic:
        path = _deterministic_path(params, efficacy, policy, m_init, config.x0, config)
        truncated = path.truncated
        horizon = float(path.t[-1])

        def job(item):
            b, n = item
            return _run_deterministic_block(path, params, n, config.seed, b, budget)
    else:
        horizon = config.horizon

        def job(item):
            b, n = item
            return _run_stepping_block(params, efficacy, policy, n, config.seed, b, budget,
                                       config.x0, m_init, config)

    workers = _worker_count(config)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, blocks))
    else:
        results = [job(item) for item in blocks]

    welfare = np.concatenate([res[0] for res in results])
    n_deaths = np.concatenate([res[1] for res in results]).astype(int)
    deaths = [d for res in results for d in res[2]]
    stop_t, wealth, m_stop = (np.concatenate([res[i] for res in results]) for i in (3, 4, 5))
    gamma = params.gamma
    with np.errstate(divide="ignore", invalid="ignore"):
        discounted = np.where(wealth > 0, np.exp(-params.delta * stop_t) * _utility(wealth, gamma), 0.0)
    tail = np.abs(discounted * envelope(m_stop))
    exact = _exact_continuation(params, efficacy, policy)
    continuation = None if exact is None else discounted * exact(m_stop)
    offsets = np.concatenate([[0], np.cumsum(n_deaths)])
    flat = np.concatenate(deaths) if deaths else np.empty(0)
    mean = float(np.sum(welfare) / welfare.size)
    std_err = float(np.std(welfare, ddof=1) / math.sqrt(welfare.size)) if welfare.size > 1 else math.nan
    return SimOutcome(
        welfare=welfare, n_deaths=n_deaths, death_flat=flat, death_offsets=offsets, mean=mean,
        std_err=std_err, truncation_bound=float(np.mean(tail)), horizon=horizon, seed=config.seed,
        tail=tail, truncated=truncated, continuation=continuation,
    )


@dataclass(frozen=True)
class ScaleC:
    factor: float


@dataclass(frozen=True)
class ScaleH:
    factor: float


@dataclass(frozen=True)
class ProbeResult:
    base: float
    perturbed: float
    gap: float
    gap_std_err: float
    significant_worse: bool
    base_outcome: SimOutcome = field(repr=False)
    perturbed_outcome: SimOutcome = field(repr=False)


def optimality_probe(params: ModelParams, efficacy: EfficacyModel, curve: PolicyCurve,
                     perturbation: ScaleC | ScaleH, config: SimConfig = SimConfig()) -> ProbeResult:
    """Compare the optimal policy against a rescaled one on common random numbers.

    The gap's standard error is that of the path-wise difference, which is
    the relevant one when both arms share their random clocks.
    """
    factor = perturbation.factor
    if not 0.0 <= factor <= 2.0:
        raise DomainError(f"perturbation factor must lie in [0, 2], got {factor}")
    base = simulate(params, efficacy, Analytic(curve), config)
    if isinstance(perturbation, ScaleC):
        arm = Analytic(curve, scale_c=factor)
    elif isinstance(perturbation, ScaleH):
        arm = Analytic(curve, scale_h=factor)
    else:
        raise TypeError(f"unknown perturbation {perturbation!r}")
    pert = simulate(params, efficacy, arm, config)
    diff = base.welfare - pert.welfare
    gap = float(np.sum(diff) / diff.size)
    se = float(np.std(diff, ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else math.nan
    return ProbeResult(base.mean, pert.mean, gap, se, bool(gap > 2.0 * se), base, pert)
