"""Command-line entry point.

Every command reads a flat config file, writes its outputs under ``--out``
and records a ``manifest.json`` describing the run. Exit codes: 0 success,
1 configuration or input error, 2 failed well-posedness condition,
3 solver or search failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .calibration import (
    SearchSpec,
    fit_efficacy,
    fit_gompertz,
    load_cohort_csv,
    model_log_hazard,
    save_fitted_curve,
)
from .config import load_config, resolved_items
from .errors import (
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
from .hjb import solve_u_star
from .model import EfficacyModel, GridSpec
from .policy import endogenous_mortality, value_function
from .simulate import Analytic, SimConfig, simulate

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 1, 2, 3


def config_hash(items: dict) -> str:
    """sha256 of the resolved parameters, independent of key order."""
    payload = json.dumps(items, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(payload.encode()).hexdigest()


def write_manifest(out: Path, command: str, items: dict, outputs: list[Path], wall_time: float) -> Path:
    manifest = {
        "command": command,
        "config_hash": config_hash(items),
        "config": items,
        "outputs": [str(p) for p in outputs],
        "wall_time": wall_time,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _grid(args) -> GridSpec:
    try:
        return GridSpec(m_min=args.grid_min, m_max=args.grid_max, n_points=args.grid_n, spacing=args.grid_spacing)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _load(args):
    params, efficacy = load_config(args.config)
    items = resolved_items(params, efficacy)
    return params, efficacy, items


def cmd_solve(args, out: Path):
    params, efficacy, items = _load(args)
    grid = _grid(args)
    items.update(grid=vars(grid), tol=args.tol)
    curve = solve_u_star(params, efficacy, grid, tol=args.tol)
    path = out / "policy_curve.csv"
    curve.to_csv(path)
    print(f"solved {grid.n_points} nodes, beta_g = {curve.beta_g:.6g}, "
          f"max |residual|/u^2 = {np.max(np.abs(curve.residual) / curve.u ** 2):.3g}")
    return items, [path]


def _profile(args):
    params, efficacy, items = _load(args)
    grid = _grid(args)
    anchor_hazard = params.m0 if args.anchor_hazard is None else args.anchor_hazard
    if not anchor_hazard > 0:
        raise ConfigError("an anchor hazard is needed: set m0 in the config or pass --anchor-hazard")
    items.update(grid=vars(grid), tol=args.tol, anchor_age=args.anchor_age, anchor_hazard=anchor_hazard,
                 age_min=args.age_min, age_max=args.age_max)
    curve = solve_u_star(params, efficacy, grid, tol=args.tol)
    profile = endogenous_mortality(params, efficacy, curve, (args.age_min, args.age_max),
                                   (args.anchor_age, anchor_hazard))
    return items, curve, profile


def cmd_profile(args, out: Path):
    items, _, profile = _profile(args)
    path = out / "age_profile.csv"
    profile.to_csv(path)
    print(f"profile over ages {args.age_min:g}-{args.age_max:g} written to {path}")
    return items, [path]


def cmd_plot_data(args, out: Path):
    items, curve, profile = _profile(args)
    paths = [out / "age_profile.csv", out / "plot_data.csv", out / "policy_curve.csv"]
    profile.to_csv(paths[0])
    profile.to_csv(paths[1], plot_columns=True)
    curve.to_csv(paths[2])
    print(f"plot data written to {out}")
    return items, paths


def cmd_simulate(args, out: Path):
    params, efficacy, items = _load(args)
    grid = _grid(args)
    m_init = params.m0 if args.anchor_hazard is None else args.anchor_hazard
    config = SimConfig(n_paths=args.paths, horizon=args.horizon, seed=args.seed, m_init=m_init)
    items.update(grid=vars(grid), tol=args.tol, paths=args.paths, horizon=args.horizon, seed=args.seed,
                 m_init=m_init)
    curve = solve_u_star(params, efficacy, grid, tol=args.tol)
    outcome = simulate(params, efficacy, Analytic(curve), config)
    analytic = value_function(1.0, m_init, curve)
    path = out / "sim_outcome.csv"
    outcome.to_csv(path)
    outputs = [path]
    if args.dump_paths:
        dump = out / "sim_paths.csv"
        outcome.paths_to_csv(dump)
        outputs.append(dump)
    print(f"mean welfare {outcome.mean:.8g} ± {outcome.std_err:.3g} "
          f"(truncation bound {outcome.truncation_bound:.3g}); analytic value {analytic:.8g}")
    return items, outputs


def cmd_calibrate(args, out: Path):
    params, _, items = _load(args)
    early = load_cohort_csv(args.early, cohort_year=1900)
    late = load_cohort_csv(args.late, cohort_year=1940)
    search = SearchSpec(restarts=args.restarts, seed=args.seed, anchor_age=args.anchor_age,
                        workers=args.workers or _env_workers())
    items.update(early=str(args.early), late=str(args.late), restarts=args.restarts, seed=args.seed,
                 anchor_age=args.anchor_age, dropped_rows=early.dropped + late.dropped)
    gomp = fit_gompertz(early, anchor_age=args.anchor_age)
    beta, m0 = gomp.params["beta"], gomp.params["m0"]
    fit = fit_efficacy(late, (beta, m0), params, search)
    (out / "gompertz_fit.txt").write_text(gomp.to_text())
    (out / "efficacy_fit.txt").write_text(fit.to_text())
    fitted_params = params.replace(beta=beta, m0=m0)
    fitted_eff = EfficacyModel.isoelastic(fit.params["a"], fit.params["q"])
    model = np.exp(model_log_hazard(fitted_params, fitted_eff, late.ages, args.anchor_age, search.grid, search.tol))
    curve_path = out / "fitted_curve.csv"
    save_fitted_curve(curve_path, late.ages, late.rates, model)
    print(f"beta = {beta:.6g}, m0 = {m0:.6g}, a = {fit.params['a']:.6g}, q = {fit.params['q']:.6g}, "
          f"converged = {fit.converged}")
    return items, [out / "gompertz_fit.txt", out / "efficacy_fit.txt", curve_path]


def _env_workers() -> int:
    import os

    env = os.environ.get("GOMPERTZ_OPT_THREADS")
    return max(1, int(env)) if env else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gompertz-opt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--grid.min", dest="grid_min", type=float, default=1e-5)
        p.add_argument("--grid.max", dest="grid_max", type=float, default=20.0)
        p.add_argument("--grid.n", dest="grid_n", type=int, default=256)
        p.add_argument("--grid.spacing", dest="grid_spacing", choices=("log", "linear"), default="log")
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--anchor-age", type=float, default=0.0)
        p.add_argument("--anchor-hazard", type=float, default=None)
        return p

    common(sub.add_parser("solve", help="solve for the consumption-wealth curve"))
    for name, helptext in (("profile", "age profile of mortality and spending"),
                           ("plot-data", "profile, curve and Gompertz reference columns")):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("--age-min", type=float, default=0.0)
        p.add_argument("--age-max", type=float, default=100.0)
    p = common(sub.add_parser("simulate", help="Monte Carlo check of the value function"))
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--horizon", type=float, default=300.0)
    p.add_argument("--dump-paths", action="store_true")
    p = common(sub.add_parser("calibrate", help="fit (beta, m0) and (a, q) to cohort tables"))
    p.add_argument("--early", required=True, type=Path, help="age,rate table without healthcare")
    p.add_argument("--late", required=True, type=Path, help="age,rate table with healthcare")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--workers", type=int, default=None)
    return parser


COMMANDS = {"solve": cmd_solve, "profile": cmd_profile, "plot-data": cmd_plot_data,
            "simulate": cmd_simulate, "calibrate": cmd_calibrate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out: Path = args.out
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        items, outputs = COMMANDS[args.command](args, out)
    except ConditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.report is not None:
            for cond in exc.report.failures():
                print(f"  violated: {cond.violation()}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, DataFormatError, InsufficientDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, IntegrationError, ExtrapolationError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    write_manifest(out, args.command, items, outputs, time.perf_counter() - start)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
