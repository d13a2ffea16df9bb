"""Monte Carlo check of the value function and of perturbed policies.

Usage: python scripts/probe_optimality.py [N_PATHS]
"""

import sys

from gompertz_opt import (
    CALIBRATED_EFFICACY,
    CALIBRATED_PARAMS,
    Analytic,
    ScaleC,
    ScaleH,
    SimConfig,
    optimality_probe,
    simulate,
    solve_u_star,
    value_function,
)


def main(n_paths: int):
    params, efficacy = CALIBRATED_PARAMS, CALIBRATED_EFFICACY
    curve = solve_u_star(params, efficacy)
    config = SimConfig(n_paths=n_paths, seed=1)
    out = simulate(params, efficacy, Analytic(curve), config)
    print(f"value {value_function(1.0, params.m0, curve):.6f}, simulated {out.mean:.6f} ± {out.std_err:.2g}")
    for pert in (ScaleC(0.8), ScaleC(1.2), ScaleH(0.0), ScaleH(2.0)):
        probe = optimality_probe(params, efficacy, curve, pert, config)
        print(f"{pert}: gap {probe.gap:.5f} ± {probe.gap_std_err:.2g}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20_000)
