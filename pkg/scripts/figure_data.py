"""Write CSVs for the policy and mortality figures under the calibrated model.

Usage: python scripts/figure_data.py [OUT_DIR]
"""

import sys
from pathlib import Path

import numpy as np

from gompertz_opt import CALIBRATED_EFFICACY, CALIBRATED_PARAMS, GridSpec, c0, endogenous_mortality, solve_u_star, u0


def main(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    params, efficacy = CALIBRATED_PARAMS, CALIBRATED_EFFICACY
    curve = solve_u_star(params, efficacy, GridSpec())
    curve.to_csv(out / "policy_curve.csv")

    # consumption rate against its two no-healthcare brackets
    m = curve.nodes
    table = np.column_stack([m, curve.u, u0(m, params), c0(m, params), curve.h])
    np.savetxt(out / "consumption_rates.csv", table, delimiter=",", comments="",
               header="m,u_star,u0,c0,h", fmt="%.17g")

    profile = endogenous_mortality(params, efficacy, curve, (0, 110), (0, params.m0))
    profile.to_csv(out / "age_profile.csv", plot_columns=True)
    for age in (40, 60, 80, 100):
        i = int(np.searchsorted(profile.ages, age))
        print(f"age {age}: hazard {profile.mortality[i]:.4g} (Gompertz {profile.gompertz()[i]:.4g}), "
              f"health {100 * profile.health_rate[i]:.3f}% of wealth, share {100 * profile.health_share[i]:.1f}%")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/figures"))
