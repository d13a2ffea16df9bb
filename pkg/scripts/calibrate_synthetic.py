"""Fit the shipped synthetic cohorts and compare with the generating values.

Usage: python scripts/calibrate_synthetic.py [WORKERS]
"""

import sys
import time
from pathlib import Path

from gompertz_opt import CALIBRATED_PARAMS, SearchSpec, fit_efficacy, fit_gompertz, load_cohort_csv

DATA = Path(__file__).resolve().parent.parent / "data"
TRUTH = {"beta": 0.077, "m0": 1.9e-4, "a": 0.1, "q": 0.46}


def main(workers: int):
    start = time.perf_counter()
    early = load_cohort_csv(DATA / "cohort_1900.csv", cohort_year=1900)
    late = load_cohort_csv(DATA / "cohort_1940.csv", cohort_year=1940)
    gomp = fit_gompertz(early)
    fit = fit_efficacy(late, (gomp.params["beta"], gomp.params["m0"]), CALIBRATED_PARAMS,
                       SearchSpec(restarts=3, workers=workers))
    for name, value in {**gomp.params, **fit.params}.items():
        print(f"{name:>4} = {value:.6g}  (true {TRUTH[name]:.6g}, {100 * (value / TRUTH[name] - 1):+.2f}%)")
    print(f"loss {fit.loss:.4g}, {fit.n_evals} evaluations, converged {fit.converged}, "
          f"{time.perf_counter() - start:.1f} s")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 1)
