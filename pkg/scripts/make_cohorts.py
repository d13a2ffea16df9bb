"""Write the synthetic cohort tables in data/.

The early cohort is pure Gompertz, the late one follows the endogenous
hazard of the calibrated model; both carry 2% lognormal noise.
"""

from pathlib import Path

import numpy as np

from gompertz_opt.calibration import save_cohort_csv, synthetic_gompertz_cohort, synthetic_healthcare_cohort
from gompertz_opt.model import CALIBRATED_PARAMS, EfficacyModel

DATA = Path(__file__).resolve().parent.parent / "data"
AGES = np.arange(0, 101)
NOISE = 0.02


def main():
    p = CALIBRATED_PARAMS
    early = synthetic_gompertz_cohort(p.beta, p.m0, AGES, noise=NOISE, seed=1900, cohort_year=1900)
    late = synthetic_healthcare_cohort(p, EfficacyModel.isoelastic(0.1, 0.46), AGES, noise=NOISE,
                                       seed=1940, cohort_year=1940)
    save_cohort_csv(early, DATA / "cohort_1900.csv")
    save_cohort_csv(late, DATA / "cohort_1940.csv")


if __name__ == "__main__":
    main()
