"""Why calibration is needed: resampling baselines at the unit root.

The residual bootstrap (nonparametric or parametric) re-estimates the AR
coefficient and regenerates pseudo-series; near gamma = 1 the estimator's
bias feeds straight into the bootstrap distribution, so the test badly
over- or under-rejects when the innovations are strongly correlated.
Subsampling is better at gamma = 1 exactly but drifts for gamma near one.
"""

import cvfkit as ck
from cvfkit import baselines as bl

SEED = 11
T, J, B = 100, 1_500, 199
cov = ck.Cov2(1.0, -0.95, 1.0)

print(f"null rejection rates at 10% nominal (T={T}, {J} Monte Carlo runs)\n")
print("gamma   normal  boot-np  boot-par  subsample")
for gamma in (0.5, 0.9, 0.95, 1.0):
    row = [f"{gamma:5.2f}"]
    kinds = (bl.NORMAL_QUANTILE, bl.BOOTSTRAP_NP, bl.BOOTSTRAP_PARAM, bl.SUBSAMPLING)
    for pos, kind in enumerate(kinds):
        est = bl.baseline_rejection_rate(
            kind, gamma, cov, T, J, seed=SEED + 997 * pos, B=B
        )
        row.append(f"{est.p_hat:7.3f}")
    print("  ".join(row))

print(
    "\nThe bootstraps sit far from 0.10 near the unit root; subsampling holds"
    "\nat gamma = 1 but wanders just below it. The calibrated test (demos 01-02)"
    "\nstays near 0.10 across the whole range."
)
