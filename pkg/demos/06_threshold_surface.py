"""Where the calibrated threshold differs from the normal quantile.

kappa(r) depends on the data only through (R_gamma, K_gg).  Far into the
stationary or explosive regimes it settles near Phi^{-1}(0.9) = 1.2816
(no adjustment needed there); the action is in the nearly-integrated
band.  Prints a coarse numeric surface; `cvfkit cvf-surface` writes the
full CSV that the figures package renders.
"""

import numpy as np

import cvfkit as ck
from cvfkit.engine import reduce_draws, _threshold_from_stats, derive_seed

SEED = 9
T = 100
cov = ck.Cov2(1.0, 0.95, 1.0)

model = ck.refine(
    cov, T=T, alpha=0.10, eps=0.02, J=4_000, calibration_J=50_000,
    seed=SEED, max_iter=25,
).model

print("gamma    median kappa   5%..95% kappa     median |R_g/K_gg|")
for gamma in (0.2, 0.5, 0.85, 1.0, 1.05, 1.2, 1.4):
    stats = reduce_draws(gamma, T, 4_000, derive_seed(SEED, "surf", int(100 * gamma)), cov)
    kappa = _threshold_from_stats(model, stats)
    ratio = np.abs(stats.r_gamma / stats.k_gg)
    lo, mid, hi = np.quantile(kappa, [0.05, 0.5, 0.95])
    print(
        f"{gamma:5.2f}   {mid:10.3f}   [{lo:6.3f}, {hi:6.3f}]   {np.median(ratio):12.1f}"
    )

print("\nnormal quantile for comparison: 1.2816")
