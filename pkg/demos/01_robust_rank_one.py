"""Rank-one recovery under cell outliers: plain SVD vs smoothed vs robust.

Builds a smooth rank-one surface, sprinkles gross outliers on it, and fits
the three estimators. The robust fit should track the clean signal while the
squared-loss fits chase the outliers.
"""

import numpy as np

from robrsvd import fit_rank_one_robrsvd, fit_rank_one_rsvd, fit_rank_one_svd
from robrsvd.simulate import SimScenario, generate, metric_l2

scenario = SimScenario(
    grid_size=(60, 60),
    noise_variance=0.5,
    contamination="outlying_cells",
    seed=7,
)
result = generate(scenario)
X = result.data
u_true = result.truth.left[:, 0]
v_true = result.truth.right[:, 0]

print(f"surface {X.shape[0]}x{X.shape[1]}, "
      f"{len(result.contaminated_cells)} contaminated cells, "
      f"noise variance {scenario.noise_variance}")

fits = {
    "svd": fit_rank_one_svd(X),
    "rsvd": fit_rank_one_rsvd(X),
    "robrsvd": fit_rank_one_robrsvd(X),
}

print(f"\n{'method':10s} {'L2(u)':>9s} {'L2(v)':>9s} {'|s-773|':>9s} "
      f"{'lam_u':>9s} {'lam_v':>9s} iters")
for name, pair in fits.items():
    print(f"{name:10s} {metric_l2(pair.u, u_true):9.4f} {metric_l2(pair.v, v_true):9.4f} "
          f"{abs(pair.s - 773.0):9.3f} {pair.lambda_u:9.2e} {pair.lambda_v:9.2e} "
          f"{pair.iterations}")

rob = fits["robrsvd"]
print(f"\nrobust fit converged: {rob.converged}, "
      f"residual scale sigma = {rob.history['sigma']:.3f}")
print("the Huber weights bound each cell's influence, so the contaminated "
      "cells are downweighted instead of dragging the whole component")
