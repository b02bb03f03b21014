# Ground truth for the experiments: a grid search and plain projected
# subgradient descent on the weighted objective.

import numpy as np

from distsubgrad import (Ball, Box, L1Shift, MaxAffine, ProblemSpec, Quadratic, SumOf,
                         certify_subgradient_bound)
from distsubgrad.convexcore import HalfspaceBox
from distsubgrad.oracle import solve_centralized, solve_grid, solve_grid_exhaustive

spec = ProblemSpec(
    (SumOf((Quadratic.squared_distance([1, 1]), L1Shift([0.3, 0.3], [0, 0]))),
     MaxAffine([[1, 0], [0, 1]], [0, 0])),
    (Ball([0, 0], 1.0), HalfspaceBox.from_params([-1, -1], [1, 1], [1, 1], 0.5)))
q = [0.5, 0.5]
print("certified subgradient bound G =", certify_subgradient_bound(spec))

for h in (1e-2, 1e-3, 1e-4):
    sol = solve_grid(spec, q, h)
    print(f"grid h={h:g}: x* = {np.round(sol.x_star, 5)}  f* = {sol.f_star:.8f}  "
          f"certified gap <= {sol.certified_gap:.1e}")

# the pruned search returns exactly the exhaustive answer
a, b = solve_grid(spec, q, 1e-2), solve_grid_exhaustive(spec, q, 1e-2)
print("pruned == exhaustive:", np.array_equal(a.x_star, b.x_star))

cent = solve_centralized(spec, q, budget=20_000, grid_resolution=1e-3)
print(f"centralized: x* = {np.round(cent.x_star, 5)}  f* = {cent.f_star:.8f}  "
      f"gap bound {cent.certified_gap:.1e}")

# Box-only problems stay cheap at fine resolution
boxes = ProblemSpec((Quadratic.squared_distance([2, 0]), L1Shift([1, 1], [0, 0.5])),
                    (Box([-1, -1], [1, 1]), Box([0, -2], [2, 0.8])))
print("boxes:", solve_grid(boxes, q, 1e-4).x_star)
