"""Distributed projected subgradient method for multi-agent convex optimization.

Agents mix their neighbours' estimates with row-stochastic weights that may
change every round, step along a subgradient of their own objective and
project back onto their own constraint set.  Step sizes only need to be
positive, vanishing and non-summable.
"""

__version__ = "0.1.0"

from .convexcore import (Affine, Ball, Box, FullSpace, HalfspaceBox, IntersectionOfBoxes,
                         L1Shift, MaxAffine, ProblemSpec, Quadratic, SumOf,
                         certify_subgradient_bound, contains, project, subgradient, value)
from .engine import (RunConfig, RunTrace, consensus_error, run, step,
                     weighted_average_recursion_check)
from .graphmodel import (FixedGraph, PeriodicGraph, RandomSwitchingGraph, check_balanced,
                         check_joint_strong_connectivity, compute_left_eigenvector,
                         make_graph_sequence, validate_row_stochastic)
from .oracle import OracleSolution, solve_centralized, solve_grid
from .schedule import (Constant, LogPolynomial, PerAgentPerturbed, Polynomial, alpha,
                       per_agent_alpha, validate_step_envelope)
