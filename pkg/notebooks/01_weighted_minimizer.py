# Two agents on a fixed, unbalanced graph.
#
# Agent 1 holds f1(x) = (x-1)^2, agent 2 holds f2(x) = (x+1)^2.  The plain
# sum is minimised at 0, but the agents do not average their estimates
# evenly: agent 2 listens only to agent 1.  The iteration then minimises
# q1 f1 + q2 f2, with q the left eigenvector of the weight matrix.

import numpy as np

from distsubgrad import (FixedGraph, FullSpace, Polynomial, ProblemSpec, Quadratic,
                         RunConfig, compute_left_eigenvector, run)
from distsubgrad.oracle import closed_form_quadratic

A = np.array([[0.5, 0.5],
              [1.0, 0.0]])
graph = FixedGraph(n=2, A=A)
q = compute_left_eigenvector(graph)
print("left eigenvector q =", q.q)           # (2/3, 1/3)
print("residual |qA - q| =", q.residual(A))

f1 = Quadratic([[2.0]], [-2.0], 1.0)
f2 = Quadratic([[2.0]], [2.0], 1.0)
problem = ProblemSpec((f1, f2), (FullSpace(1), FullSpace(1)), sampling_box=([-2], [2]))

sol = closed_form_quadratic(problem, q)
print("weighted minimiser x* =", sol.x_star, " f* =", sol.f_star)

# a_22 = 0, so the self-loop check fails; the method does not need it here
cfg = RunConfig(problem, graph, Polynomial(a=1.0, k0=1.0, p=0.5), rounds=20_000,
                record_every=2_000, init=[[1.5], [-1.5]], waive=("self-loops",), oracle=sol)
trace = run(cfg)

print()
print("     k   y(k)        diameter    f(y)-f*")
for r in range(len(trace)):
    rec = trace[r]
    print(f"{rec.k:6d}   {rec.y[0]: .6f}   {rec.metrics['consensus_diameter']:.2e}   "
          f"{rec.metrics['weighted_objective_gap']:.2e}")

# the estimates agree with 1/3, not with the unweighted minimiser 0
print("\nfinal y =", trace.final.y[0])
