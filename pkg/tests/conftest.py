"""Independent brute-force oracles shared by the test modules."""

import sys

import numpy as np
import pytest

from distsubgrad import FullSpace, ProblemSpec, Quadratic


def closure(adj):
    """Reflexive-transitive closure by Warshall's triple loop."""
    R = np.array(adj, dtype=bool) | np.eye(len(adj), dtype=bool)
    n = len(R)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                R[i, j] = R[i, j] or (R[i, k] and R[k, j])
    return R


def strongly_connected_brute(adj):
    return bool(closure(adj).all())


def grid_project(mask_fn, x, lo, hi, h):
    """Closest grid point of ``{p : mask_fn(p)}`` to ``x`` on a spacing-``h`` grid."""
    axes = [np.arange(a, b + h / 2, h) for a, b in zip(lo, hi)]
    P = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    P = P[mask_fn(P)]
    return P[np.argmin(((P - x) ** 2).sum(axis=1))]


def symmetric_pair(G_box=2.0):
    """f1 = (x-1)^2, f2 = (x+1)^2 on R, with a sampling box for G."""
    f1 = Quadratic([[2.0]], [-2.0], 1.0)
    f2 = Quadratic([[2.0]], [2.0], 1.0)
    return ProblemSpec((f1, f2), (FullSpace(1), FullSpace(1)),
                       sampling_box=([-G_box], [G_box]))


@pytest.fixture
def pair_problem():
    return symmetric_pair()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
