import numpy as np
import pytest

from distsubgrad.convexcore import (Ball, Box, FullSpace, HalfspaceBox, L1Shift, MaxAffine,
                                    ProblemSpec, Quadratic, SumOf, certify_subgradient_bound)
from distsubgrad.oracle import (closed_form_quadratic, solve_centralized, solve_grid,
                                solve_grid_exhaustive)

from conftest import symmetric_pair


def test_grid_kink_1d():
    spec = ProblemSpec((L1Shift([1.0], [0.3]),), (Box([-2], [2]),))
    sol = solve_grid(spec, [1.0], 1e-3)
    assert 0.299 <= sol.x_star[0] <= 0.301
    assert sol.certified_gap >= 0


def test_grid_symmetric_pair():
    sol = solve_grid(symmetric_pair(), [0.5, 0.5], 1e-4)
    assert abs(sol.x_star[0]) <= 1e-4
    assert sol.f_star == pytest.approx(1.0, abs=1e-8)


def test_grid_empty_region():
    spec = ProblemSpec((L1Shift([1.0], [0.0]), L1Shift([1.0], [0.0])),
                       (Box([0], [1]), Box([2], [3])))
    with pytest.raises(ValueError):
        solve_grid(spec, [0.5, 0.5], 1e-2)


def test_grid_rejects_high_dimension():
    spec = ProblemSpec((Quadratic(np.eye(3)),), (Box([-1] * 3, [1] * 3),))
    with pytest.raises(ValueError):
        solve_grid(spec, [1.0], 0.1)


def test_centralized_examples():
    spec = ProblemSpec((Quadratic(np.eye(2)),), (FullSpace(2),),
                       sampling_box=([-2, -2], [2, 2]))
    sol = solve_centralized(spec, [1.0], budget=20000)
    assert np.linalg.norm(sol.x_star) < 1e-2
    assert sol.f_star == pytest.approx(0.0, abs=1e-4)

    pair = symmetric_pair()
    sol = solve_centralized(pair, [0.5, 0.5], budget=20000)
    assert sol.x_star[0] == pytest.approx(0.0, abs=1e-3)
    assert sol.f_star == pytest.approx(1.0, abs=1e-4)

    q = [2 / 3, 1 / 3]
    sol = solve_centralized(pair, q, budget=20000)
    assert sol.x_star[0] == pytest.approx(1 / 3, abs=1e-3)
    # (2/3)(4/9) + (1/3)(16/9) = 8/9
    assert sol.f_star == pytest.approx(8 / 9, abs=1e-4)
    np.testing.assert_allclose(closed_form_quadratic(pair, q).x_star, [1 / 3], atol=1e-12)


PROBLEMS = {
    "boxes": ProblemSpec(
        (MaxAffine([[1, 0.5], [-1, 0], [0, -1]], [0, 0, 0]),
         Quadratic.squared_distance([1.5, 0.5], 0.5),
         L1Shift([0.5, 0.5], [0.2, 0.9])),
        (Box([-1, -1], [1, 1]), Box([-0.5, -1], [1.5, 1]), Box([-1, -0.5], [1, 1.5]))),
    "ball-halfspace": ProblemSpec(
        (SumOf((Quadratic.squared_distance([1, 1]), L1Shift([0.3, 0.3], [0, 0]))),
         MaxAffine([[1, 0], [0, 1]], [0, 0])),
        (Ball([0, 0], 1.0), HalfspaceBox.from_params([-1, -1], [1, 1], [1, 1], 0.5))),
    "unconstrained": ProblemSpec(
        (Quadratic.squared_distance([0.4, 0.0], 0.5), L1Shift([0.2, 0.2], [0, 0.4])),
        (FullSpace(2), FullSpace(2)), sampling_box=([-2, -2], [2, 2])),
}


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_branch_and_bound_equals_exhaustive(name):
    spec = PROBLEMS[name]
    q = np.full(spec.n, 1.0 / spec.n)
    fast = solve_grid(spec, q, 1e-2)
    slow = solve_grid_exhaustive(spec, q, 1e-2)
    np.testing.assert_array_equal(fast.x_star, slow.x_star)
    assert fast.f_star == slow.f_star


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_grid_and_centralized_agree(name):
    spec = PROBLEMS[name]
    q = np.full(spec.n, 1.0 / spec.n)
    grid = solve_grid(spec, q, 2e-3)
    cent = solve_centralized(spec, q, budget=20000, grid_resolution=None)
    G = certify_subgradient_bound(spec)
    assert abs(grid.f_star - cent.f_star) <= grid.certified_gap + G * 2e-3


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_f_star_is_lower_bound_witness(name):
    spec = PROBLEMS[name]
    q = np.full(spec.n, 1.0 / spec.n)
    sol = solve_grid(spec, q, 2e-3)
    rng = np.random.default_rng(0)
    lo, hi = spec.region()
    Z = rng.uniform(lo, hi, size=(20000, 2))
    Z = Z[spec.feasible_set.member_mask(Z)][:1000]
    assert len(Z) == 1000
    assert np.all(spec.weighted_values(q, Z) >= sol.f_star - sol.certified_gap)
    if spec.constrained:
        assert max(S.distance(sol.x_star) for S in spec.constraints) < 1e-9


def test_solution_serialises():
    d = solve_grid(symmetric_pair(), [0.5, 0.5], 1e-2).to_dict()
    assert d["method"] == "grid" and isinstance(d["x_star"], list)
