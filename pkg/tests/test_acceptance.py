"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected in ``RESULTS`` and echoed in pytest's terminal
summary (see ``conftest.py``).  Running this file directly with python
prints them as well.
"""

import json
import math

import numpy as np
import pytest

from distsubgrad import cli
from distsubgrad.config import build_experiment, parse_text, validate_experiment
from distsubgrad.convexcore import (Affine, Ball, Box, FullSpace, HalfspaceBox, Intersection,
                                    L1Shift, MaxAffine, ProblemSpec, Quadratic, SumOf)
from distsubgrad.engine import RunConfig, run, weighted_average_recursion_check
from distsubgrad.graphmodel import (FixedGraph, PeriodicGraph, check_balanced,
                                    check_joint_strong_connectivity, compute_left_eigenvector,
                                    is_strongly_connected, uniform_weights,
                                    validate_row_stochastic)
from distsubgrad.schedule import Polynomial

from conftest import closure, symmetric_pair

RESULTS = {}
CASES = 10_000
PRESETS = [name for name, _ in cli.list_presets()]
UNCONSTRAINED = ("thm1_balanced_sqrt", "thm1_fixed_unbalanced", "classical_p1",
                 "negative_constant_step")


def record(n, title, passed, detail):
    line = f"criterion {n} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    RESULTS[n] = line
    print(line)
    assert passed, line


def _run_preset(name, out):
    code = cli.run_experiment_raw(parse_text(cli.preset_text(name)), out_dir=out,
                                  log=lambda *a: None)
    summary = json.loads((out / "summary.json").read_text())
    return code, summary, (out / "trace.csv").read_bytes()


@pytest.fixture(scope="module")
def preset_runs(tmp_path_factory):
    """Every preset run twice through the CLI path, same seed."""
    root = tmp_path_factory.mktemp("presets")
    return {name: (_run_preset(name, root / name / "a"), _run_preset(name, root / name / "b"))
            for name in PRESETS}


def _final(preset_runs, name):
    return preset_runs[name][0][1]["final"]


def _experiment(name, **run_overrides):
    raw = parse_text(cli.preset_text(name))
    raw.setdefault("run", {}).update(run_overrides)
    return build_experiment(raw)


# ---------------------------------------------------------------------------

def test_criterion_1_unconstrained_balanced_general_step(preset_runs):
    exp = _experiment("thm1_balanced_sqrt")
    g = exp.graph
    graph_ok = (isinstance(g, PeriodicGraph) and g.period == 3 and g.window == 3
                and g.n == 5 and all(check_joint_strong_connectivity(g, 3 * p, 3)
                                     for p in range(10)))
    (code, summary, _), _ = preset_runs["thm1_balanced_sqrt"]
    fin = summary["final"]
    oracle = summary["oracle"]
    ok = (graph_ok and code == 0 and not exp.problem.constrained
          and summary["schedule_class"] == "general"
          and oracle["method"] == "grid" and oracle["meta"]["resolution"] == 1e-4
          and fin["rounds"] == 10**5
          and fin["final_consensus_diameter"] < 1e-2 and fin["final_objective_gap"] < 1e-2)
    record(1, "switching ring, alpha=1/sqrt(k+1), 1e5 rounds", ok,
           f"diameter={fin['final_consensus_diameter']:.3g}, "
           f"f-gap={fin['final_objective_gap']:.3g} (both < 1e-2)")


def test_criterion_2_fixed_unbalanced_weighted_minimizer():
    graph = FixedGraph(n=2, A=[[0.5, 0.5], [1.0, 0.0]])
    q = compute_left_eigenvector(graph).q
    # the diagonal entry a_22 = 0 fails the self-loop check, waived here
    cfg = RunConfig(symmetric_pair(), graph, Polynomial(), rounds=10**5, record_every=100,
                    waive=("self-loops",))
    y = run(cfg).final.y[0]
    ok = np.allclose(q, [2 / 3, 1 / 3], atol=1e-12) and abs(y - 1 / 3) < 1e-2
    record(2, "A=[[.5,.5],[1,0]] converges to q-weighted minimizer", ok,
           f"q={np.round(q, 12).tolist()}, |y-1/3|={abs(y - 1 / 3):.3g} < 1e-2, "
           f"|y-0|={abs(y):.3g}")


def test_criterion_3_constrained_boxes(preset_runs):
    exp = _experiment("thm2_boxes_sqrt")
    boxes = [(tuple(S.lo), tuple(S.hi)) for S in exp.problem.constraints]
    kinds = {f.kind for f in exp.problem.objectives} | {
        t.kind for f in exp.problem.objectives if isinstance(f, SumOf) for t in f.terms}
    (code, summary, _), _ = preset_runs["thm2_boxes_sqrt"]
    fin = summary["final"]
    ok = (code == 0 and exp.problem.n == 4 and len(set(boxes)) == 4
          and {"maxaffine", "quadratic"} <= kinds
          and fin["final_consensus_diameter"] < 1e-2
          and fin["max_local_infeasibility_all_rounds"] < 1e-9
          and fin["final_projected_objective_gap"] < 1e-2)
    record(3, "four non-identical boxes, 1e5 rounds", ok,
           f"diameter={fin['final_consensus_diameter']:.3g}, "
           f"max dist(x_i, X_i) over all rounds={fin['max_local_infeasibility_all_rounds']:.3g}, "
           f"f-gap at P_X(y)={fin['final_projected_objective_gap']:.3g}")


def test_criterion_4_constant_step_negative_control(preset_runs):
    text = cli.preset_text("negative_constant_step")
    unwaived = cli.validate_text(text.replace('waive = ["step-envelope"]', ""))
    rejected = [c.name for c in unwaived.violations] == ["step-envelope"]
    (code, summary, _), _ = preset_runs["negative_constant_step"]
    gap = summary["final"]["final_objective_gap"]
    achieved = _final(preset_runs, "thm1_balanced_sqrt")["final_objective_gap"]
    ok = (rejected and code == 0 and summary["status"] == "expected-failure confirmed"
          and gap > 10 * achieved)
    record(4, "constant step 0.1 rejected, then misses the general-step gap", ok,
           f"validator rejects ({unwaived.violations[0].message}); waived gap={gap:.3g} "
           f"> 10 x {achieved:.3g}")


def test_criterion_5_classical_and_general_both_converge(preset_runs):
    general = _final(preset_runs, "thm1_balanced_sqrt")["final_objective_gap"]
    classical = _final(preset_runs, "classical_p1")["final_objective_gap"]
    classes = (preset_runs["classical_p1"][0][1]["schedule_class"],
               preset_runs["thm1_balanced_sqrt"][0][1]["schedule_class"])
    ok = classical < 1e-2 and general < 1e-2 and classes == ("classical", "general")
    record(5, "1/(k+1) (square-summable) and 1/sqrt(k+1) (not)", ok,
           f"classical gap={classical:.3g}, general gap={general:.3g}")


def test_criterion_6_weighted_average_recursion():
    worst = {}
    for name in UNCONSTRAINED:
        exp = _experiment(name, record_every=1)
        tr = run(exp.run_config())
        worst[name] = weighted_average_recursion_check(tr, tr.q)
    graph = FixedGraph(n=2, A=[[0.5, 0.5], [1.0, 0.0]])
    tr = run(RunConfig(symmetric_pair(), graph, Polynomial(), rounds=10**4,
                       waive=("self-loops",)))
    worst["fixed pair [[.5,.5],[1,0]]"] = weighted_average_recursion_check(tr, tr.q)
    ok = max(worst.values()) < 1e-10
    record(6, "y(k+1) = y(k) - sum_i q_i alpha_i(k) g_i(k) on unconstrained traces", ok,
           f"max residual {max(worst.values()):.3g} over {len(worst)} traces")


# -- criterion 7: property suites --------------------------------------------

SETS = [
    Box([-1, 0], [1, 2]),
    Ball([0.5, -0.5], 1.5),
    HalfspaceBox.from_params([-1, -1], [1, 1], [1, 2], 0.5),
    Intersection((Box([-1, -1], [1, 1]), Ball([1, 0], 1.2))),
    FullSpace(2),
]
OBJECTIVES = [
    Quadratic([[2.0, 0.5], [0.5, 1.0]], [1.0, -1.0], 0.3),
    L1Shift([0.5, 2.0], [0.3, -0.7]),
    MaxAffine([[1, 0.5], [-1, 0], [0, -1]], [0, 0.2, 0]),
    SumOf((Quadratic.squared_distance([1, 1], 0.25), L1Shift([1, 1], [0, 0]))),
    Affine([3, -4], 1.0),
]


def _points(rng, size):
    # mix of generic points and points placed exactly on kinks
    P = rng.uniform(-4, 4, size=(size, 2))
    snap = rng.random(size) < 0.1
    P[snap] = np.round(P[snap], 1)
    return P


def _nonexpansive(rng):
    fails = 0
    for x, y, s in zip(_points(rng, CASES), _points(rng, CASES), rng.integers(0, len(SETS), CASES)):
        X = SETS[s]
        fails += np.linalg.norm(X.project(x) - X.project(y)) > np.linalg.norm(x - y) + 1e-10
    return fails


def _idempotent(rng):
    fails = 0
    for x, s in zip(_points(rng, CASES), rng.integers(0, len(SETS), CASES)):
        X = SETS[s]
        p = X.project(x)
        fails += np.max(np.abs(X.project(p) - p)) > 1e-10 or not X.contains(p, 1e-9)
    return fails


def _subgradient_inequality(rng):
    fails = 0
    for x, x0, i in zip(_points(rng, CASES), _points(rng, CASES),
                        rng.integers(0, len(OBJECTIVES), CASES)):
        f = OBJECTIVES[i]
        fails += f.value(x) - f.value(x0) < f.subgradient(x0) @ (x - x0) - 1e-9
    return fails


def _random_matrix(rng):
    n = int(rng.integers(1, 6))
    M = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
    M[np.arange(n), np.arange(n)] += 0.1
    kind = rng.integers(0, 4)
    if kind >= 1:
        M = M / M.sum(axis=1, keepdims=True)
    if kind == 2:
        # symmetric doubly stochastic: uniform mixing on an undirected graph
        adj = rng.random((n, n)) < 0.5
        adj = adj | adj.T
        deg = adj.sum(axis=1)
        M = np.where(adj, 1.0 / (1 + np.maximum.outer(deg, deg)), 0.0)
        np.fill_diagonal(M, 0.0)
        np.fill_diagonal(M, 1.0 - M.sum(axis=1))
    if kind == 3:
        i, j = rng.integers(0, n, 2)
        M[i, j] += rng.choice([-1, 1]) * rng.uniform(1e-6, 0.1)
    return M


def _validators_vs_direct_sums(rng):
    fails = 0
    for _ in range(CASES):
        M = _random_matrix(rng)
        rows = [math.fsum(r) for r in M.tolist()]
        cols = [math.fsum(c) for c in M.T.tolist()]
        stochastic = all(abs(s - 1) < 1e-12 for s in rows)
        nonneg = all(v >= 0 for r in M.tolist() for v in r)
        rep = validate_row_stochastic(M)
        fails += rep.checks[0].passed != stochastic
        fails += rep.checks[1].passed != nonneg
        fails += check_balanced(M) != all(abs(s - 1) < 1e-12 for s in cols)
    return fails


def _connectivity_vs_closure(rng):
    fails = 0
    for _ in range(CASES):
        n = int(rng.integers(1, 6))
        B = int(rng.integers(1, 4))
        p = rng.uniform(0.05, 0.6)
        adjs = [rng.random((n, n)) < p for _ in range(B)]
        union = np.zeros((n, n), bool)
        for a in adjs:
            np.fill_diagonal(a, False)
            union |= a
        brute = bool(closure(union).all())
        fails += is_strongly_connected(union) != brute
        seq = PeriodicGraph(n=n, mats=tuple(uniform_weights(a) for a in adjs), window=B,
                            eta=0.2)
        fails += check_joint_strong_connectivity(seq, 0, B) != brute
    return fails


def test_criterion_7_property_suites():
    rng = np.random.default_rng(20240607)
    suites = {
        "projection non-expansiveness": _nonexpansive,
        "projection idempotence": _idempotent,
        "subgradient inequality": _subgradient_inequality,
        "row-stochastic/balance validators vs direct sums": _validators_vs_direct_sums,
        "joint connectivity vs transitive closure (n<=5)": _connectivity_vs_closure,
    }
    fails = {name: int(fn(rng)) for name, fn in suites.items()}
    record(7, f"property suites, {CASES} cases each", not any(fails.values()),
           ", ".join(f"{k}: {v} failures" for k, v in fails.items()))


def test_criterion_8_nonuniform_steps(preset_runs):
    exp = _experiment("nonuniform_steps")
    d = exp.schedule.d
    uniform = _final(preset_runs, "thm2_boxes_sqrt")["final_projected_objective_gap"]
    perturbed = _final(preset_runs, "nonuniform_steps")["final_projected_objective_gap"]
    ok = (min(d) == -0.5 and max(d) == 0.5 and exp.schedule.r == 1.0
          and perturbed < 1e-2 and perturbed <= 2 * uniform)
    record(8, "per-agent steps alpha(k)(1+d_i/(k+1)) on the box problem", ok,
           f"gap={perturbed:.3g} vs uniform {uniform:.3g} (ratio {perturbed / uniform:.2f} <= 2)")


def test_criterion_9_determinism(preset_runs):
    same = {name: runs[0][2] == runs[1][2] for name, runs in preset_runs.items()}
    ok = all(same.values()) and len(same) >= 7
    record(9, "byte-identical trace CSVs on re-run", ok,
           f"{sum(same.values())}/{len(same)} presets identical")


def test_every_preset_meets_its_declared_outcome(preset_runs):
    codes = {name: runs[0][0] for name, runs in preset_runs.items()}
    assert all(c == 0 for c in codes.values()), codes
    for name in PRESETS:
        report = validate_experiment(_experiment(name))
        assert report.passed, report.summary()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
