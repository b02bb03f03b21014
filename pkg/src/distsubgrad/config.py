"""Experiment config files: parsing, assumption checks and assembly into a RunConfig.

The canonical schema is TOML::

    name = "..."
    description = "..."

    [problem]
    dimension = 2
    G = "auto"                      # or a number
    sampling_box = { lo = [-2, -2], hi = [2, 2] }
    [[problem.agents]]
    objective = { kind = "quadratic", center = [0.4, 0.0], scale = 0.5 }
    constraint = { kind = "box", lo = [-1, -1], hi = [1, 1] }   # omit for R^m

    [graph]      # see graphmodel.make_graph_sequence
    [schedule]   # see schedule.make_schedule
    [run]        rounds, init, seed, record_every
    [oracle]     method = "grid" | "centralized" | "closed-form" | "none"
    [output]     directory
    [validation] waive = ["step-envelope"], expect_failure = false
    [thresholds] consensus_diameter, objective_gap, dist_to_opt
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import convexcore as cc
from .engine import RunConfig
from .graphmodel import GraphSequence, compute_left_eigenvector, make_graph_sequence, validate_graph
from .oracle import OracleSolution, closed_form_quadratic, solve_centralized, solve_grid
from .report import ValidationReport
from .schedule import StepSchedule, make_schedule, validate_step_envelope


class ConfigError(ValueError):
    """Malformed config: bad TOML or missing/invalid keys."""


@dataclass
class Experiment:
    name: str
    raw: dict
    problem: cc.ProblemSpec
    graph: GraphSequence
    schedule: StepSchedule
    run: dict
    oracle: dict
    thresholds: dict
    waive: tuple = ()
    expect_failure: bool = False
    output: dict = field(default_factory=dict)

    def run_config(self, oracle: OracleSolution | None = None) -> RunConfig:
        return RunConfig(
            problem=self.problem, graph=self.graph, schedule=self.schedule,
            rounds=int(self.run.get("rounds", 1000)),
            init=self.run.get("init", "uniform"),
            record_every=int(self.run.get("record_every", 1)),
            seed=int(self.run.get("seed", 0)),
            waive=self.waive, oracle=oracle)


def parse_text(text: str, source: str = "<string>") -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_raw(path) -> dict:
    path = Path(path)
    return parse_text(path.read_text(encoding="utf-8"), str(path))


def _section(raw: dict, name: str, required: bool = True) -> dict:
    if name not in raw:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    if not isinstance(raw[name], dict):
        raise ConfigError(f"[{name}] must be a table")
    return raw[name]


def build_problem(sec: dict) -> cc.ProblemSpec:
    agents = sec.get("agents")
    if not agents:
        raise ConfigError("problem.agents must list at least one agent")
    m = int(sec.get("dimension", 0)) or None
    objectives, constraints = [], []
    for i, agent in enumerate(agents):
        where = f"problem.agents[{i}]"
        if "objective" not in agent:
            raise ConfigError(f"{where}: missing objective")
        try:
            f = cc.make_objective(agent["objective"])
        except KeyError as exc:
            raise ConfigError(f"{where}.objective: missing key {exc}") from None
        m = m or f.dim
        try:
            X = cc.make_constraint(agent.get("constraint"), m)
        except KeyError as exc:
            raise ConfigError(f"{where}.constraint: missing key {exc}") from None
        objectives.append(f)
        constraints.append(X)
    G = sec.get("G", "auto")
    G = None if G == "auto" else float(G)
    box = sec.get("sampling_box")
    box = (box["lo"], box["hi"]) if box else None
    return cc.ProblemSpec(tuple(objectives), tuple(constraints), G=G, sampling_box=box,
                          unique_minimizer=bool(sec.get("unique_minimizer", True)))


def build_experiment(raw: dict) -> Experiment:
    """Assemble model objects; construction failures surface as ConfigError."""
    prob = _section(raw, "problem")
    validation = _section(raw, "validation", required=False)
    try:
        problem = build_problem(prob)
        graph = make_graph_sequence(_section(raw, "graph"))
        schedule = make_schedule(_section(raw, "schedule"))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return Experiment(
        name=str(raw.get("name", "experiment")), raw=raw, problem=problem, graph=graph,
        schedule=schedule, run=_section(raw, "run", required=False),
        oracle=_section(raw, "oracle", required=False),
        thresholds=_section(raw, "thresholds", required=False),
        waive=tuple(validation.get("waive", ())),
        expect_failure=bool(validation.get("expect_failure", False)),
        output=_section(raw, "output", required=False))


def _coercive(spec: cc.ProblemSpec, q) -> bool:
    def strong(f):
        if isinstance(f, cc.Quadratic):
            return np.linalg.eigvalsh(f.P).min() > 1e-12
        if isinstance(f, cc.L1Shift):
            return bool(np.all(f.w > 0))
        if isinstance(f, cc.SumOf):
            return any(strong(t) for t in f.terms)
        return False
    return any(qi > 0 and strong(f) for qi, f in zip(q, spec.objectives))


def validate_experiment(exp: Experiment, n_windows: int = 10) -> ValidationReport:
    """Run every model validator and name the assumption each check covers."""
    report = validate_graph(exp.graph, n_windows=n_windows)
    spec = exp.problem

    report.add("convex-objectives", True, "objectives convex by construction")

    if spec.constrained:
        try:
            x = spec.find_feasible_point()
        except ValueError as exc:
            report.add("constraint-sets", False, str(exc))
        else:
            report.add("constraint-sets", True,
                       f"bounded closed convex sets, common point {np.round(x, 6).tolist()}")
        report.add("bounded-optimal-set", True, "optimal set bounded and nonempty: compact feasible set")
    else:
        report.add("constraint-sets", True, "unconstrained: X_i = R^m")
        q = report.details.get("q", np.full(spec.n, 1.0 / spec.n))
        ok = _coercive(spec, q)
        report.add("bounded-optimal-set", ok, "coercive weighted objective" if ok else
                   "cannot certify a bounded optimal set; waive if known to hold")

    try:
        bound = cc.certify_subgradient_bound(spec)
    except ValueError as exc:
        report.add("subgradient-bound", False, str(exc))
    else:
        report.details["G_certified"] = bound
        if spec.G is None:
            report.add("subgradient-bound", True, f"G = {bound:.6g} (certified)")
        else:
            report.add("subgradient-bound", spec.G >= bound,
                       f"declared G={spec.G} vs certified bound {bound:.6g}")

    report.extend(validate_step_envelope(exp.schedule))
    report.waive(exp.waive)
    return report


def solve_oracle(exp: Experiment) -> OracleSolution | None:
    sec = exp.oracle
    method = sec.get("method", "grid" if exp.problem.m <= 2 else "centralized")
    if method == "none":
        return None
    q = compute_left_eigenvector(exp.graph)
    if method == "grid":
        return solve_grid(exp.problem, q, float(sec.get("resolution", 1e-3)))
    if method == "centralized":
        return solve_centralized(exp.problem, q, int(sec.get("budget", 1_000_000)),
                                 grid_resolution=sec.get("resolution", 1e-3))
    if method == "closed-form":
        return closed_form_quadratic(exp.problem, q)
    raise ConfigError(f"unknown oracle method {method!r}")


def with_overrides(raw: dict, seed: int | None = None, rounds: int | None = None) -> dict:
    raw = copy.deepcopy(raw)
    run = raw.setdefault("run", {})
    if seed is not None:
        run["seed"] = int(seed)
    if rounds is not None:
        run["rounds"] = int(rounds)
    return raw
