"""Synchronous executor of the distributed projected subgradient update.

At round ``k`` every agent ``i`` forms the mixed estimate
``v_i = sum_j a_ij(k) x_j(k)``, takes a subgradient ``g_i`` of its own
objective *at* ``v_i``, and sets ``x_i(k+1) = P_{X_i}(v_i - alpha_i(k) g_i)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .convexcore import Box, ProblemSpec
from .graphmodel import GraphSequence, LeftEigenvector, compute_left_eigenvector, validate_graph
from .report import ValidationReport
from .schedule import StepSchedule, agent_alphas, schedule_class, validate_step_envelope

CSV_COLUMNS = ("k", "alpha", "consensus_diameter", "objective_at_y",
               "weighted_objective_gap", "dist_to_opt", "max_infeasibility")


class EngineAbort(RuntimeError):
    """Raised when an iterate stops being finite."""


@dataclass
class RunConfig:
    problem: ProblemSpec
    graph: GraphSequence
    schedule: StepSchedule
    rounds: int = 1000
    init: object = "uniform"
    record_every: int = 1
    seed: int = 0
    allow_invalid_schedule: bool = False
    waive: tuple = ()
    q: LeftEigenvector | None = None
    oracle: object | None = None
    validate: bool = True

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.graph.n != self.problem.n:
            raise ValueError(f"graph has {self.graph.n} agents, problem has {self.problem.n}")


@dataclass
class RoundRecord:
    k: int
    x: np.ndarray
    v: np.ndarray
    y: np.ndarray
    g: np.ndarray
    alpha_used: np.ndarray
    metrics: dict


@dataclass
class RunTrace:
    """Recorded rounds stored as stacked arrays.

    ``x``, ``v``, ``g`` have shape ``(R, n, m)``; ``alpha_used`` is
    ``(R, n)``; ``y`` is ``(R, m)``.  Metric arrays are ``(R,)`` and hold NaN
    where a metric is unavailable.
    """

    k: np.ndarray
    x: np.ndarray
    v: np.ndarray
    g: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    alpha_used: np.ndarray
    metrics: dict
    q: np.ndarray
    constrained: bool
    summary: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.k)

    def __getitem__(self, r: int) -> RoundRecord:
        return RoundRecord(int(self.k[r]), self.x[r], self.v[r], self.y[r], self.g[r],
                           self.alpha_used[r], {name: float(a[r]) for name, a in self.metrics.items()})

    @property
    def final(self) -> RoundRecord:
        return self[len(self) - 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        m = self.y.shape[1]
        writer.writerow(list(CSV_COLUMNS) + [f"y{d}" for d in range(m)])
        for r in range(len(self)):
            row = [str(int(self.k[r])), _fmt(self.alpha[r])]
            row += [_fmt(self.metrics[c][r]) for c in CSV_COLUMNS[2:]]
            row += [_fmt(t) for t in self.y[r]]
            writer.writerow(row)
        return buf.getvalue()


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else format(float(v), ".17g")


def consensus_error(record) -> float:
    """Largest pairwise Euclidean distance between agent estimates."""
    x = np.asarray(record.x if hasattr(record, "x") else record, dtype=float)
    x = x.reshape(x.shape[0], -1)
    diff = x[:, None, :] - x[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


def step(X: np.ndarray, A: np.ndarray, alphas, spec: ProblemSpec):
    """One synchronous round.

    Returns ``(X_next, V, G)`` with the mixed estimates ``V`` and the
    subgradients ``G`` that produced ``X_next``.
    """
    V = A @ X
    G = np.array([f.subgradient(v) for f, v in zip(spec.objectives, V)])
    return _advance(V, G, np.asarray(alphas, dtype=float), spec), V, G


def _advance(V, G, alphas, spec, project_all=None):
    Z = V - alphas[:, None] * G
    if project_all is None:
        project_all = _projector(spec)
    return project_all(Z)


def _box_bounds(spec):
    if all(isinstance(S, Box) for S in spec.constraints):
        return (np.array([S.lo for S in spec.constraints]),
                np.array([S.hi for S in spec.constraints]))
    return None


def _projector(spec):
    """Row-wise projection of an ``(n, m)`` array onto the agents' sets."""
    if not spec.constrained:
        return lambda Z: Z
    bounds = _box_bounds(spec)
    if bounds is not None:
        lo, hi = bounds
        return lambda Z: np.minimum(np.maximum(Z, lo), hi)
    return lambda Z: np.array([S.project(z) for S, z in zip(spec.constraints, Z)])


def _local_distance(spec):
    """Largest distance of an agent estimate from its own set."""
    if not spec.constrained:
        return lambda X: 0.0
    bounds = _box_bounds(spec)
    if bounds is not None:
        lo, hi = bounds

        def dist(X):
            gap = np.maximum(lo - X, 0.0) + np.maximum(X - hi, 0.0)
            return float(np.sqrt((gap * gap).sum(axis=1)).max())
        return dist
    return lambda X: max(S.distance(x) for S, x in zip(spec.constraints, X))


def initial_states(config: RunConfig) -> np.ndarray:
    spec = config.problem
    n, m = spec.n, spec.m
    init = config.init
    if isinstance(init, str):
        if init == "zeros":
            X0 = np.zeros((n, m))
            return np.array([S.project(x) for S, x in zip(spec.constraints, X0)])
        if init == "uniform":
            rng = np.random.default_rng(config.seed)
            if spec.constrained:
                return np.array([S.sample(rng, 1)[0] for S in spec.constraints])
            return rng.uniform(-1.0, 1.0, size=(n, m))
        raise ValueError(f"unknown init {init!r}")
    X0 = np.array(init, dtype=float).reshape(n, m)
    for i, (S, x) in enumerate(zip(spec.constraints, X0)):
        if not S.contains(x, 1e-9):
            raise ValueError(f"initial estimate of agent {i} lies outside its constraint set")
    return X0


def validate_run_config(config: RunConfig) -> ValidationReport:
    report = validate_graph(config.graph)
    sched = validate_step_envelope(config.schedule)
    report.extend(sched)
    waived = set(config.waive)
    if config.allow_invalid_schedule:
        waived.add("step-envelope")
    report.waive(waived)
    return report


def _metrics(X, y, q, spec, oracle, Xset):
    out = {"consensus_diameter": consensus_error(X)}
    f_y = spec.weighted_value(q, y)
    out["objective_at_y"] = f_y
    nan = float("nan")
    if spec.constrained:
        out["max_infeasibility"] = max(Xset.distance(x) for x in X)
        py = Xset.project(y)
    else:
        out["max_infeasibility"] = 0.0
        py = y
    if oracle is not None:
        out["weighted_objective_gap"] = f_y - oracle.f_star
        out["projected_objective_gap"] = spec.weighted_value(q, py) - oracle.f_star
        out["dist_to_opt"] = (float(np.linalg.norm(y - oracle.x_star))
                              if spec.unique_minimizer else nan)
    else:
        out["weighted_objective_gap"] = out["projected_objective_gap"] = out["dist_to_opt"] = nan
    return out


def run(config: RunConfig) -> RunTrace:
    """Execute ``config.rounds`` rounds and record the trace.

    Rounds ``0``, ``rounds`` and every multiple of ``record_every`` are
    recorded.  The returned trace carries a ``summary`` with the final and
    best metrics and the largest local infeasibility seen in *any* round.
    """
    if config.validate:
        report = validate_run_config(config)
        if not report.passed:
            raise ValueError("invalid run configuration:\n" + "\n".join(
                str(c) for c in report.violations))
    spec, graph, sched = config.problem, config.graph, config.schedule
    q = (config.q or compute_left_eigenvector(graph)).q
    oracle = config.oracle
    Xset = spec.feasible_set
    n, m, K = spec.n, spec.m, config.rounds

    rec_ks = sorted(set(range(0, K + 1, config.record_every)) | {0, K})
    R = len(rec_ks)
    ks = np.array(rec_ks, dtype=np.int64)
    xs, vs, gs = (np.empty((R, n, m)) for _ in range(3))
    ys = np.empty((R, m))
    al_base = np.empty(R)
    al_used = np.empty((R, n))
    names = ("consensus_diameter", "objective_at_y", "weighted_objective_gap",
             "projected_objective_gap", "dist_to_opt", "max_infeasibility",
             "local_infeasibility")
    metrics = {name: np.full(R, np.nan) for name in names}

    project_all = _projector(spec)
    local_distance = _local_distance(spec)
    X = initial_states(config)
    local_inf = local_distance(X)
    worst_local = local_inf
    r = 0
    for k in range(K + 1):
        A = graph.matrix(k)
        V = A @ X
        G = np.array([f.subgradient(v) for f, v in zip(spec.objectives, V)])
        alphas = agent_alphas(sched, k, n)
        if r < R and rec_ks[r] == k:
            y = q @ X
            xs[r], vs[r], gs[r], ys[r] = X, V, G, y
            al_base[r] = sched.alpha(k)
            al_used[r] = alphas
            for name, val in _metrics(X, y, q, spec, oracle, Xset).items():
                metrics[name][r] = val
            metrics["local_infeasibility"][r] = local_inf
            r += 1
        if k == K:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            X = _advance(V, G, alphas, spec, project_all)
        if not np.all(np.isfinite(X)):
            raise EngineAbort(f"non-finite estimate after round {k}")
        local_inf = local_distance(X)
        worst_local = max(worst_local, local_inf)

    trace = RunTrace(ks, xs, vs, gs, ys, al_base, al_used, metrics, np.array(q),
                     spec.constrained)
    trace.summary = summarize(trace, sched, oracle)
    trace.summary["max_local_infeasibility_all_rounds"] = worst_local
    return trace


def summarize(trace: RunTrace, sched: StepSchedule, oracle=None) -> dict:
    last = len(trace) - 1
    met = trace.metrics
    out = {
        "rounds": int(trace.k[last]),
        "schedule_class": schedule_class(sched),
        "q": trace.q.tolist(),
        "final_y": trace.y[last].tolist(),
        "final_consensus_diameter": float(met["consensus_diameter"][last]),
        "final_objective_at_y": float(met["objective_at_y"][last]),
        "final_max_infeasibility": float(met["max_infeasibility"][last]),
    }
    if oracle is not None:
        gap = met["weighted_objective_gap"]
        pgap = met["projected_objective_gap"]
        out["final_objective_gap"] = float(gap[last])
        out["final_projected_objective_gap"] = float(pgap[last])
        key = pgap if trace.constrained else gap
        best = int(np.nanargmin(key))
        out["best_objective_gap"] = float(key[best])
        out["best_objective_gap_round"] = int(trace.k[best])
        d = met["dist_to_opt"][last]
        out["final_dist_to_opt"] = None if np.isnan(d) else float(d)
    return out


def weighted_average_recursion_check(trace: RunTrace, q) -> float:
    """Largest violation of ``y(k+1) = y(k) - sum_i q_i alpha_i(k) g_i(k)``.

    Only meaningful without projections, and only on traces recorded every
    round.
    """
    if trace.constrained:
        raise ValueError("the weighted-average recursion does not hold under projection")
    if len(trace) > 1 and np.any(np.diff(trace.k) != 1):
        raise ValueError("trace must be recorded every round")
    q = np.asarray(getattr(q, "q", q), dtype=float)
    y = np.einsum("i,rim->rm", q, trace.x)
    drift = np.einsum("i,ri,rim->rm", q, trace.alpha_used, trace.g)
    if len(trace) < 2:
        return 0.0
    resid = y[1:] - (y[:-1] - drift[:-1])
    return float(np.max(np.abs(resid)))
