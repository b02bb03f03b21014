"""Centralized reference solutions for ``min sum_i q_i f_i(x)`` over ``X = cap_i X_i``."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .convexcore import ProblemSpec, certify_subgradient_bound
from .schedule import Polynomial, StepSchedule

GRID_MEMBERSHIP_TOL = 1e-12
_LEAF_POINTS = 64


@dataclass(frozen=True)
class OracleSolution:
    x_star: np.ndarray
    f_star: float
    method: str
    certified_gap: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"x_star": [float(t) for t in self.x_star], "f_star": float(self.f_star),
                "method": self.method, "certified_gap": float(self.certified_gap),
                "meta": self.meta}


def _q(q) -> np.ndarray:
    return np.asarray(getattr(q, "q", q), dtype=float)


def centralized_iterates(spec: ProblemSpec, q, schedule: StepSchedule, z0, rounds: int):
    """Yield ``z(0), ..., z(rounds)`` of projected subgradient descent on the weighted objective."""
    q = _q(q)
    X = spec.feasible_set
    z = np.asarray(z0, dtype=float).copy()
    yield z
    for k in range(rounds):
        z = X.project(z - schedule.alpha(k) * spec.weighted_subgradient(q, z))
        yield z


def solve_centralized(spec: ProblemSpec, q, budget: int = 1_000_000, z0=None,
                      grid_resolution: float | None = 1e-3) -> OracleSolution:
    """Projected subgradient descent with ``alpha(k) = 1 / (G sqrt(k + 1))``.

    Returns the best visited point.  For ``m <= 2`` the certified gap comes
    from a grid cross-check at ``grid_resolution``; otherwise it is the
    spread of objective values over the last tenth of the run.
    """
    qv = _q(q)
    G = spec.G or certify_subgradient_bound(spec)
    sched = Polynomial(a=1.0 / G, k0=1.0, p=0.5)
    if z0 is None:
        if spec.constrained:
            z0 = spec.find_feasible_point()
        elif spec.sampling_box is not None:
            z0 = 0.5 * (spec.sampling_box[0] + spec.sampling_box[1])
        else:
            z0 = np.zeros(spec.m)
    best_f, best_z = math.inf, None
    tail_start = budget - budget // 10
    tail_lo, tail_hi = math.inf, -math.inf
    for k, z in enumerate(centralized_iterates(spec, qv, sched, z0, budget)):
        if not np.all(np.isfinite(z)):
            raise RuntimeError(f"centralized subgradient iterates diverged at round {k}")
        fz = spec.weighted_value(qv, z)
        if fz < best_f:
            best_f, best_z = fz, z
        if k >= tail_start:
            tail_lo, tail_hi = min(tail_lo, fz), max(tail_hi, fz)
    meta = {"budget": budget, "step": sched.describe()}
    if spec.m <= 2 and grid_resolution is not None and (spec.constrained or spec.sampling_box is not None):
        grid = solve_grid(spec, qv, grid_resolution)
        gap = max(best_f - grid.f_star, 0.0) + grid.certified_gap
        meta["grid_f_star"] = grid.f_star
    else:
        gap = max(tail_hi - best_f, 0.0)
    return OracleSolution(np.asarray(best_z), float(best_f), "centralized-subgradient", gap, meta)


def _axes(lo, hi, resolution):
    axes = []
    for a, b in zip(lo, hi):
        N = max(int(math.ceil((b - a) / resolution - 1e-9)), 0)
        axes.append(np.linspace(a, b, N + 1))
    return axes


def solve_grid(spec: ProblemSpec, q, resolution: float, box=None) -> OracleSolution:
    """Best point of the feasible grid with spacing at most ``resolution``.

    The grid spans the bounding box of ``X`` (constrained) or the sampling
    box.  Cells are pruned with two valid lower bounds, the supporting
    hyperplane at the cell's middle point and the exact Lipschitz constant
    of the weighted objective over the box, so the result equals exhaustive evaluation
    (ties resolved to the lowest flat grid index) without touching most of
    the grid.
    """
    qv = _q(q)
    m = spec.m
    if m > 2:
        raise ValueError("grid oracle supports m <= 2 only")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if box is not None:
        lo, hi = (np.asarray(b, dtype=float) for b in box)
    else:
        lo, hi = spec.region()
    if np.any(lo > hi):
        raise ValueError("feasible region is empty")
    Xset = spec.feasible_set
    axes = _axes(lo, hi, resolution)
    shape = tuple(len(a) for a in axes)
    L = float(sum(qi * f.lipschitz_on_box(lo, hi) for qi, f in zip(qv, spec.objectives)))

    def point(idx):
        return np.array([axes[d][idx[d]] for d in range(m)])

    best = (math.inf, math.inf)  # (value, flat index)
    best_idx = None
    counter = itertools.count()
    cells_visited = 0
    heap = []

    def push(cell):
        nonlocal best, best_idx
        mid = tuple((a + b) // 2 for a, b in cell)
        c = point(mid)
        ext = np.array([max(axes[d][mid[d]] - axes[d][a], axes[d][b] - axes[d][mid[d]])
                        for d, (a, b) in enumerate(cell)])
        radius = float(np.linalg.norm(ext))
        if spec.constrained:
            lower_dist = Xset.lower_distance(c) if hasattr(Xset, "lower_distance") else Xset.distance(c)
            if lower_dist > radius + 1e-12:
                return
        fc = float(spec.weighted_values(qv, c[None, :])[0])
        if Xset.member_mask(c[None, :], GRID_MEMBERSHIP_TOL)[0]:
            key = (fc, int(np.ravel_multi_index(mid, shape)))
            if key < best:
                best, best_idx = key, mid
        # convexity: f(x) >= f(c) + g^T (x - c), minimised over the cell's box
        g = spec.weighted_subgradient(qv, c)
        lo_off = np.array([axes[d][a] for d, (a, _) in enumerate(cell)]) - c
        hi_off = np.array([axes[d][b] for d, (_, b) in enumerate(cell)]) - c
        lb = fc + float(np.minimum(g * lo_off, g * hi_off).sum())
        heapq.heappush(heap, (max(lb, fc - L * radius), next(counter), cell))

    push(tuple((0, s - 1) for s in shape))
    while heap:
        lb, _, cell = heapq.heappop(heap)
        if lb > best[0] + 1e-12 * (1.0 + abs(best[0])):
            break
        cells_visited += 1
        npts = math.prod(b - a + 1 for a, b in cell)
        if npts <= _LEAF_POINTS:
            grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in cell], indexing="ij")
            idx = np.stack([g.ravel() for g in grids], axis=1)
            P = np.stack([axes[d][idx[:, d]] for d in range(m)], axis=1)
            ok = Xset.member_mask(P, GRID_MEMBERSHIP_TOL)
            if not ok.any():
                continue
            vals = spec.weighted_values(qv, P[ok])
            flat = np.ravel_multi_index(tuple(idx[ok].T), shape)
            order = np.lexsort((flat, vals))
            key = (float(vals[order[0]]), int(flat[order[0]]))
            if key < best:
                best, best_idx = key, tuple(int(t) for t in idx[ok][order[0]])
            continue
        halves = []
        for a, b in cell:
            if b > a:
                mid = (a + b) // 2
                halves.append(((a, mid), (mid + 1, b)))
            else:
                halves.append(((a, b),))
        for child in itertools.product(*halves):
            push(child)

    if best_idx is None:
        raise ValueError("no feasible grid point: feasible region empty or thinner than the grid")
    h = max((float(a[1] - a[0]) if len(a) > 1 else 0.0) for a in axes)
    return OracleSolution(point(best_idx), best[0], "grid", L * h * math.sqrt(m),
                          {"resolution": resolution, "spacing": h, "lipschitz": L,
                           "grid_shape": list(shape), "cells_visited": cells_visited})


def solve_grid_exhaustive(spec: ProblemSpec, q, resolution: float, box=None) -> OracleSolution:
    """Evaluate every grid point; for small grids and cross-checking ``solve_grid``."""
    qv = _q(q)
    if spec.m > 2:
        raise ValueError("grid oracle supports m <= 2 only")
    lo, hi = (np.asarray(b, dtype=float) for b in box) if box is not None else spec.region()
    if np.any(lo > hi):
        raise ValueError("feasible region is empty")
    axes = _axes(lo, hi, resolution)
    P = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    ok = spec.feasible_set.member_mask(P, GRID_MEMBERSHIP_TOL)
    if not ok.any():
        raise ValueError("no feasible grid point")
    vals = np.where(ok, spec.weighted_values(qv, P), np.inf)
    i = int(np.argmin(vals))
    L = float(sum(qi * f.lipschitz_on_box(lo, hi) for qi, f in zip(qv, spec.objectives)))
    h = max((float(a[1] - a[0]) if len(a) > 1 else 0.0) for a in axes)
    return OracleSolution(P[i], float(vals[i]), "grid", L * h * math.sqrt(spec.m),
                          {"resolution": resolution, "exhaustive": True})


def closed_form_quadratic(spec: ProblemSpec, q) -> OracleSolution:
    """Unconstrained minimiser of a weighted sum of quadratics by a linear solve."""
    from .convexcore import Quadratic

    qv = _q(q)
    if spec.constrained or not all(isinstance(f, Quadratic) for f in spec.objectives):
        raise ValueError("closed form needs unconstrained quadratic objectives")
    H = sum(qi * f.P for qi, f in zip(qv, spec.objectives))
    c = sum(qi * f.c for qi, f in zip(qv, spec.objectives))
    x = np.linalg.solve(H, -c)
    return OracleSolution(x, spec.weighted_value(qv, x), "closed-form", 0.0)
