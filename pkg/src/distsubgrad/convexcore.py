"""Convex local objectives with subgradient oracles and convex sets with projections.

Objectives accept a single point of shape ``(m,)``; ``values`` additionally
evaluates a batch of shape ``(P, m)``, which the grid oracle relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MEMBERSHIP_TOL = 1e-10
DYKSTRA_TOL = 1e-12
DYKSTRA_MAX_SWEEPS = 100_000


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1)


# ---------------------------------------------------------------------------
# objectives

class LocalObjective:
    kind = "abstract"
    dim: int

    def value(self, x) -> float:
        return float(self.values(np.atleast_2d(_vec(x)))[0])

    def values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def subgradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def lipschitz_on_box(self, lo, hi) -> float:
        """Bound on the subgradient norm over the box ``[lo, hi]``; tight for single terms."""
        raise NotImplementedError

    def global_lipschitz(self) -> float | None:
        """Closed-form bound valid on all of R^m, or None if unbounded."""
        return None


@dataclass(frozen=True)
class Affine(LocalObjective):
    c: np.ndarray
    b: float = 0.0

    kind = "affine"

    def __post_init__(self):
        object.__setattr__(self, "c", _vec(self.c))

    @property
    def dim(self) -> int:
        return self.c.size

    def values(self, X):
        return X @ self.c + self.b

    def subgradient(self, x):
        return self.c.copy()

    def global_lipschitz(self):
        return float(np.linalg.norm(self.c))

    def lipschitz_on_box(self, lo, hi):
        return self.global_lipschitz()


@dataclass(frozen=True)
class Quadratic(LocalObjective):
    """``f(x) = 0.5 x^T P x + c^T x + b`` with ``P`` symmetric PSD."""

    P: np.ndarray
    c: np.ndarray | None = None
    b: float = 0.0

    kind = "quadratic"

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if P.shape[0] != P.shape[1]:
            raise ValueError("P must be square")
        if not np.allclose(P, P.T, atol=1e-12):
            raise ValueError("P must be symmetric")
        if np.linalg.eigvalsh(P).min() < -1e-12:
            raise ValueError("P is not positive semidefinite; objective not convex")
        c = np.zeros(P.shape[0]) if self.c is None else _vec(self.c)
        if c.size != P.shape[0]:
            raise ValueError("c has wrong dimension")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "c", c)

    @classmethod
    def squared_distance(cls, center, scale: float = 1.0) -> "Quadratic":
        """``scale * ||x - center||^2``."""
        center = _vec(center)
        m = center.size
        return cls(2.0 * scale * np.eye(m), -2.0 * scale * center,
                   scale * float(center @ center))

    @property
    def dim(self) -> int:
        return self.c.size

    def values(self, X):
        return 0.5 * np.einsum("pi,ij,pj->p", X, self.P, X) + X @ self.c + self.b

    def subgradient(self, x):
        return self.P @ _vec(x) + self.c

    def lipschitz_on_box(self, lo, hi):
        # ||Px + c|| is convex, so its max over a box sits at a vertex
        lo, hi = _vec(lo), _vec(hi)
        m = lo.size
        corners = np.array(np.meshgrid(*[[lo[d], hi[d]] for d in range(m)], indexing="ij"))
        corners = corners.reshape(m, -1).T
        return float(np.max(np.linalg.norm(corners @ self.P.T + self.c, axis=1)))


@dataclass(frozen=True)
class L1Shift(LocalObjective):
    """``f(x) = sum_j w_j |x_j - shift_j|``, ``w >= 0``."""

    w: np.ndarray
    shift: np.ndarray

    kind = "l1shift"

    def __post_init__(self):
        w, s = _vec(self.w), _vec(self.shift)
        if w.size != s.size:
            raise ValueError("w and shift must have equal length")
        if np.any(w < 0):
            raise ValueError("L1 weights must be nonnegative")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "shift", s)

    @property
    def dim(self) -> int:
        return self.w.size

    def values(self, X):
        return np.abs(X - self.shift) @ self.w

    def subgradient(self, x):
        # np.sign is 0 at the kink: the minimal-norm element there
        return self.w * np.sign(_vec(x) - self.shift)

    def global_lipschitz(self):
        return float(np.linalg.norm(self.w))

    def lipschitz_on_box(self, lo, hi):
        return self.global_lipschitz()


@dataclass(frozen=True)
class MaxAffine(LocalObjective):
    """``f(x) = max_r (C[r] @ x + b[r])``; ties go to the lowest index."""

    C: np.ndarray
    b: np.ndarray

    kind = "maxaffine"

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.ndim == 1:
            C = C.reshape(-1, 1)
        b = _vec(self.b)
        if b.size != C.shape[0]:
            raise ValueError("need one offset per affine piece")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.C.shape[1]

    def values(self, X):
        return np.max(X @ self.C.T + self.b, axis=1)

    def subgradient(self, x):
        r = int(np.argmax(self.C @ _vec(x) + self.b))
        return self.C[r].copy()

    def global_lipschitz(self):
        return float(np.max(np.linalg.norm(self.C, axis=1)))

    def lipschitz_on_box(self, lo, hi):
        return self.global_lipschitz()


@dataclass(frozen=True)
class SumOf(LocalObjective):
    terms: tuple

    kind = "sum"

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("SumOf needs at least one term")
        if len({t.dim for t in terms}) != 1:
            raise ValueError("SumOf terms disagree on dimension")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    def values(self, X):
        return sum(t.values(X) for t in self.terms)

    def subgradient(self, x):
        return sum(t.subgradient(x) for t in self.terms)

    def global_lipschitz(self):
        parts = [t.global_lipschitz() for t in self.terms]
        return None if any(p is None for p in parts) else float(sum(parts))

    def lipschitz_on_box(self, lo, hi):
        return float(sum(t.lipschitz_on_box(lo, hi) for t in self.terms))


def value(f: LocalObjective, x) -> float:
    return f.value(x)


def subgradient(f: LocalObjective, x) -> np.ndarray:
    return f.subgradient(x)


# ---------------------------------------------------------------------------
# constraint sets

class ConstraintSet:
    kind = "abstract"
    dim: int
    bounded = True

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        x = _vec(x)
        return bool(np.linalg.norm(x - self.project(x)) <= tol)

    def distance(self, x) -> float:
        x = _vec(x)
        return float(np.linalg.norm(x - self.project(x)))

    def member_mask(self, P: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Row-wise membership of the points ``P`` (shape ``(k, m)``)."""
        return np.array([self.distance(p) <= tol for p in np.atleast_2d(P)], dtype=bool)

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Points of the set, uniform where that is cheap."""
        lo, hi = self.bounding_box()
        pts = rng.uniform(lo, hi, size=(size, lo.size))
        return np.array([self.project(p) for p in pts])


@dataclass(frozen=True)
class FullSpace(ConstraintSet):
    dim: int

    kind = "full"
    bounded = False

    def project(self, x):
        return _vec(x).copy()

    def contains(self, x, tol=0.0):
        return True

    def distance(self, x):
        return 0.0

    def member_mask(self, P, tol=0.0):
        return np.ones(len(np.atleast_2d(P)), dtype=bool)

    def center(self):
        return np.zeros(self.dim)

    def bounding_box(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)


@dataclass(frozen=True)
class Box(ConstraintSet):
    lo: np.ndarray
    hi: np.ndarray

    kind = "box"

    def __post_init__(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        if lo.size != hi.size:
            raise ValueError("box bounds disagree on dimension")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("empty box: lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def project(self, x):
        return np.clip(_vec(x), self.lo, self.hi)

    def contains(self, x, tol=0.0):
        return self.distance(x) <= tol

    def distance(self, x):
        x = _vec(x)
        gap = np.maximum(self.lo - x, 0.0) + np.maximum(x - self.hi, 0.0)
        return float(np.linalg.norm(gap))

    def member_mask(self, P, tol=0.0):
        P = np.atleast_2d(P)
        gap = np.maximum(self.lo - P, 0.0) + np.maximum(P - self.hi, 0.0)
        return np.linalg.norm(gap, axis=1) <= tol

    def center(self):
        return 0.5 * (self.lo + self.hi)

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size=(size, self.dim))


@dataclass(frozen=True)
class Ball(ConstraintSet):
    center_: np.ndarray
    radius: float

    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center_", _vec(self.center_))
        if not self.radius >= 0:
            raise ValueError("radius must be nonnegative")

    @property
    def dim(self) -> int:
        return self.center_.size

    def project(self, x):
        x = _vec(x)
        d = x - self.center_
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        return self.center_ + d * (self.radius / r)

    def distance(self, x):
        return float(max(np.linalg.norm(_vec(x) - self.center_) - self.radius, 0.0))

    def member_mask(self, P, tol=0.0):
        return np.linalg.norm(np.atleast_2d(P) - self.center_, axis=1) - self.radius <= tol

    def contains(self, x, tol=0.0):
        return self.distance(x) <= tol

    def center(self):
        return self.center_.copy()

    def bounding_box(self):
        return self.center_ - self.radius, self.center_ + self.radius

    def sample(self, rng, size):
        m = self.dim
        u = rng.standard_normal((size, m))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = self.radius * rng.random(size) ** (1.0 / m)
        return self.center_ + u * r[:, None]


@dataclass(frozen=True)
class Halfspace(ConstraintSet):
    """``{x : a^T x <= beta}``; unbounded, only used as a Dykstra factor."""

    a: np.ndarray
    beta: float

    kind = "halfspace"
    bounded = False

    def __post_init__(self):
        a = _vec(self.a)
        if not np.any(a):
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "a", a)

    @property
    def dim(self) -> int:
        return self.a.size

    def project(self, x):
        x = _vec(x)
        excess = self.a @ x - self.beta
        if excess <= 0:
            return x.copy()
        return x - (excess / (self.a @ self.a)) * self.a

    def distance(self, x):
        return float(max(self.a @ _vec(x) - self.beta, 0.0) / np.linalg.norm(self.a))

    def member_mask(self, P, tol=0.0):
        return (np.atleast_2d(P) @ self.a - self.beta) / np.linalg.norm(self.a) <= tol

    def contains(self, x, tol=0.0):
        return self.distance(x) <= tol


def dykstra(sets: Sequence[ConstraintSet], x, tol: float = DYKSTRA_TOL,
            max_sweeps: int = DYKSTRA_MAX_SWEEPS,
            feas_tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Euclidean projection onto the intersection of ``sets`` by Dykstra's method.

    Stops once a full sweep changes the iterate and the correction terms by
    less than ``tol`` in total and the iterate lies within ``feas_tol`` of
    every set.

    Raises
    ------
    RuntimeError
        If ``max_sweeps`` sweeps pass without meeting the stopping rule.
    """
    x = _vec(x).copy()
    if len(sets) == 1:
        return sets[0].project(x)
    incr = [np.zeros_like(x) for _ in sets]
    for _ in range(max_sweeps):
        x_prev = x
        moved = 0.0
        for s, S in enumerate(sets):
            z = x + incr[s]
            x = S.project(z)
            new = z - x
            moved += float(np.linalg.norm(new - incr[s]))
            incr[s] = new
        # the last factor's output can stall while the increments still move
        moved += float(np.linalg.norm(x - x_prev))
        if moved < tol and all(S.distance(x) <= feas_tol for S in sets):
            return x
    raise RuntimeError(f"Dykstra did not converge within {max_sweeps} sweeps; "
                       "is the intersection empty or ill-posed?")


@dataclass(frozen=True)
class HalfspaceBox(ConstraintSet):
    """``Box(lo, hi)`` intersected with ``{x : a^T x <= beta}``."""

    box: Box
    half: Halfspace

    kind = "halfspacebox"

    def __post_init__(self):
        if self.box.dim != self.half.dim:
            raise ValueError("box and halfspace disagree on dimension")
        # a^T x over the box is minimised at a vertex
        lowest = float(np.sum(np.where(self.half.a > 0, self.half.a * self.box.lo,
                                       self.half.a * self.box.hi)))
        if lowest > self.half.beta + 1e-12:
            raise ValueError("empty set: halfspace misses the box")

    @classmethod
    def from_params(cls, lo, hi, a, beta) -> "HalfspaceBox":
        return cls(Box(lo, hi), Halfspace(a, beta))

    @property
    def dim(self) -> int:
        return self.box.dim

    def project(self, x):
        x = _vec(x)
        if self.box.contains(x) and self.half.contains(x):
            return x.copy()
        return dykstra([self.box, self.half], x)

    def distance(self, x):
        x = _vec(x)
        return float(np.linalg.norm(x - self.project(x)))

    def member_mask(self, P, tol=0.0):
        # tol is applied per factor, a slight relaxation at the corners
        return self.box.member_mask(P, tol) & self.half.member_mask(P, tol)

    def center(self):
        return self.project(self.box.center())

    def bounding_box(self):
        return self.box.bounding_box()


@dataclass(frozen=True)
class IntersectionOfBoxes(ConstraintSet):
    """Finite intersection of boxes, itself the box ``[max lo, min hi]``."""

    boxes: tuple

    kind = "boxes"

    def __post_init__(self):
        boxes = tuple(self.boxes)
        if not boxes:
            raise ValueError("need at least one box")
        lo = np.max([b.lo for b in boxes], axis=0)
        hi = np.min([b.hi for b in boxes], axis=0)
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "_box", Box(lo, hi))  # raises when empty

    @property
    def dim(self) -> int:
        return self._box.dim

    def project(self, x):
        return self._box.project(x)

    def distance(self, x):
        return self._box.distance(x)

    def contains(self, x, tol=0.0):
        return self._box.contains(x, tol)

    def member_mask(self, P, tol=0.0):
        return self._box.member_mask(P, tol)

    def center(self):
        return self._box.center()

    def bounding_box(self):
        return self._box.bounding_box()

    def sample(self, rng, size):
        return self._box.sample(rng, size)


@dataclass(frozen=True)
class Intersection(ConstraintSet):
    """Intersection of arbitrary supported sets, projected with Dykstra.

    Pure box intersections collapse to a single box so projection is exact.
    """

    sets: tuple

    kind = "intersection"

    def __post_init__(self):
        sets = tuple(s for s in self.sets if not isinstance(s, FullSpace))
        object.__setattr__(self, "sets", sets)
        boxes = [s for s in sets if isinstance(s, (Box, IntersectionOfBoxes))]
        flat = []
        for s in boxes:
            flat.extend(s.boxes if isinstance(s, IntersectionOfBoxes) else [s])
        box = IntersectionOfBoxes(tuple(flat))._box if flat else None
        others = [s for s in sets if not isinstance(s, (Box, IntersectionOfBoxes))]
        factors = ([box] if box is not None else []) + others
        object.__setattr__(self, "_factors", tuple(factors))

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    @property
    def bounded(self) -> bool:
        return bool(self.sets)

    def project(self, x):
        x = _vec(x)
        if not self._factors:
            return x.copy()
        if all(S.distance(x) == 0.0 for S in self._factors):
            return x.copy()
        expanded = []
        for S in self._factors:
            expanded.extend([S.box, S.half] if isinstance(S, HalfspaceBox) else [S])
        return dykstra(expanded, x)

    def distance(self, x):
        x = _vec(x)
        return float(np.linalg.norm(x - self.project(x)))

    def member_mask(self, P, tol=0.0):
        mask = np.ones(len(np.atleast_2d(P)), dtype=bool)
        for S in self._factors:
            mask &= S.member_mask(P, tol)
        return mask

    def lower_distance(self, x) -> float:
        """Cheap lower bound on the distance to the intersection."""
        return max((S.distance(x) for S in self._factors), default=0.0)

    def center(self):
        return np.mean([S.center() for S in self.sets], axis=0)

    def bounding_box(self):
        boxes = [S.bounding_box() for S in self.sets]
        return (np.max([b[0] for b in boxes], axis=0), np.min([b[1] for b in boxes], axis=0))


def project(X: ConstraintSet, x) -> np.ndarray:
    return X.project(x)


def contains(X: ConstraintSet, x, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return X.contains(x, tol)


# ---------------------------------------------------------------------------
# problem data

@dataclass(frozen=True)
class ProblemSpec:
    """Local objectives and constraints of ``n`` agents in dimension ``m``.

    Attributes
    ----------
    objectives, constraints : tuple
        One entry per agent.
    G : float or None
        Declared uniform subgradient bound; ``None`` means "use the certified one".
    sampling_box : (lo, hi) or None
        Region used to certify ``G`` in unconstrained mode.
    unique_minimizer : bool
        Whether distances to a single ``x*`` are meaningful.
    """

    objectives: tuple
    constraints: tuple
    G: float | None = None
    sampling_box: tuple | None = None
    unique_minimizer: bool = True
    m: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        objs, cons = tuple(self.objectives), tuple(self.constraints)
        if len(objs) != len(cons) or not objs:
            raise ValueError("need one constraint set per objective")
        dims = {f.dim for f in objs} | {X.dim for X in cons}
        if len(dims) != 1:
            raise ValueError(f"inconsistent dimensions {sorted(dims)}")
        free = [isinstance(X, FullSpace) for X in cons]
        if any(free) and not all(free):
            raise ValueError("mixed constrained/unconstrained agents are not supported")
        object.__setattr__(self, "objectives", objs)
        object.__setattr__(self, "constraints", cons)
        object.__setattr__(self, "m", dims.pop())
        object.__setattr__(self, "n", len(objs))
        if self.sampling_box is not None:
            lo, hi = (_vec(b) for b in self.sampling_box)
            object.__setattr__(self, "sampling_box", (lo, hi))

    @property
    def constrained(self) -> bool:
        return not isinstance(self.constraints[0], FullSpace)

    @property
    def feasible_set(self) -> ConstraintSet:
        if not self.constrained:
            return FullSpace(self.m)
        return Intersection(self.constraints)

    def weighted_value(self, q, x) -> float:
        return float(sum(qi * f.value(x) for qi, f in zip(q, self.objectives)))

    def weighted_values(self, q, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return sum(qi * f.values(X) for qi, f in zip(q, self.objectives))

    def weighted_subgradient(self, q, x) -> np.ndarray:
        return sum(qi * f.subgradient(x) for qi, f in zip(q, self.objectives))

    def region(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the feasible set, or the sampling box when unconstrained."""
        if self.constrained:
            return self.feasible_set.bounding_box()
        if self.sampling_box is None:
            raise ValueError("unconstrained problem has no sampling box")
        return self.sampling_box

    def find_feasible_point(self) -> np.ndarray:
        """Dykstra projection of the centroid of the set centres onto the intersection."""
        X = self.feasible_set
        if not self.constrained:
            return np.zeros(self.m)
        start = np.mean([S.center() for S in self.constraints], axis=0)
        try:
            x = X.project(start)
        except (RuntimeError, ValueError) as exc:
            raise ValueError(f"intersection of constraint sets appears empty: {exc}") from None
        if not all(S.contains(x, 1e-9) for S in self.constraints):
            raise ValueError("intersection of constraint sets appears empty")
        return x


def certify_subgradient_bound(spec: ProblemSpec) -> float:
    """Upper bound on every subgradient norm over the agents' sets.

    Affine, max-affine and L1 terms use their closed-form global bound.
    Other terms are bounded over the bounding box of ``X_i`` (or the
    problem's sampling box when unconstrained) via ``lipschitz_on_box``,
    which is exact on boxes and an over-estimate on smaller sets.
    """
    best = 0.0
    for f, X in zip(spec.objectives, spec.constraints):
        closed = f.global_lipschitz()
        if closed is not None:
            best = max(best, closed)
            continue
        if X.bounded:
            lo, hi = X.bounding_box()
        elif spec.sampling_box is not None:
            lo, hi = spec.sampling_box
        else:
            raise ValueError(
                f"{f.kind} objective has unbounded subgradients on R^m; "
                "a uniform subgradient bound needs a sampling box")
        best = max(best, f.lipschitz_on_box(lo, hi))
    return best


# ---------------------------------------------------------------------------
# construction from config records

def make_objective(rec: dict) -> LocalObjective:
    kind = rec["kind"].lower()
    if kind == "affine":
        return Affine(rec["c"], float(rec.get("b", 0.0)))
    if kind == "quadratic":
        if "center" in rec:
            return Quadratic.squared_distance(rec["center"], float(rec.get("scale", 1.0)))
        return Quadratic(rec["P"], rec.get("c"), float(rec.get("b", 0.0)))
    if kind in ("l1", "l1shift"):
        return L1Shift(rec["w"], rec["shift"])
    if kind == "maxaffine":
        return MaxAffine(rec["C"], rec["b"])
    if kind == "sum":
        return SumOf(tuple(make_objective(t) for t in rec["terms"]))
    raise ValueError(f"unknown objective kind {rec['kind']!r}")


def make_constraint(rec: dict | None, m: int) -> ConstraintSet:
    if rec is None:
        return FullSpace(m)
    kind = rec["kind"].lower()
    if kind == "full":
        return FullSpace(m)
    if kind == "box":
        return Box(rec["lo"], rec["hi"])
    if kind == "ball":
        return Ball(rec["center"], float(rec["radius"]))
    if kind == "halfspacebox":
        return HalfspaceBox.from_params(rec["lo"], rec["hi"], rec["a"], float(rec["beta"]))
    if kind == "boxes":
        return IntersectionOfBoxes(tuple(Box(b["lo"], b["hi"]) for b in rec["boxes"]))
    raise ValueError(f"unknown constraint kind {rec['kind']!r}")
