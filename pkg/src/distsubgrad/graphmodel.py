"""Communication topologies as sequences of row-stochastic weight matrices.

Entry ``A[i, j]`` is the weight agent ``i`` puts on the estimate received
from agent ``j``; a positive entry therefore encodes the directed edge
``j -> i``.  Every sequence exposes ``matrix(k)``, a pure function of the
round index.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .report import ValidationReport

ROW_TOL = 1e-12
ETA_TOL = 1e-12  # entries a rounding error below eta still count
EIG_TOL = 1e-10
DEFAULT_ETA = 0.1


# ---------------------------------------------------------------------------
# single-matrix checks

def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("weight matrix has non-finite entries")
    return A


def validate_row_stochastic(A, tol: float = ROW_TOL) -> ValidationReport:
    """Check that ``A`` is nonnegative with unit row sums.

    The report details hold the per-row deviation ``|sum_j a_ij - 1|`` and
    the index pairs of any negative entries.
    """
    A = _as_square(A)
    deviation = np.abs(A.sum(axis=1) - 1.0)
    negative = [tuple(int(t) for t in ij) for ij in np.argwhere(A < 0)]
    report = ValidationReport()
    bad_rows = np.flatnonzero(deviation >= tol)
    msg = ""
    if bad_rows.size:
        i = int(bad_rows[0])
        msg = f"row {i} sums to {A[i].sum():.17g}"
    report.add("row-stochastic", bad_rows.size == 0, msg)
    report.add("nonnegative", not negative,
               f"negative entries at {negative}" if negative else "")
    report.details["row_deviation"] = deviation.tolist()
    report.details["negative_entries"] = negative
    return report


def check_balanced(A, tol: float = ROW_TOL) -> bool:
    """True iff every column of the row-stochastic ``A`` also sums to one."""
    A = _as_square(A)
    return bool(np.all(np.abs(A.sum(axis=0) - 1.0) < tol))


def min_positive_weight(A) -> float:
    A = np.asarray(A, dtype=float)
    pos = A[A > 0]
    return float(pos.min()) if pos.size else np.inf


def is_strongly_connected(adj) -> bool:
    """Reachability test on a boolean adjacency ``adj[i, j]`` (edge ``j -> i``).

    BFS from vertex 0 along edges and along reversed edges; the graph is
    strongly connected iff both searches reach every vertex.
    """
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    if n <= 1:
        return True
    # out[j] lists the i with j -> i
    forward = [np.flatnonzero(adj[:, j]) for j in range(n)]
    backward = [np.flatnonzero(adj[i, :]) for i in range(n)]
    for nbrs in (forward, backward):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for w in nbrs[u]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        if not seen.all():
            return False
    return True


# ---------------------------------------------------------------------------
# weight schemes

def _edges_to_adjacency(n: int, edges) -> np.ndarray:
    adj = np.zeros((n, n), dtype=bool)
    for j, i in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({j}, {i}) out of range for n={n}")
        if i != j:
            adj[i, j] = True
    return adj


def uniform_weights(adj) -> np.ndarray:
    """Each agent averages itself and its in-neighbours with equal weight."""
    adj = np.asarray(adj, dtype=bool).copy()
    np.fill_diagonal(adj, True)
    return adj / adj.sum(axis=1, keepdims=True)


def metropolis_weights(adj) -> np.ndarray:
    """Metropolis-Hastings weights on the symmetrised graph.

    The result is symmetric and doubly stochastic.
    """
    adj = np.asarray(adj, dtype=bool)
    sym = adj | adj.T
    np.fill_diagonal(sym, False)
    deg = sym.sum(axis=1)
    n = sym.shape[0]
    W = np.zeros((n, n))
    ii, jj = np.nonzero(sym)
    W[ii, jj] = 1.0 / (1.0 + np.maximum(deg[ii], deg[jj]))
    W[np.arange(n), np.arange(n)] = 1.0 - W.sum(axis=1)
    return W


_SCHEMES = {"uniform": uniform_weights, "metropolis": metropolis_weights}


def weights_from_edges(n: int, edges, scheme: str = "uniform") -> np.ndarray:
    try:
        fn = _SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown weight scheme {scheme!r}") from None
    return fn(_edges_to_adjacency(n, edges))


def ring_edges(n: int) -> list[tuple[int, int]]:
    if n < 2:
        return []
    edges = set()
    for i in range(n):
        j = (i + 1) % n
        edges.add((i, j))
        edges.add((j, i))
    return sorted(edges)


def complete_edges(n: int) -> list[tuple[int, int]]:
    return [(j, i) for i in range(n) for j in range(n) if i != j]


def star_edges(n: int) -> list[tuple[int, int]]:
    return [e for i in range(1, n) for e in ((0, i), (i, 0))]


# ---------------------------------------------------------------------------
# sequences

@dataclass(frozen=True)
class GraphSequence:
    """Base class: a deterministic map from round index to weight matrix.

    Attributes
    ----------
    n : int
        Number of agents.
    eta : float
        Declared non-degeneracy bound; every positive entry is at least this.
    window : int
        Joint-connectivity window ``B`` in rounds.
    balanced : bool
        Claim that every emitted matrix is doubly stochastic.
    """

    n: int
    eta: float = DEFAULT_ETA
    window: int = 1
    balanced: bool = False

    kind = "abstract"

    def matrix(self, k: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_fixed(self) -> bool:
        return False

    def min_constructible_weight(self) -> float:
        raise NotImplementedError

    def _check_eta(self) -> None:
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        w = self.min_constructible_weight()
        if self.eta > w + 1e-15:
            raise ValueError(
                f"declared eta={self.eta} exceeds the smallest constructible "
                f"positive weight {w:.6g}")
        if self.window < 1:
            raise ValueError("window B must be >= 1")


@dataclass(frozen=True)
class FixedGraph(GraphSequence):
    A: np.ndarray = field(default=None, repr=False)

    kind = "fixed"

    def __post_init__(self):
        A = _as_square(self.A)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        if A.shape[0] != self.n:
            raise ValueError(f"matrix is {A.shape[0]}x{A.shape[0]}, expected n={self.n}")
        self._check_eta()

    def matrix(self, k: int) -> np.ndarray:
        return self.A

    @property
    def is_fixed(self) -> bool:
        return True

    def min_constructible_weight(self) -> float:
        return min_positive_weight(self.A)


@dataclass(frozen=True)
class PeriodicGraph(GraphSequence):
    """Cycles through a fixed list of matrices, ``A(k) = mats[k % period]``."""

    mats: tuple = field(default=(), repr=False)

    kind = "periodic"

    def __post_init__(self):
        mats = []
        for M in self.mats:
            M = _as_square(M)
            if M.shape[0] != self.n:
                raise ValueError("phase matrix size does not match n")
            M.setflags(write=False)
            mats.append(M)
        if not mats:
            raise ValueError("periodic sequence needs at least one phase")
        object.__setattr__(self, "mats", tuple(mats))
        self._check_eta()

    @property
    def period(self) -> int:
        return len(self.mats)

    def matrix(self, k: int) -> np.ndarray:
        return self.mats[k % len(self.mats)]

    def min_constructible_weight(self) -> float:
        return min(min_positive_weight(M) for M in self.mats)


@dataclass(frozen=True)
class RandomSwitchingGraph(GraphSequence):
    """Seeded random undirected switching with Metropolis weights.

    Each round activates every pool edge independently with probability
    ``edge_prob``.  On top of that, the edges of a Hamiltonian cycle are
    spread over the ``window`` rounds of each block ``[pB, (p+1)B)``, so the
    union over any such block is strongly connected by construction.  All
    matrices are symmetric, hence doubly stochastic.  Block ``p`` depends
    only on ``(seed, p)``.
    """

    seed: int = 0
    edge_prob: float = 0.3
    pool: tuple = ()
    shuffle_cycle: bool = True

    kind = "random"

    def __post_init__(self):
        pool = self.pool or tuple((i, j) for i in range(self.n) for j in range(i + 1, self.n))
        pool = tuple(sorted({(min(a, b), max(a, b)) for a, b in pool if a != b}))
        object.__setattr__(self, "pool", pool)
        object.__setattr__(self, "balanced", True)
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must lie in [0, 1]")
        self._check_eta()

    def matrix(self, k: int) -> np.ndarray:
        p, r = divmod(k, self.window)
        return _window_matrices(self.seed, p, self.n, self.window, self.shuffle_cycle,
                                self.pool, self.edge_prob)[r]

    def min_constructible_weight(self) -> float:
        # Metropolis entries, diagonal included, are >= 1 / (1 + max degree)
        if self.shuffle_cycle and self.n > 2:
            dmax = self.n - 1
        else:
            adj = _edges_to_adjacency(self.n, [e for a, b in self.pool for e in ((a, b), (b, a))])
            adj |= _edges_to_adjacency(self.n, ring_edges(self.n))
            dmax = int(adj.sum(axis=1).max()) if self.n > 1 else 0
        return 1.0 / (1.0 + dmax)


@lru_cache(maxsize=16)
def _window_matrices(seed: int, p: int, n: int, window: int, shuffle: bool,
                     pool: tuple, edge_prob: float) -> tuple:
    """The ``window`` matrices of block ``p``, generated from one seeded stream.

    A Hamiltonian cycle is drawn for the block and each of its edges is
    assigned to one round of the block; pool edges are switched on
    independently per round.
    """
    rng = np.random.default_rng([seed, p])
    order = rng.permutation(n) if shuffle else np.arange(n)
    n_edges = n if n > 2 else max(n - 1, 0)
    ca = order[np.arange(n_edges)]
    cb = order[(np.arange(n_edges) + 1) % max(n, 1)]
    slot = rng.integers(0, window, size=n_edges)
    pool_arr = np.array(pool, dtype=int).reshape(-1, 2)
    draws = rng.random((window, len(pool_arr)))
    mats = []
    for r in range(window):
        adj = np.zeros((n, n), dtype=bool)
        on = slot == r
        adj[ca[on], cb[on]] = adj[cb[on], ca[on]] = True
        on = draws[r] < edge_prob
        pa, pb = pool_arr[on, 0], pool_arr[on, 1]
        adj[pa, pb] = adj[pb, pa] = True
        W = metropolis_weights(adj)
        W.setflags(write=False)
        mats.append(W)
    return tuple(mats)


# ---------------------------------------------------------------------------
# checks on whole sequences

def union_adjacency(seq: GraphSequence, k_start: int, B: int) -> np.ndarray:
    adj = np.zeros((seq.n, seq.n), dtype=bool)
    for k in range(k_start, k_start + B):
        adj |= seq.matrix(k) > 0
    return adj


def check_joint_strong_connectivity(seq: GraphSequence, k_start: int, B: int) -> bool:
    """Is the union of the graphs over rounds ``[k_start, k_start + B)`` strongly connected?"""
    if B < 1:
        raise ValueError("window B must be >= 1")
    return is_strongly_connected(union_adjacency(seq, k_start, B))


@dataclass(frozen=True)
class LeftEigenvector:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if np.any(q <= 0) or abs(q.sum() - 1.0) > 1e-12:
            raise ValueError(f"q must be positive and sum to one, got {q}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    def residual(self, A) -> float:
        return float(np.max(np.abs(self.q @ np.asarray(A) - self.q)))


def _stationary(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    M = np.vstack([A.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    q, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return q


def compute_left_eigenvector(seq: GraphSequence) -> LeftEigenvector:
    """Common positive left eigenvector ``q`` with ``q^T A(k) = q^T``.

    Balanced sequences give the uniform vector.  A fixed unbalanced matrix is
    handled by a direct linear solve.  Time-varying sequences that are not
    declared balanced are rejected, since no common ``q`` can be certified.
    """
    if seq.balanced:
        return LeftEigenvector(np.full(seq.n, 1.0 / seq.n))
    if not seq.is_fixed:
        raise ValueError(
            "no common left eigenvector: time-varying sequence is not balanced")
    A = seq.matrix(0)
    q = _stationary(A)
    if np.any(q <= 0):
        raise ValueError("no positive left eigenvector; is the graph strongly connected?")
    q = q / q.sum()
    res = float(np.max(np.abs(q @ A - q)))
    if res >= EIG_TOL:
        raise ValueError(f"left eigenvector residual {res:.3g} too large")
    return LeftEigenvector(q)


def validate_graph(seq: GraphSequence, n_windows: int = 10,
                   sample_rounds: int | None = None) -> ValidationReport:
    """Row-stochasticity, self-loops, weight floor, connectivity and eigenvector over an initial horizon.

    Joint connectivity is checked on the windows ``[pB, (p+1)B)`` for
    ``p < n_windows``; matrix properties on rounds ``k < sample_rounds``
    (default: the same horizon).
    """
    B = seq.window
    horizon = sample_rounds if sample_rounds is not None else n_windows * B
    if seq.is_fixed:
        rounds = [0]
    elif isinstance(seq, PeriodicGraph):
        rounds = list(range(min(horizon, seq.period)))
    else:
        rounds = list(range(horizon))

    report = ValidationReport()
    row_msg = neg_msg = loop_msg = eta_msg = bal_msg = ""
    for k in rounds:
        A = seq.matrix(k)
        sub = validate_row_stochastic(A)
        if not sub.checks[0].passed and not row_msg:
            row_msg = f"round {k}: {sub.checks[0].message}"
        if not sub.checks[1].passed and not neg_msg:
            neg_msg = f"round {k}: {sub.checks[1].message}"
        d = np.diag(A)
        if np.any(d <= 0) and not loop_msg:
            i = int(np.flatnonzero(d <= 0)[0])
            loop_msg = f"a_{i + 1}{i + 1}({k})=0, missing self-loop"
        small = (A > 0) & (A < seq.eta - ETA_TOL)
        if small.any() and not eta_msg:
            i, j = (int(t) for t in np.argwhere(small)[0])
            eta_msg = f"entry a_{i + 1}{j + 1}({k})={A[i, j]:.6g} < eta={seq.eta}"
        if seq.balanced and not check_balanced(A) and not bal_msg:
            bal_msg = f"round {k}: declared balanced but column sums are {A.sum(axis=0)}"
    report.add("row-stochastic", not row_msg, row_msg)
    report.add("nonnegative", not neg_msg, neg_msg)
    report.add("self-loops", not loop_msg, loop_msg)
    report.add("weight-floor", not eta_msg,
               eta_msg or f"all positive entries >= eta={seq.eta}")

    bad = [p for p in range(n_windows) if not check_joint_strong_connectivity(seq, p * B, B)]
    report.add("joint-connectivity", not bad,
               f"union over rounds [{bad[0] * B}, {(bad[0] + 1) * B}) is not strongly connected"
               if bad else f"jointly strongly connected on {n_windows} windows of B={B}")

    if bal_msg:
        report.add("common-eigenvector", False, bal_msg)
    else:
        try:
            q = compute_left_eigenvector(seq)
        except ValueError as exc:
            report.add("common-eigenvector", False, str(exc))
        else:
            res = max(q.residual(seq.matrix(k)) for k in rounds)
            report.add("common-eigenvector", res < 1e-9,
                       f"common left eigenvector q={np.round(q.q, 6).tolist()}, residual {res:.2e}")
            report.details["q"] = q.q.tolist()
    report.details["balanced"] = seq.balanced
    return report


# ---------------------------------------------------------------------------
# construction from config dictionaries

def _parse_edges(edges) -> list[tuple[int, int]]:
    return [(int(e[0]), int(e[1])) for e in edges]


def _phase_matrix(n: int, phase, scheme: str) -> np.ndarray:
    if isinstance(phase, dict):
        if "matrix" in phase:
            return np.asarray(phase["matrix"], dtype=float)
        return weights_from_edges(n, _parse_edges(phase.get("edges", [])),
                                  phase.get("weights", scheme))
    arr = np.asarray(phase, dtype=float)
    if arr.ndim == 2 and arr.shape == (n, n):
        return arr
    return weights_from_edges(n, _parse_edges(phase), scheme)


def make_graph_sequence(config: dict) -> GraphSequence:
    """Build a sequence from a graph config section.

    Recognised kinds: ``fixed`` (``matrix`` literal or directed ``edges``),
    ``ring``/``complete``/``star`` (with ``weights`` = ``uniform`` or
    ``metropolis``), ``periodic`` (list of ``phases``, each a ``matrix`` or
    ``edges``, or ``ring_phases = P`` to deal the ring's edges over P phases) and ``random`` (seeded switching over an undirected ``pool``).
    Edges are ``[from, to]`` pairs with 0-based agent ids.
    """
    cfg = dict(config)
    kind = cfg.get("kind", "fixed")
    eta = float(cfg.get("eta", DEFAULT_ETA))
    scheme = cfg.get("weights", "uniform")

    if kind in ("fixed", "ring", "complete", "star"):
        if kind == "fixed" and "matrix" in cfg:
            A = np.asarray(cfg["matrix"], dtype=float)
            n = int(cfg.get("n", A.shape[0]))
        else:
            n = int(cfg["n"])
            edges = {"ring": ring_edges, "complete": complete_edges, "star": star_edges}.get(kind)
            edges = edges(n) if edges else _parse_edges(cfg.get("edges", []))
            A = weights_from_edges(n, edges, scheme)
        balanced = bool(cfg.get("balanced", check_balanced(A)))
        return FixedGraph(n=n, eta=eta, window=int(cfg.get("window", 1)),
                          balanced=balanced, A=A)

    if kind == "periodic":
        n = int(cfg["n"])
        if "ring_phases" in cfg:
            phases = [{"edges": e} for e in split_ring_phases(n, int(cfg["ring_phases"]))]
        else:
            phases = cfg["phases"]
        mats = [_phase_matrix(n, ph, scheme) for ph in phases]
        balanced = bool(cfg.get("balanced", all(check_balanced(M) for M in mats)))
        return PeriodicGraph(n=n, eta=eta, window=int(cfg.get("window", len(mats))),
                             balanced=balanced, mats=tuple(mats))

    if kind == "random":
        n = int(cfg["n"])
        pool = tuple(tuple(e) for e in _parse_edges(cfg.get("pool", [])))
        return RandomSwitchingGraph(n=n, eta=eta, window=int(cfg.get("window", 3)),
                                    seed=int(cfg.get("seed", 0)),
                                    edge_prob=float(cfg.get("edge_prob", 0.3)),
                                    pool=pool,
                                    shuffle_cycle=bool(cfg.get("shuffle_cycle", True)))

    raise ValueError(f"unknown graph kind {kind!r}")


def split_ring_phases(n: int, n_phases: int) -> list[list[tuple[int, int]]]:
    """Partition the undirected ring edges ``{t, t+1}`` round-robin into phases."""
    phases: list[list[tuple[int, int]]] = [[] for _ in range(n_phases)]
    for t in range(n):
        a, b = t, (t + 1) % n
        phases[t % n_phases].extend([(a, b), (b, a)])
    return phases


def sample_matrices(seq: GraphSequence, ks: Sequence[int]) -> list[np.ndarray]:
    return [seq.matrix(int(k)) for k in ks]
