"""Step-size sequences and their classification.

Summability is decided symbolically from the parameters; it cannot be
observed from a finite prefix of the sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .report import ValidationReport


@dataclass(frozen=True)
class Flags:
    positive: bool
    vanishing: bool
    non_summable: bool
    square_summable: bool


class StepSchedule:
    kind = "abstract"

    def alpha(self, k: int) -> float:
        raise NotImplementedError

    def alphas(self, ks) -> np.ndarray:
        return np.array([self.alpha(int(k)) for k in np.atleast_1d(ks)])

    @property
    def flags(self) -> Flags:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Polynomial(StepSchedule):
    """``alpha(k) = a / (k + k0)**p``."""

    a: float = 1.0
    k0: float = 1.0
    p: float = 0.5

    kind = "polynomial"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not self.k0 >= 1:
            raise ValueError("k0 must be >= 1 so that alpha(0) is finite")
        if not self.p > 0:
            raise ValueError("p must be positive; use Constant for p = 0")

    def alpha(self, k):
        return self.a / (k + self.k0) ** self.p

    def alphas(self, ks):
        return self.a / (np.asarray(ks, dtype=float) + self.k0) ** self.p

    @property
    def flags(self):
        return Flags(True, self.p > 0, self.p <= 1, self.p > 0.5)

    def describe(self):
        return {"kind": self.kind, "a": self.a, "k0": self.k0, "p": self.p}


@dataclass(frozen=True)
class LogPolynomial(StepSchedule):
    """``alpha(k) = a / ((k + k0) log(k + k0 + 1))``: non-summable, square-summable."""

    a: float = 1.0
    k0: float = 1.0

    kind = "logpolynomial"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not self.k0 >= 1:
            raise ValueError("k0 must be >= 1")

    def alpha(self, k):
        t = k + self.k0
        return self.a / (t * math.log(t + 1))

    def alphas(self, ks):
        t = np.asarray(ks, dtype=float) + self.k0
        return self.a / (t * np.log(t + 1))

    @property
    def flags(self):
        return Flags(True, True, True, True)

    def describe(self):
        return {"kind": self.kind, "a": self.a, "k0": self.k0}


@dataclass(frozen=True)
class Constant(StepSchedule):
    a: float = 0.1

    kind = "constant"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")

    def alpha(self, k):
        return self.a

    def alphas(self, ks):
        return np.full(np.shape(np.atleast_1d(ks)), self.a, dtype=float)

    @property
    def flags(self):
        return Flags(True, False, True, False)

    def describe(self):
        return {"kind": self.kind, "a": self.a}


@dataclass(frozen=True)
class PerAgentPerturbed(StepSchedule):
    """Agent ``i`` steps with ``alpha(k) * (1 + d[i] / (k + 1)**r)``.

    The base schedule drives the classification; the perturbation vanishes,
    and ``d[i] > -1`` keeps every step positive.
    """

    base: StepSchedule
    d: tuple
    r: float = 1.0

    kind = "perturbed"

    def __post_init__(self):
        d = tuple(float(v) for v in self.d)
        if any(v <= -1 for v in d):
            raise ValueError("every d_i must exceed -1 or steps can turn non-positive")
        if not self.r > 0:
            raise ValueError("decay exponent r must be positive")
        object.__setattr__(self, "d", d)

    def alpha(self, k):
        return self.base.alpha(k)

    def alphas(self, ks):
        return self.base.alphas(ks)

    def delta(self, i: int, k: int) -> float:
        return self.d[i] / (k + 1) ** self.r

    def agent_alpha(self, i: int, k: int) -> float:
        return self.base.alpha(k) * (1.0 + self.delta(i, k))

    def agent_alphas(self, k: int) -> np.ndarray:
        return self.base.alpha(k) * (1.0 + np.asarray(self.d) / (k + 1) ** self.r)

    @property
    def flags(self):
        return self.base.flags

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe(), "d": list(self.d), "r": self.r}


def alpha(s: StepSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("round index must be nonnegative")
    return s.alpha(k)


def per_agent_alpha(s: PerAgentPerturbed, i: int, k: int) -> float:
    if not validate_step_envelope(s.base).passed:
        raise ValueError("base schedule is not positive, vanishing and non-summable")
    return s.agent_alpha(i, k)


def agent_alphas(s: StepSchedule, k: int, n: int) -> np.ndarray:
    """Step of every agent at round ``k``."""
    if isinstance(s, PerAgentPerturbed):
        return s.agent_alphas(k)
    return np.full(n, s.alpha(k))


def schedule_class(s: StepSchedule) -> str:
    """``"classical"`` if square-summable, ``"general"`` if not, ``"invalid"`` otherwise."""
    if not validate_step_envelope(s).passed:
        return "invalid"
    return "classical" if s.flags.square_summable else "general"


def validate_step_envelope(s: StepSchedule) -> ValidationReport:
    """Positive, vanishing and non-summable; square summability is reported only."""
    f = s.flags
    missing = [name for name, ok in (("positive", f.positive), ("vanishing", f.vanishing),
                                     ("non-summable", f.non_summable)) if not ok]
    report = ValidationReport()
    if missing:
        msg = "not " + ", not ".join(missing)
    else:
        msg = "positive, vanishing, non-summable"
        msg += ("; square-summable (classical)" if f.square_summable
                else "; not square-summable (general)")
    report.add("step-envelope", not missing, msg)
    report.details["square_summable"] = f.square_summable
    report.details["class"] = ("invalid" if missing else
                               "classical" if f.square_summable else "general")
    return report


def make_schedule(cfg: dict) -> StepSchedule:
    kind = cfg.get("kind", "polynomial").lower()
    if kind == "polynomial":
        s = Polynomial(float(cfg.get("a", 1.0)), float(cfg.get("k0", 1.0)), float(cfg.get("p", 0.5)))
    elif kind == "logpolynomial":
        s = LogPolynomial(float(cfg.get("a", 1.0)), float(cfg.get("k0", 1.0)))
    elif kind == "constant":
        s = Constant(float(cfg.get("a", 0.1)))
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    if "perturb" in cfg:
        pert = cfg["perturb"]
        s = PerAgentPerturbed(s, tuple(pert["d"]), float(pert.get("r", 1.0)))
    return s
