"""Validation report shared by the graph, schedule and config validators."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    passed: bool
    message: str = ""
    waived: bool = False

    def __str__(self) -> str:
        status = "PASS" if self.passed else ("WAIVED" if self.waived else "FAIL")
        text = f"[{status}] {self.name}"
        return f"{text}: {self.message}" if self.message else text


@dataclass
class ValidationReport:
    """Ordered list of named checks plus free-form details.

    A report passes when every check either passed or was explicitly waived.
    """

    checks: list[Check] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed or c.waived for c in self.checks)

    def __bool__(self) -> bool:
        return self.passed

    def add(self, name: str, passed: bool, message: str = "") -> Check:
        check = Check(name, bool(passed), message)
        self.checks.append(check)
        return check

    def extend(self, other: "ValidationReport") -> None:
        self.checks.extend(other.checks)
        self.details.update(other.details)

    def waive(self, names) -> None:
        names = set(names)
        for c in self.checks:
            if not c.passed and c.name in names:
                c.waived = True

    @property
    def violations(self) -> list[Check]:
        return [c for c in self.checks if not c.passed and not c.waived]

    def summary(self) -> str:
        return "\n".join(str(c) for c in self.checks)
