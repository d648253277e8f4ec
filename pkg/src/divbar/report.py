"""Named check results with tolerances, shared by verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def from_value(cls, name: str, value: float, tolerance: float) -> "CheckResult":
        return cls(name, float(value), float(tolerance), bool(abs(value) <= tolerance))


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name: str, value: float, tolerance: float) -> CheckResult:
        check = CheckResult.from_value(name, value, tolerance)
        self.checks.append(check)
        return check

    def append(self, check: CheckResult) -> None:
        self.checks.append(check)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_checks(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)
