"""Check/report containers shared by the statistical validators."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "pass" if self.passed else "FAIL"
        out = f"[{mark}] {self.name}: stat={self.statistic:.3e} thr={self.threshold:.3e}"
        if self.detail:
            out += f" ({self.detail})"
        return out


@dataclass
class ValidationReport:
    title: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, name, statistic, threshold, detail="") -> Check:
        c = Check(name, float(statistic), float(threshold),
                  bool(statistic <= threshold), detail)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def pass_fraction(self) -> float:
        if not self.checks:
            return 1.0
        return sum(c.passed for c in self.checks) / len(self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def summary(self, max_failures: int = 10) -> str:
        lines = [
            f"{self.title}: {'PASS' if self.passed else 'FAIL'} "
            f"({sum(c.passed for c in self.checks)}/{len(self.checks)} checks)"
        ]
        for c in self.failures()[:max_failures]:
            lines.append("  " + c.line())
        rest = len(self.failures()) - max_failures
        if rest > 0:
            lines.append(f"  ... {rest} more failures")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "pass_fraction": self.pass_fraction,
            "info": self.info,
            "checks": [
                {
                    "name": c.name,
                    "statistic": c.statistic,
                    "threshold": c.threshold,
                    "passed": c.passed,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }
