"""
Check reports

Checks never raise on a violated inequality; they return CheckResult items so
a verification run can collect every failure before deciding the exit code.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a single named check"""

    name: str
    passed: bool
    worst: Optional[float] = None
    witness: str = ''
    detail: str = ''
    exact: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'check': self.name,
            'passed': self.passed,
            'exact': self.exact,
            'worst': self.worst,
            'witness': self.witness,
            'detail': self.detail,
        }


@dataclass
class VerificationReport:
    """Ordered collection of check results"""

    title: str
    checks: List[CheckResult] = field(default_factory=list)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def extend(self, checks: Iterable[CheckResult]) -> None:
        self.checks.extend(checks)

    def merge(self, other: 'VerificationReport') -> None:
        for check in other.checks:
            self.checks.append(
                CheckResult(
                    name=f"{other.title}.{check.name}",
                    passed=check.passed,
                    worst=check.worst,
                    witness=check.witness,
                    detail=check.detail,
                    exact=check.exact,
                )
            )

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> Optional[CheckResult]:
        for check in self.checks:
            if check.name == name:
                return check
        return None

    def summary(self) -> Dict[str, Any]:
        return {
            'title': self.title,
            'total': len(self.checks),
            'passed': sum(1 for check in self.checks if check.passed),
            'failed': len(self.failures),
            'success': self.passed,
        }

    def to_frame(self) -> pd.DataFrame:
        columns = ['check', 'passed', 'exact', 'worst', 'witness', 'detail']
        return pd.DataFrame([check.to_dict() for check in self.checks], columns=columns)
