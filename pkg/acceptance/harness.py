"""
Acceptance harness: a registry of scaled-down acceptance checks with a
runner that times each case, collects failures and renders a text report.
"""

import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence

from logger_config import log_error, main_logger


@dataclass
class CaseOutcome:
    """What a check returns: failed conditions plus the numbers behind them"""

    errors: List[str] = field(default_factory=list)
    metrics: Dict[str, Any] = field(default_factory=dict)

    def require(self, condition: bool, message: str):
        if not condition:
            self.errors.append(message)


@dataclass
class AcceptanceCase:
    case_id: str
    name: str
    check: Callable[[], CaseOutcome]
    budget_s: float
    slow: bool = False


@dataclass
class AcceptanceResult:
    case_id: str
    status: str  # passed, failed, error
    elapsed_s: float
    errors: List[str]
    metrics: Dict[str, Any]
    timestamp: str

    def to_dict(self) -> dict:
        return asdict(self)


class AcceptanceHarness:
    def __init__(self):
        self.cases: Dict[str, AcceptanceCase] = {}

    def register(self, case_id: str, name: str, budget_s: float, slow: bool = False):
        def decorator(check: Callable[[], CaseOutcome]):
            self.cases[case_id] = AcceptanceCase(case_id, name, check, budget_s, slow)
            return check

        return decorator

    def select(self, only: Optional[Sequence[str]] = None, include_slow: bool = False) -> List[AcceptanceCase]:
        if only:
            unknown = [c for c in only if c not in self.cases]
            if unknown:
                raise KeyError(f"unknown acceptance cases {unknown}; known: {sorted(self.cases)}")
            return [self.cases[c] for c in only]
        return [c for c in self.cases.values() if include_slow or not c.slow]

    def run_case(self, case: AcceptanceCase) -> AcceptanceResult:
        start = time.perf_counter()
        try:
            outcome = case.check()
            elapsed = time.perf_counter() - start
            errors = list(outcome.errors)
            if elapsed > case.budget_s:
                errors.append(f"runtime {elapsed:.1f}s exceeds budget {case.budget_s:.0f}s")
            status = "failed" if errors else "passed"
            metrics = outcome.metrics
        except Exception as e:
            elapsed = time.perf_counter() - start
            log_error(type(e).__name__, str(e), function_name=f"acceptance.{case.case_id}")
            errors, metrics, status = [f"{type(e).__name__}: {e}"], {}, "error"

        main_logger.info(f"Acceptance {case.case_id} {status} in {elapsed:.1f}s")
        return AcceptanceResult(case.case_id, status, elapsed, errors, metrics, datetime.now().isoformat())

    def run_suite(self, only: Optional[Sequence[str]] = None, include_slow: bool = False) -> Dict[str, Any]:
        cases = self.select(only, include_slow)
        start = time.perf_counter()
        results = [self.run_case(case) for case in cases]
        passed = sum(r.status == "passed" for r in results)
        return {
            "total": len(results),
            "passed": passed,
            "failed": sum(r.status == "failed" for r in results),
            "errors": sum(r.status == "error" for r in results),
            "total_time_s": time.perf_counter() - start,
            "results": results,
        }

    def generate_report(self, summary: Dict[str, Any]) -> str:
        lines = [
            "Acceptance report",
            f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            "",
            f"Cases: {summary['total']}  passed: {summary['passed']}  failed: {summary['failed']}  "
            f"errors: {summary['errors']}  time: {summary['total_time_s']:.1f}s",
            "",
        ]
        for result in summary["results"]:
            case = self.cases[result.case_id]
            lines.append(f"[{result.status.upper():6}] {result.case_id} {case.name} ({result.elapsed_s:.1f}s)")
            for key, value in result.metrics.items():
                lines.append(f"           {key} = {value}")
            for error in result.errors:
                lines.append(f"           - {error}")
        return "\n".join(lines) + "\n"


harness = AcceptanceHarness()
