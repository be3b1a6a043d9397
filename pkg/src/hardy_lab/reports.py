"""Verification reports: per-check residual records with JSON and CSV export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable


@dataclass(frozen=True)
class CheckRecord:
    name: str
    residual: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": _num(self.residual), "threshold": _num(self.threshold), "pass": self.passed}

    @classmethod
    def from_dict(cls, d: dict) -> "CheckRecord":
        return cls(d["name"], float(d["residual"]), float(d["threshold"]), bool(d["pass"]))


def _num(x: float) -> float | str:
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars, complex numbers and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, complex):
        return [_num(obj.real), _num(obj.imag)]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return _num(obj)
    return str(obj)


def ratio(residual: float, threshold: float) -> float:
    if math.isnan(residual):
        return math.inf
    if threshold > 0:
        return residual / threshold
    return math.inf if residual > 0 else 0.0


@dataclass
class VerificationReport:
    """Outcome of one scenario: named checks, residual traces and run environment.

    ``passed`` is the conjunction of every check; an empty report passes.
    """

    scenario: str
    checks: list[CheckRecord] = field(default_factory=list)
    traces: dict[str, list[float]] = field(default_factory=dict)
    environment: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    def add(self, name: str, residual: float, threshold: float, passed: bool | None = None) -> CheckRecord:
        residual = float(residual)
        if passed is None:
            passed = bool(residual <= threshold)
        rec = CheckRecord(name, residual, float(threshold), bool(passed))
        self.checks.append(rec)
        return rec

    def add_flag(self, name: str, ok: bool) -> CheckRecord:
        """A boolean check recorded as residual 0 (ok) or 1 (violated) against threshold 0."""
        return self.add(name, 0.0 if ok else 1.0, 0.0, bool(ok))

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(CheckRecord(prefix + c.name, c.residual, c.threshold, c.passed))
        for k, v in other.traces.items():
            self.traces[prefix + k] = list(v)
        for k, v in other.details.items():
            self.details[prefix + k] = v

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    def worst(self) -> CheckRecord | None:
        """The check with the largest residual-to-threshold ratio.

        Failures take precedence; otherwise only upper-bound checks
        (residual <= threshold) compete, so passing "must exceed" checks never win.
        """
        pool = self.failures() or [c for c in self.checks if c.residual <= c.threshold]
        return max(pool, key=lambda c: ratio(c.residual, c.threshold), default=None)

    def payload(self) -> dict:
        """Everything except the wall time; identical inputs give identical payloads."""
        return {
            "scenario": self.scenario,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "traces": {k: [_num(x) for x in v] for k, v in self.traces.items()},
            "environment": _jsonable(self.environment),
            "details": _jsonable(self.details),
        }

    def to_dict(self) -> dict:
        d = self.payload()
        d["wall_time"] = self.wall_time
        return d

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(
            scenario=d["scenario"],
            checks=[CheckRecord.from_dict(c) for c in d.get("checks", [])],
            traces={k: [float(x) for x in v] for k, v in d.get("traces", {}).items()},
            environment=dict(d.get("environment", {})),
            details=dict(d.get("details", {})),
            wall_time=float(d.get("wall_time", 0.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls.from_dict(json.loads(text))

    def csv_rows(self) -> list[list]:
        return [[self.scenario, c.name, repr(c.residual), repr(c.threshold), str(c.passed).lower()] for c in self.checks]


CSV_HEADER = ["scenario", "check", "residual", "threshold", "pass"]


def to_csv(reports: Iterable[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerows(r.csv_rows())
    return buf.getvalue()
