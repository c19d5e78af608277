"""Structured check reports shared by the verifiers and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Check:
    name: str
    instances: int
    max_residual: float
    passed: bool
    witness: str | None = None
    informational: bool = False
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "instances": self.instances,
            "max_residual": float(self.max_residual),
            "pass": bool(self.passed),
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.informational:
            out["informational"] = True
        if self.details:
            out["details"] = self.details
        return out


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report") -> None:
        self.checks.extend(other.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"title": self.title, "pass": self.passed, "checks": [c.to_dict() for c in self.checks]}


class Tally:
    """Accumulates instance count, worst residual and the first failing witness."""

    def __init__(self, name: str, tol: float):
        self.name = name
        self.tol = tol
        self.instances = 0
        self.max_residual = 0.0
        self.witness: str | None = None

    def record(self, residual: float, label=None) -> None:
        self.instances += 1
        residual = float(residual)
        if residual > self.max_residual:
            self.max_residual = residual
        if residual > self.tol and self.witness is None and label is not None:
            self.witness = label() if callable(label) else str(label)

    def record_many(self, residuals: list[float], label) -> None:
        """Record a batch; ``label(i)`` describes entry ``i`` if it is the first failure."""
        if not residuals:
            return
        self.instances += len(residuals)
        worst = max(residuals)
        if worst > self.max_residual:
            self.max_residual = float(worst)
        if worst > self.tol and self.witness is None:
            i = next(i for i, r in enumerate(residuals) if r > self.tol)
            self.witness = label(i)

    def check(self, **details) -> Check:
        return Check(
            self.name,
            self.instances,
            self.max_residual,
            self.max_residual <= self.tol,
            witness=self.witness,
            details=details,
        )
