"""Compliance reports and the deterministic sample sweep."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

EQUALITY = "equality"
INEQUALITY = "inequality"


def sweep(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Map ``fn`` over ``items``, preserving canonical order for any worker count."""
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class ConditionResult:
    """Outcome of one condition over every sample of a grid.

    For equalities ``residual`` is the scaled residual and
    ``margin = tol - residual``; for inequalities
    ``margin = log(rhs) - log(lhs)`` and a sample passes when
    ``lhs <= rhs * (1 + tol)``. The witness is the sample of smallest
    margin, first in canonical order on ties.
    """

    condition: str
    kind: str
    passed: bool
    worst_margin: float | None
    witness: dict[str, Any] | None
    lhs: float | None
    rhs: float | None
    residual: float | None
    samples: int
    vacuous_samples: int

    @property
    def vacuous(self) -> bool:
        return self.samples > 0 and self.vacuous_samples == self.samples

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vacuous"] = self.vacuous
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionResult":
        d = dict(d)
        d.pop("vacuous", None)
        return cls(**d)


class Accumulator:
    """Reduces per-sample outcomes to a :class:`ConditionResult`."""

    def __init__(self, condition: str, kind: str):
        self.condition = condition
        self.kind = kind
        self.samples = 0
        self.vacuous = 0
        self.passed = True
        self._worst: tuple | None = None

    def add_vacuous(self) -> None:
        self.samples += 1
        self.vacuous += 1

    def add(
        self,
        margin: float,
        passed: bool,
        witness: dict[str, Any],
        lhs: float | None = None,
        rhs: float | None = None,
        residual: float | None = None,
    ) -> None:
        self.samples += 1
        self.passed = self.passed and bool(passed)
        margin = float(margin)
        if self._worst is None or margin < self._worst[0]:
            self._worst = (margin, witness, _f(lhs), _f(rhs), _f(residual))

    def result(self) -> ConditionResult:
        if self._worst is None:
            margin = witness = lhs = rhs = residual = None
        else:
            margin, witness, lhs, rhs, residual = self._worst
        return ConditionResult(
            condition=self.condition,
            kind=self.kind,
            passed=self.passed,
            worst_margin=margin,
            witness=witness,
            lhs=lhs,
            rhs=rhs,
            residual=residual,
            samples=self.samples,
            vacuous_samples=self.vacuous,
        )


def _f(v: float | None) -> float | None:
    return None if v is None else float(v)


def equality_outcome(residual: float, tol: float) -> tuple[float, bool]:
    margin = tol - residual
    return margin, bool(residual <= tol)


def inequality_outcome(
    log_lhs: float, log_rhs: float, tol: float
) -> tuple[float, bool]:
    """Margin and verdict for ``lhs <= rhs * (1 + tol)`` given in log form.

    ``-inf`` stands for a zero side.
    """
    if log_lhs == -math.inf:
        return math.inf, True
    if log_rhs == -math.inf:
        return -math.inf, False
    margin = log_rhs - log_lhs
    return margin, bool(margin >= -math.log1p(tol))


@dataclass
class ComplianceReport:
    kind: str
    entries: list[ConditionResult]
    norm: str | None = None
    tol: float | None = None
    grid: dict | None = None
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, condition: str) -> ConditionResult:
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    def failures(self) -> list[ConditionResult]:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "norm": self.norm,
            "tol": self.tol,
            "grid": self.grid,
            "notes": self.notes,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComplianceReport":
        return cls(
            kind=d["kind"],
            entries=[ConditionResult.from_dict(e) for e in d["entries"]],
            norm=d.get("norm"),
            tol=d.get("tol"),
            grid=d.get("grid"),
            notes=d.get("notes", {}),
        )

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        lines = [f"{self.kind}: {verdict}"]
        for e in self.entries:
            if e.vacuous:
                status = "vacuous"
            else:
                status = "pass" if e.passed else "FAIL"
            line = f"  {e.condition:<16} {status}"
            if not e.passed and e.witness is not None:
                line += f"  witness={e.witness} lhs={e.lhs!r} rhs={e.rhs!r}"
            lines.append(line)
        return "\n".join(lines)


def merge(kind: str, reports: Iterable[ComplianceReport], **meta) -> ComplianceReport:
    entries: list[ConditionResult] = []
    for r in reports:
        entries.extend(r.entries)
    return ComplianceReport(kind=kind, entries=entries, **meta)
