"""Solve result containers and benchmark-record CSV serialization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "AndersonStepRecord",
    "RUN_RECORD_FIELDS",
    "RunRecord",
    "SolveReport",
    "SolveStatus",
    "read_run_records",
    "write_run_records",
]


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    BREAKDOWN = "breakdown"


@dataclass
class AndersonStepRecord:
    """Diagnostics captured at one Anderson extrapolation in debug mode."""

    iteration: int
    ncols: int
    f_norm: float
    minimized_norm: float
    normal_eq_residual: float
    gram_eig_max: float
    gram_eig_min: float


@dataclass
class SolveReport:
    """Outcome of one linear solve.

    residual_trace holds (iteration index, relative residual) pairs at every
    convergence check plus a final entry at termination.  residual_norm_evals
    counts how many residual norms (or norm estimates) the solver evaluated,
    which stands in for the number of global reductions a distributed run
    would need.
    """

    x: np.ndarray
    residual_trace: list[tuple[int, float]]
    iterations: int
    extrapolations: int
    status: SolveStatus
    breakdown_reason: str | None = None
    residual_norm_evals: int = 0
    anderson_debug: list[AndersonStepRecord] | None = None

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED

    @property
    def final_relative_residual(self) -> float:
        if not self.residual_trace:
            return math.inf
        return self.residual_trace[-1][1]

    def __repr__(self) -> str:
        status = self.status.value
        if self.breakdown_reason:
            status += f"({self.breakdown_reason})"
        return (
            f"SolveReport(status={status}, iterations={self.iterations}, "
            f"final_relative_residual={self.final_relative_residual:.3e})"
        )


RUN_RECORD_FIELDS = (
    "matrix_name",
    "N",
    "solver",
    "preconditioner",
    "converged",
    "iterations",
    "final_relative_residual",
    "wall_time_seconds",
)


@dataclass
class RunRecord:
    """One benchmark row: a (matrix, solver, preconditioner) run."""

    matrix_name: str
    N: int
    solver: str
    preconditioner: str
    converged: bool
    iterations: int
    final_relative_residual: float
    wall_time_seconds: float

    def to_row(self) -> list[str]:
        return [
            self.matrix_name,
            str(self.N),
            self.solver,
            self.preconditioner,
            "true" if self.converged else "false",
            str(self.iterations),
            repr(float(self.final_relative_residual)),
            repr(float(self.wall_time_seconds)),
        ]

    @classmethod
    def from_row(cls, row: list[str]) -> "RunRecord":
        if len(row) != len(RUN_RECORD_FIELDS):
            raise ValueError(f"expected {len(RUN_RECORD_FIELDS)} fields, got {len(row)}")
        flag = row[4].strip().lower()
        if flag not in ("true", "false"):
            raise ValueError(f"invalid converged flag {row[4]!r}")
        return cls(
            matrix_name=row[0],
            N=int(row[1]),
            solver=row[2],
            preconditioner=row[3],
            converged=flag == "true",
            iterations=int(row[5]),
            final_relative_residual=float(row[6]),
            wall_time_seconds=float(row[7]),
        )


def write_run_records(records, path) -> None:
    """Write RunRecords as CSV with a header row, sorted deterministically."""
    ordered = sorted(records, key=lambda r: (r.matrix_name, r.solver, r.preconditioner))
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RUN_RECORD_FIELDS)
        for record in ordered:
            writer.writerow(record.to_row())


def read_run_records(path) -> list[RunRecord]:
    """Read a RunRecord CSV produced by write_run_records."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        if tuple(header) != RUN_RECORD_FIELDS:
            raise ValueError(f"{path}: unexpected header {header!r}")
        return [RunRecord.from_row(row) for row in reader if row]
