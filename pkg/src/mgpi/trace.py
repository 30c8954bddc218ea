"""Per-iteration convergence records and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class OpCounter:
    """Tallies of operator work done by a run."""

    bellman_applications: int = 0
    policy_applications: int = 0
    matrix_games: int = 0

    @property
    def operator_applications(self) -> int:
        return self.bellman_applications + self.policy_applications


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    sup_error: float | None
    bellman_residual: float
    ratio: float | None


@dataclass
class ConvergenceTrace:
    """Iteration log of a planner run.

    ``ratio`` is ``sup_error_k / sup_error_{k-1}`` when a reference value is
    known, otherwise the ratio of successive Bellman residuals.
    """

    reference: np.ndarray | None = None
    records: list[TraceRecord] = field(default_factory=list)
    termination: str = "running"
    counter: OpCounter = field(default_factory=OpCounter)
    final_value: np.ndarray | None = None
    final_policy: object = None

    def record(self, iteration: int, V, residual: float) -> TraceRecord:
        if residual < 0:
            raise ValueError("residual must be nonnegative")
        if self.records and iteration <= self.records[-1].iteration:
            raise ValueError("iteration indices must increase")
        err = None
        if self.reference is not None:
            err = float(np.max(np.abs(np.asarray(V) - self.reference)))
        ratio = None
        if self.records:
            prev = self.records[-1]
            num, den = (err, prev.sup_error) if err is not None else (residual, prev.bellman_residual)
            if den:
                ratio = num / den
        rec = TraceRecord(iteration, err, float(residual), ratio)
        self.records.append(rec)
        return rec

    def __len__(self):
        return len(self.records)

    @property
    def iterations(self) -> int:
        """Index of the last recorded iterate."""
        return self.records[-1].iteration if self.records else 0

    @property
    def sup_errors(self) -> np.ndarray:
        return np.array([r.sup_error for r in self.records], dtype=float)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.bellman_residual for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "sup_error", "bellman_residual", "ratio"])
        for r in self.records:
            w.writerow([r.iteration, _fmt(r.sup_error), _fmt(r.bellman_residual), _fmt(r.ratio)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(x) -> str:
    return "" if x is None else format(x, ".17g")


def read_trace_csv(path) -> list[dict]:
    """Parse a trace CSV back into dicts (empty cells become ``None``)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "iter": int(row["iter"]),
                **{k: (float(row[k]) if row[k] != "" else None) for k in ("sup_error", "bellman_residual", "ratio")},
            })
    return out
