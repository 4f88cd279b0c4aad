"""Convergence reports over checkpoint series."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .engine import CheckpointSeries
from .errors import EmptySeriesError, IncompatibleMeasureError, InsufficientRowsError
from .measure import (
    SUP_DEVIATION,
    TOTAL_VARIATION,
    EmpiricalMeasure,
    measure_distance,
    measure_entropy,
    measure_uniform,
)

__all__ = [
    "CONVERGED",
    "NOT_CONVERGED",
    "ReportRow",
    "ReportSummary",
    "ConvergenceReport",
    "Verdict",
    "build_report",
    "verdict_simple_normality",
]

CONVERGED = "converged-within-epsilon"
NOT_CONVERGED = "not-converged"

DEFAULT_WINDOW = 3


@dataclass(frozen=True)
class ReportRow:
    n: int
    measure: EmpiricalMeasure
    tv_to_target: Fraction
    sup_dev_to_target: Fraction
    entropy: float

    @property
    def components(self) -> tuple[Fraction, ...]:
        return self.measure.components


@dataclass(frozen=True)
class ReportSummary:
    final_n: int
    final_sup_deviation: Fraction
    argmax_symbol: int


@dataclass(frozen=True)
class ConvergenceReport:
    m: int
    target: EmpiricalMeasure
    rows: tuple[ReportRow, ...]
    summary: ReportSummary


def _argmax(measure: EmpiricalMeasure) -> int:
    # first index wins ties
    nums = measure.numerators
    return max(range(len(nums)), key=lambda i: (nums[i], -i))


def build_report(series: CheckpointSeries, target: EmpiricalMeasure) -> ConvergenceReport:
    """Distance to ``target`` and base-m entropy at every checkpoint."""
    if len(series) == 0:
        raise EmptySeriesError("checkpoint series is empty")
    alphabet = series.alphabet
    if target.alphabet != alphabet:
        raise IncompatibleMeasureError(
            f"target has {target.m} components, series is over m={alphabet.m}"
        )
    rows = []
    for rec in series:
        p = rec.measure
        rows.append(
            ReportRow(
                n=rec.n,
                measure=p,
                tv_to_target=measure_distance(p, target, TOTAL_VARIATION),
                sup_dev_to_target=measure_distance(p, target, SUP_DEVIATION),
                entropy=measure_entropy(p),
            )
        )
    for a, b in zip(rows, rows[1:]):
        if b.n <= a.n:
            raise ValueError("checkpoint records out of order")
    last = rows[-1]
    summary = ReportSummary(last.n, last.sup_dev_to_target, _argmax(last.measure))
    return ConvergenceReport(alphabet.m, target, tuple(rows), summary)


@dataclass(frozen=True)
class Verdict:
    """Outcome of the finite-prefix normality check.

    This only looks at the sampled prefixes: it cannot establish (or refute)
    any limiting behaviour of the sequence.
    """

    status: str
    epsilon: Fraction
    window: int
    evidence: tuple[tuple[int, Fraction], ...]  # (n, sup-deviation from uniform)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    note = "finite-prefix heuristic over the last checkpoints; not a proof of any limit property"


def verdict_simple_normality(report: ConvergenceReport, epsilon, window: int = DEFAULT_WINDOW) -> Verdict:
    """Converged iff each of the last ``window`` rows is within ``epsilon`` of uniform (sup norm)."""
    eps = Fraction(epsilon)
    if eps <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if window > len(report.rows):
        raise InsufficientRowsError(f"window {window} exceeds the {len(report.rows)} report rows")
    uniform = measure_uniform(report.target.alphabet)
    evidence = tuple(
        (row.n, measure_distance(row.measure, uniform, SUP_DEVIATION)) for row in report.rows[-window:]
    )
    ok = all(dev <= eps for _, dev in evidence)
    return Verdict(CONVERGED if ok else NOT_CONVERGED, eps, window, evidence)
