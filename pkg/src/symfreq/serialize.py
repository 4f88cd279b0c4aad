"""Text renderings of counts, measures and reports.

Rationals are written as "p/q" strings in lowest terms ("0" and "1" for the
integers), never as floats. The only float, entropy, is written as a decimal
string rounded to 12 significant digits, half to even.

Trace CSV columns, always in this order and always with a header row::

    n,m,numerators,denominator,tv_to_target,sup_dev_to_target,entropy

``numerators`` is the space-separated list of per-symbol counts; it sums to
``denominator`` (= n). The JSON document carries the same fields per row
under ``rows``, plus ``m``, ``target`` and ``summary``.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Context, Decimal
from fractions import Fraction

from .analysis import ConvergenceReport, ReportRow, Verdict
from .measure import CountVector, EmpiricalMeasure

__all__ = [
    "TRACE_FORMAT",
    "TRACE_COLUMNS",
    "format_rational",
    "format_decimal",
    "measure_strings",
    "row_record",
    "report_document",
    "report_json",
    "report_csv",
    "count_document",
]

TRACE_FORMAT = "symfreq-trace/1"
TRACE_COLUMNS = ("n", "m", "numerators", "denominator", "tv_to_target", "sup_dev_to_target", "entropy")

_CTX = Context(prec=12, rounding=ROUND_HALF_EVEN)


def format_rational(value) -> str:
    f = Fraction(value)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def format_decimal(x: float, digits: int = 12) -> str:
    ctx = _CTX if digits == 12 else Context(prec=digits, rounding=ROUND_HALF_EVEN)
    d = ctx.plus(Decimal(x))
    if d == 0:
        return "0"
    return format(d.normalize(ctx), "f")


def measure_strings(p: EmpiricalMeasure) -> list[str]:
    return [format_rational(c) for c in p.components]


def row_record(row: ReportRow, m: int) -> dict:
    return {
        "n": row.n,
        "m": m,
        "numerators": list(row.measure.numerators),
        "denominator": row.measure.denominator,
        "tv_to_target": format_rational(row.tv_to_target),
        "sup_dev_to_target": format_rational(row.sup_dev_to_target),
        "entropy": format_decimal(row.entropy),
    }


def report_document(report: ConvergenceReport, verdict: Verdict | None = None) -> dict:
    summary = {
        "final_n": report.summary.final_n,
        "final_sup_deviation": format_rational(report.summary.final_sup_deviation),
        "argmax_symbol": report.summary.argmax_symbol,
    }
    if verdict is not None:
        summary["verdict"] = {
            "status": verdict.status,
            "epsilon": format_rational(verdict.epsilon),
            "window": verdict.window,
            "evidence": [{"n": n, "sup_dev_to_uniform": format_rational(d)} for n, d in verdict.evidence],
            "note": verdict.note,
        }
    return {
        "format": TRACE_FORMAT,
        "m": report.m,
        "target": measure_strings(report.target),
        "rows": [row_record(r, report.m) for r in report.rows],
        "summary": summary,
    }


def report_json(report: ConvergenceReport, verdict: Verdict | None = None) -> str:
    return json.dumps(report_document(report, verdict), indent=2) + "\n"


def report_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in report.rows:
        rec = row_record(row, report.m)
        rec["numerators"] = " ".join(str(x) for x in rec["numerators"])
        w.writerow([rec[c] for c in TRACE_COLUMNS])
    return buf.getvalue()


def count_document(counts: CountVector, measure: EmpiricalMeasure) -> dict:
    return {
        "n": counts.n,
        "m": counts.alphabet.m,
        "counts": list(counts.counts),
        "measure": measure_strings(measure),
    }
