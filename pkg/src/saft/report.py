"""JSON/CSV serialisation of audit reports and plot-ready tables.

Reals are rendered with 12 significant digits and non-finite values become
JSON ``null`` / empty CSV cells, so reports diff cleanly across platforms.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

from .core import Regime
from .engine import AuditReport, SubgroupResult
from .errors import KindMismatch, ValidationError
from .resolution import ResolutionPoint

SCHEMA_VERSION = "1.0"

RECORD_COLUMNS = (
    "subgroup", "depth", "n_pos_S", "n_neg_S", "n_pos_ref", "n_neg_ref", "n",
    "group_size", "group_fraction", "regime", "estimate", "plug_in_estimate",
    "interval_low", "interval_high", "interval_kind", "interval_level",
    "p_value", "tail_probability", "sigma", "null_value", "decision", "direction",
    "delta_flag", "gamma_score", "gamma_flag", "adjusted_p",
)
INTERVAL_COLUMNS = ("subgroup", "group_size", "estimate", "interval_low", "interval_high",
                    "regime", "decision")
GAMMA_COLUMNS = ("subgroup", "group_size", "gamma_score", "decision")
RESOLUTION_COLUMNS = ("rate", "n_S", "direction", "min_fraction", "regime", "min_count")


def num(x) -> float | None:
    """Round to 12 significant digits; None for missing or non-finite."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def record(result: SubgroupResult, alpha: float) -> dict:
    t = result.test
    c = result.counts.counts
    kind = {Regime.WALD: "confidence", Regime.BAYES: "credible"}.get(t.regime)
    return {
        "subgroup": result.spec.canonical(),
        "depth": result.spec.depth,
        "n_pos_S": c[0], "n_neg_S": c[1], "n_pos_ref": c[2], "n_neg_ref": c[3],
        "n": result.counts.n,
        "group_size": result.group_size,
        "group_fraction": num(result.group_fraction),
        "regime": t.regime.value,
        "estimate": num(t.estimate),
        "plug_in_estimate": num(result.plug_in_estimate),
        "interval_low": num(t.interval_low),
        "interval_high": num(t.interval_high),
        "interval_kind": kind,
        "interval_level": num(1 - alpha) if kind else None,
        "p_value": num(t.p_value),
        "tail_probability": num(t.tail_probability),
        "sigma": num(t.sigma),
        "null_value": num(t.null_value),
        "decision": t.decision.value,
        "direction": t.direction.value,
        "delta_flag": result.baseline_delta_flag,
        "gamma_score": num(result.baseline_gamma_score),
        "gamma_flag": result.baseline_gamma_flag,
        "adjusted_p": num(result.adjusted_p),
    }


def report_document(report: AuditReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": report.config.to_dict(),
        "dataset": report.digest,
        "records": [record(r, report.config.alpha) for r in report.results],
        "skipped": [{"subgroup": s.spec.canonical(), "reason": s.reason} for s in report.skipped],
    }


def _write_rows(path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_csv_cell(row.get(c)) for c in columns])


def write_report(report: AuditReport, format: str, path) -> Path:
    """Write the report as one JSON document or a per-subgroup CSV."""
    path = Path(path)
    if format == "json":
        text = json.dumps(report_document(report), indent=2, allow_nan=False) + "\n"
        path.write_text(text, encoding="utf-8")
    elif format == "csv":
        rows = [record(r, report.config.alpha) for r in report.results]
        _write_rows(path, RECORD_COLUMNS, rows)
    else:
        raise ValidationError(f"unknown report format {format!r}")
    return path


def resolution_rows(points: Sequence[ResolutionPoint]) -> list[dict]:
    return [
        {
            "rate": num(p.rate),
            "n_S": p.n_s,
            "direction": p.direction.value,
            "min_fraction": num(p.min_fraction),
            "regime": p.regime_used.value if p.regime_used else None,
            "min_count": p.count,
        }
        for p in points
    ]


def emit_plot_data(obj, kind: str, path) -> Path:
    """Tables for external plotters: ``intervals``, ``gamma_scatter`` or ``resolution``."""
    path = Path(path)
    if kind == "resolution":
        if isinstance(obj, AuditReport):
            raise KindMismatch("resolution plot data needs a resolution table")
        _write_rows(path, RESOLUTION_COLUMNS, resolution_rows(list(obj)))
        return path
    if not isinstance(obj, AuditReport):
        raise KindMismatch(f"{kind} plot data needs an audit report")
    records = [record(r, obj.config.alpha) for r in obj.results]
    if kind == "intervals":
        _write_rows(path, INTERVAL_COLUMNS, records)
    elif kind == "gamma_scatter":
        _write_rows(path, GAMMA_COLUMNS, records)
    else:
        raise KindMismatch(f"unknown plot kind {kind!r}")
    return path
