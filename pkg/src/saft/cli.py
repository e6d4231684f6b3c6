"""Command-line entry point: ``saft audit|resolution|simulate|validate``.

Exit codes: 0 success, 1 a validation experiment left its band, 2 user
error (bad flags, config, data), 3 runtime failure (including subgroups
that could not be tested during an audit).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .core import AuditConfig
from .data import DatasetSchema, SyntheticSpec, generate_synthetic, load_csv, write_csv
from .engine import audit
from .errors import SaftError, ValidationError
from .report import emit_plot_data, write_report
from .resolution import ResolutionConfig, parse_rates, resolution_curve
from . import validation

log = logging.getLogger("saft")

EXIT_OK, EXIT_BAND, EXIT_USER, EXIT_RUNTIME = 0, 1, 2, 3

CONFIG_KEYS = {"schema", "audit", "thresholds", "output"}
SCHEMA_KEYS = {"prediction_column", "label_column", "protected_columns", "value_domains"}
AUDIT_KEYS = {"alpha", "min_support", "mc_draws", "prior_weights", "seed", "metric",
              "max_depth", "reference", "one_sided", "bh_adjust"}
THRESHOLD_KEYS = {"delta", "gamma"}
OUTPUT_KEYS = {"report", "format", "intervals", "gamma_scatter"}

DEFAULT_P = {
    "type1": (0.05, 0.05, 0.45, 0.45),
    "coverage": (0.1, 0.3, 0.3, 0.3),
    "clt": (0.1, 0.3, 0.3, 0.3),
    "convergence": validation.CONVERGENCE_PROPORTIONS,
}


def default_jobs() -> int:
    env = os.environ.get("SAFT_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _reject_unknown(section: str, doc: dict, allowed: set[str]) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValidationError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def load_config(path) -> tuple[DatasetSchema, AuditConfig, dict]:
    """Parse a config file into (schema, audit config, output section)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be an object")
    _reject_unknown("config", doc, CONFIG_KEYS)
    schema_doc = doc.get("schema") or {}
    audit_doc = doc.get("audit") or {}
    thresholds = doc.get("thresholds") or {}
    output = doc.get("output") or {}
    _reject_unknown("schema", schema_doc, SCHEMA_KEYS)
    _reject_unknown("audit", audit_doc, AUDIT_KEYS)
    _reject_unknown("thresholds", thresholds, THRESHOLD_KEYS)
    _reject_unknown("output", output, OUTPUT_KEYS)
    if "prediction_column" not in schema_doc or "protected_columns" not in schema_doc:
        raise ValidationError("schema needs prediction_column and protected_columns")
    schema = DatasetSchema(
        prediction_column=schema_doc["prediction_column"],
        protected_columns=tuple(schema_doc["protected_columns"]),
        label_column=schema_doc.get("label_column"),
        value_domains=schema_doc.get("value_domains"),
    )
    kwargs = dict(audit_doc)
    if "prior_weights" in kwargs:
        kwargs["prior_weights"] = tuple(kwargs["prior_weights"])
    if "delta" in thresholds:
        kwargs["theta_delta"] = float(thresholds["delta"])
    if "gamma" in thresholds:
        kwargs["theta_gamma"] = float(thresholds["gamma"])
    try:
        config = AuditConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad audit settings: {exc}") from None
    return schema, config, output


def cmd_audit(args) -> int:
    schema, config, output = load_config(args.config)
    overrides = {k: v for k, v in {
        "metric": args.metric, "alpha": args.alpha, "seed": args.seed,
        "max_depth": args.max_depth, "mc_draws": args.mc_draws,
    }.items() if v is not None}
    if args.bh:
        overrides["bh_adjust"] = True
    try:
        config = replace(config, **overrides)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if config.metric.value == "eo" and not schema.label_column:
        raise ValidationError("MissingLabels: metric eo needs schema.label_column")

    out = args.out or output.get("report")
    if not out:
        raise ValidationError("no report path: pass --out or set output.report")
    fmt = args.format or output.get("format") or ("csv" if str(out).endswith(".csv") else "json")

    dataset = load_csv(args.data, schema)
    report = audit(dataset, config, domains=schema.value_domains, jobs=args.jobs or default_jobs())
    write_report(report, fmt, out)
    intervals = args.plot_intervals or output.get("intervals")
    gamma = args.plot_gamma or output.get("gamma_scatter")
    if intervals:
        emit_plot_data(report, "intervals", intervals)
    if gamma:
        emit_plot_data(report, "gamma_scatter", gamma)

    rejected = sum(r.test.rejected for r in report.results)
    log.info("audited %d subgroups (%d rejected, %d skipped)",
             len(report.results), rejected, len(report.skipped))
    if report.hard_failures:
        for s in report.hard_failures:
            print(f"subgroup {s.spec.canonical()}: {s.reason}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _parse_n_range(text: str) -> tuple[int, int]:
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError:
        raise ValidationError(f"bad --n range {text!r}; expected LO:HI") from None


def cmd_resolution(args) -> int:
    try:
        rates = parse_rates(args.rates)
    except ValueError as exc:
        raise ValidationError(f"bad --rates: {exc}") from None
    n_range = _parse_n_range(args.n)
    config = ResolutionConfig(min_support=args.min_support, mc_draws=args.mc_draws,
                              seed=args.seed, n_ref=args.n_ref)
    directions = ["disadvantaged", "advantaged"] if args.direction == "both" else [args.direction]
    points = []
    for d in directions:
        points.extend(resolution_curve(rates, n_range, args.alpha, d, config))
    emit_plot_data(points, "resolution", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{args.spec}: not valid JSON ({exc})") from None
    try:
        spec = SyntheticSpec.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad synthetic spec: {exc}") from None
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    write_csv(generate_synthetic(spec), args.out)
    return EXIT_OK


def _parse_p(text: str | None, name: str):
    if text is None:
        return DEFAULT_P[name]
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"bad --p {text!r}") from None


def cmd_validate(args) -> int:
    name = args.experiment
    if name not in validation.EXPERIMENTS:
        raise ValidationError(f"unknown experiment {name!r}; choose from {validation.EXPERIMENTS}")
    p = _parse_p(args.p, name)
    if name == "type1":
        res = validation.experiment_type1(p, args.n, args.trials, args.alpha, args.seed,
                                          AuditConfig(alpha=args.alpha, seed=args.seed, mc_draws=args.mc_draws))
    elif name == "coverage":
        res = validation.experiment_coverage(p, args.n, args.trials, args.alpha, args.seed,
                                             AuditConfig(alpha=args.alpha, seed=args.seed, mc_draws=args.mc_draws))
    elif name == "clt":
        res = validation.experiment_clt(p, args.n, args.trials, args.seed)
    else:
        n_list = tuple(int(x) for x in args.n_list.split(","))
        res = validation.experiment_convergence(p, n_list, args.mc_draws, args.alpha, args.seed)
    if args.out:
        res.write_csv(args.out)
    for row in res.rows:
        print(", ".join(f"{k}={validation._fmt(v)}" for k, v in row.items()))
    status = "PASS" if res.passed else "FAIL"
    print(f"{name}: {status}" + ("" if res.gated else " (exploratory, not gated)"))
    return EXIT_OK if res.passed else EXIT_BAND


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="saft", description="Size-adaptive fairness testing")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", help="test every subgroup of a prediction CSV")
    a.add_argument("--config", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--out")
    a.add_argument("--format", choices=["json", "csv"])
    a.add_argument("--metric", choices=["sp", "eo", "di"])
    a.add_argument("--alpha", type=float)
    a.add_argument("--seed", type=int)
    a.add_argument("--max-depth", type=int)
    a.add_argument("--mc-draws", type=int)
    a.add_argument("--bh", action="store_true", help="add Benjamini-Hochberg adjusted p-values")
    a.add_argument("--plot-intervals")
    a.add_argument("--plot-gamma")
    a.add_argument("--jobs", type=int)
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("resolution", help="minimum negatives needed to detect disparity")
    r.add_argument("--rates", required=True, help="start:stop:step or comma list")
    r.add_argument("--n", required=True, help="LO:HI group sizes (inclusive)")
    r.add_argument("--alpha", type=float, default=0.05)
    r.add_argument("--direction", choices=["disadvantaged", "advantaged", "both"], default="disadvantaged")
    r.add_argument("--mc-draws", type=int, default=100_000)
    r.add_argument("--n-ref", type=int, default=100_000)
    r.add_argument("--min-support", type=int, default=30)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_resolution)

    s = sub.add_parser("simulate", help="write a synthetic prediction CSV")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="run a statistical self-check")
    v.add_argument("experiment")
    v.add_argument("--n", type=int, default=10_000)
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--alpha", type=float, default=0.05)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--p", help="comma-separated true cell probabilities")
    v.add_argument("--mc-draws", type=int, default=10_000)
    v.add_argument("--n-list", default="10,100,1000,10000")
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USER if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USER
    except SaftError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
