"""Size-adaptive statistical-parity testing for intersectional subgroups."""

from .bayes import DirichletParams, bayes_test, empirical_quantile, posterior_params
from .core import (
    AuditConfig, CellCounts, Decision, Direction, MetricId, Reference, Regime, Sidedness,
    SubgroupSpec, TestResult, plug_in_probs, validate_counts,
)
from .data import Dataset, DatasetSchema, SyntheticGroup, SyntheticSpec, generate_synthetic, load_csv
from .engine import AuditReport, audit, baseline_flags, enumerate_subgroups, saft_test, tabulate
from .metrics import get_metric
from .resolution import min_reject_count, no_power_boundary, resolution_curve
from .wald import wald_test

__version__ = "0.1.0"

__all__ = [
    "AuditConfig", "AuditReport", "CellCounts", "Dataset", "DatasetSchema", "Decision",
    "DirichletParams", "Direction", "MetricId", "Reference", "Regime", "Sidedness",
    "SubgroupSpec", "SyntheticGroup", "SyntheticSpec", "TestResult", "audit", "baseline_flags",
    "bayes_test", "empirical_quantile", "enumerate_subgroups", "generate_synthetic",
    "get_metric", "load_csv", "min_reject_count", "no_power_boundary", "plug_in_probs",
    "posterior_params", "resolution_curve", "saft_test", "tabulate", "validate_counts",
    "wald_test",
]
