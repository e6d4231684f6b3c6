"""Size-adaptive dispatch, subgroup enumeration and the audit loop."""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bayes import DirichletParams, bayes_test
from .core import (
    AuditConfig, CellCounts, Decision, Direction, MetricId, Regime, SubgroupSpec,
    TestResult, no_data_result, plug_in_probs,
)
from .data import Dataset
from .errors import DuplicateAttribute, MissingColumn, NoRows, SaftError, ValidationError
from .metrics import MetricDefinition, eo_conditioning, get_metric
from .wald import wald_test

SKIP_ABSENT = "absent_in_data"


def derive_seed(seed: int, key: str) -> int:
    """Stable 64-bit seed from a base seed and a string key."""
    h = hashlib.blake2b(f"{int(seed)}|{key}".encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def enumerate_subgroups(attributes: Sequence[tuple[str, Iterable[str]]] | Mapping[str, Iterable[str]],
                        max_depth: int) -> list[SubgroupSpec]:
    """All conjunctions of 1..max_depth conditions, one value per attribute.

    Ordered by depth, then attribute names, then values (all lexicographic).
    """
    items = list(attributes.items()) if isinstance(attributes, Mapping) else list(attributes)
    names = [name for name, _ in items]
    if len(set(names)) != len(names):
        raise DuplicateAttribute(f"attribute declared twice: {names}")
    if not 1 <= max_depth <= len(items):
        raise ValidationError(f"max_depth {max_depth} must be between 1 and {len(items)}")
    domains = {name: sorted({str(v) for v in values}) for name, values in items}
    specs = []
    for depth in range(1, max_depth + 1):
        for combo in itertools.combinations(sorted(domains), depth):
            for values in itertools.product(*(domains[a] for a in combo)):
                specs.append(SubgroupSpec(zip(combo, values)))
    return specs


def subgroup_mask(dataset: Dataset, spec: SubgroupSpec) -> np.ndarray:
    mask = np.ones(dataset.n_rows, dtype=bool)
    for attr, value in spec.conditions:
        if attr not in dataset.protected:
            raise MissingColumn(f"dataset has no protected column {attr!r}")
        mask &= dataset.protected[attr] == value
    return mask


def tabulate(dataset: Dataset, spec: SubgroupSpec, conditioning: str = "none") -> CellCounts:
    if conditioning == "positives_only":
        dataset = eo_conditioning(dataset)
    if dataset.n_rows == 0:
        raise NoRows("dataset has no rows")
    in_s = subgroup_mask(dataset, spec)
    pos = dataset.predictions == 1
    counts = (
        int(np.count_nonzero(in_s & pos)),
        int(np.count_nonzero(in_s & ~pos)),
        int(np.count_nonzero(~in_s & pos)),
        int(np.count_nonzero(~in_s & ~pos)),
    )
    return CellCounts(counts, dataset.n_rows)


def choose_regime(counts: CellCounts, min_support: int) -> Regime:
    if counts.n_s == 0 or counts.n_ref == 0:
        return Regime.NO_DATA
    return Regime.WALD if min(counts.counts) >= min_support else Regime.BAYES


def saft_test(counts: CellCounts, config: AuditConfig, subgroup_seed: int = 0,
              metric: MetricDefinition | None = None) -> TestResult:
    """Route one subgroup to the Wald or the Bayesian test.

    Wald is used only when every one of the four cells reaches
    ``config.min_support``. An empty subgroup (or empty reference group)
    yields a ``no_data`` result instead of a test.
    """
    metric = metric or get_metric(config.metric, config.reference)
    regime = choose_regime(counts, config.min_support)
    if regime is Regime.NO_DATA:
        return no_data_result(metric.null_value)

    if regime is Regime.WALD:
        out = wald_test(counts, metric, config.alpha, config.one_sided)
        reject = out.p_value < config.alpha
        direction = Direction.NONE
        if reject:
            direction = Direction.DISADVANTAGED if out.estimate < out.null_value else Direction.ADVANTAGED
        return TestResult(
            estimate=out.estimate,
            interval_low=out.interval[0],
            interval_high=out.interval[1],
            decision=Decision.REJECT if reject else Decision.FAIL_TO_REJECT,
            regime=Regime.WALD,
            direction=direction,
            p_value=out.p_value,
            sigma=out.sigma,
            null_value=out.null_value,
        )

    post = bayes_test(
        counts, metric, DirichletParams(config.prior_weights), config.mc_draws,
        config.alpha, subgroup_seed, config.one_sided,
    )
    return TestResult(
        estimate=post.mean,
        interval_low=post.interval[0],
        interval_high=post.interval[1],
        decision=Decision.REJECT if post.rejected else Decision.FAIL_TO_REJECT,
        regime=Regime.BAYES,
        direction=post.direction,
        tail_probability=post.tail_probability,
        null_value=post.null_value,
    )


def baseline_flags(estimate: float, group_fraction: float, theta_delta: float = 0.1,
                   theta_gamma: float = 0.01) -> tuple[bool, float, bool]:
    """Fixed-threshold verdicts: (|SP| > theta_delta, |SP| * P(S), that > theta_gamma)."""
    if math.isnan(estimate):
        return False, 0.0, False
    score = abs(estimate) * group_fraction
    return abs(estimate) > theta_delta, score, score > theta_gamma


def benjamini_hochberg(pvalues) -> np.ndarray:
    """Step-up BH adjusted p-values, in input order, capped at 1."""
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    if m == 0:
        return p.copy()
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adj_sorted, 1.0)
    return out


@dataclass(frozen=True)
class SubgroupResult:
    spec: SubgroupSpec
    counts: CellCounts
    group_size: int
    group_fraction: float
    test: TestResult
    plug_in_estimate: float
    baseline_delta_flag: bool
    baseline_gamma_score: float
    baseline_gamma_flag: bool
    adjusted_p: float | None = None


@dataclass(frozen=True)
class Skip:
    spec: SubgroupSpec
    reason: str

    @property
    def is_error(self) -> bool:
        return self.reason != SKIP_ABSENT


@dataclass
class AuditReport:
    config: AuditConfig
    digest: dict
    results: list[SubgroupResult] = field(default_factory=list)
    skipped: list[Skip] = field(default_factory=list)

    @property
    def hard_failures(self) -> list[Skip]:
        return [s for s in self.skipped if s.is_error]


def _plug_in_estimate(counts: CellCounts, metric: MetricDefinition) -> float:
    if counts.n == 0:
        return float("nan")
    p = plug_in_probs(counts)
    if not bool(metric.domain_guard(p)):
        return float("nan")
    return float(metric.value(p))


def _audit_one(dataset: Dataset, spec: SubgroupSpec, config: AuditConfig,
               metric: MetricDefinition) -> SubgroupResult | Skip:
    try:
        counts = tabulate(dataset, spec)
        if counts.n_s == 0:
            return Skip(spec, SKIP_ABSENT)
        test = saft_test(counts, config, derive_seed(config.seed, spec.canonical()), metric)
    except SaftError as exc:
        return Skip(spec, f"{type(exc).__name__}: {exc}")
    fraction = counts.n_s / counts.n
    plug = _plug_in_estimate(counts, metric)
    delta, score, gamma = baseline_flags(
        plug - metric.null_value if not math.isnan(plug) else plug,
        fraction, config.theta_delta, config.theta_gamma,
    )
    return SubgroupResult(spec, counts, counts.n_s, fraction, test, plug, delta, score, gamma)


def audit(dataset: Dataset, config: AuditConfig, domains: Mapping[str, Iterable[str]] | None = None,
          jobs: int = 1) -> AuditReport:
    """Enumerate, tabulate and test every subgroup up to ``config.max_depth``.

    Per-subgroup failures land in ``report.skipped`` without stopping the run.
    Seeds come from the subgroup's canonical name, so row order and ``jobs``
    do not change the output.
    """
    if dataset.n_rows == 0:
        raise NoRows("dataset has no rows")
    metric = get_metric(config.metric, config.reference)
    domains = dict(domains) if domains is not None else dataset.value_domains()
    specs = enumerate_subgroups(sorted(domains.items()), config.max_depth)
    target = eo_conditioning(dataset) if config.metric is MetricId.EO else dataset

    if jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda s: _audit_one(target, s, config, metric), specs))
    else:
        outcomes = [_audit_one(target, s, config, metric) for s in specs]

    report = AuditReport(config=config, digest=dataset.digest())
    for item in outcomes:
        (report.skipped if isinstance(item, Skip) else report.results).append(item)

    if config.bh_adjust:
        idx = [i for i, r in enumerate(report.results) if r.test.p_or_tail is not None]
        adjusted = benjamini_hochberg([report.results[i].test.p_or_tail for i in idx])
        for i, a in zip(idx, adjusted):
            r = report.results[i]
            report.results[i] = SubgroupResult(
                r.spec, r.counts, r.group_size, r.group_fraction, r.test, r.plug_in_estimate,
                r.baseline_delta_flag, r.baseline_gamma_score, r.baseline_gamma_flag, float(a),
            )
    return report
