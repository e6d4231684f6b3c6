"""Domain types, canonical cell order and shared validation.

Every statistical module indexes the four-cell table the same way::

    0: positive prediction, inside S      (n_{1,S})
    1: negative prediction, inside S      (n_{0,S})
    2: positive prediction, reference     (n_{1,S-bar})
    3: negative prediction, reference     (n_{0,S-bar})
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, EmptySample, NegativeCount, SumMismatch, ValidationError

POS_S, NEG_S, POS_REF, NEG_REF = 0, 1, 2, 3
CELL_ORDER = ("pos_S", "neg_S", "pos_ref", "neg_ref")

PROB_SUM_TOL = 1e-12


class StrEnum(str, Enum):
    def __str__(self) -> str:
        return self.value


class Decision(StrEnum):
    REJECT = "reject"
    FAIL_TO_REJECT = "fail_to_reject"
    NO_DATA = "no_data"


class Regime(StrEnum):
    WALD = "wald"
    BAYES = "bayes"
    NO_DATA = "no_data"


class Direction(StrEnum):
    DISADVANTAGED = "disadvantaged"
    ADVANTAGED = "advantaged"
    NONE = "none"


class Sidedness(StrEnum):
    TWO_SIDED = "two_sided"
    LESS = "less"
    GREATER = "greater"


class MetricId(StrEnum):
    SP = "sp"
    EO = "eo"
    DI = "di"


class Reference(StrEnum):
    COMPLEMENT = "complement"
    WHOLE_POPULATION = "whole_population"


@dataclass(frozen=True)
class SubgroupSpec:
    """Conjunction of ``attribute == value`` conditions.

    Conditions are stored sorted by attribute name, so two specs built from
    the same conditions in a different order compare (and hash) equal.
    """

    conditions: tuple[tuple[str, str], ...]

    def __init__(self, conditions: Iterable[tuple[str, str]]):
        conds = tuple(sorted((str(a), str(v)) for a, v in conditions))
        if not conds:
            raise ValidationError("a subgroup needs at least one condition")
        names = [a for a, _ in conds]
        if len(set(names)) != len(names):
            raise ValidationError(f"attribute repeated in subgroup: {names}")
        object.__setattr__(self, "conditions", conds)

    @classmethod
    def of(cls, **conditions: str) -> "SubgroupSpec":
        return cls(conditions.items())

    @property
    def depth(self) -> int:
        return len(self.conditions)

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.conditions)

    def canonical(self) -> str:
        return " & ".join(f"{a}={v}" for a, v in self.conditions)

    def __str__(self) -> str:
        return self.canonical()


@dataclass(frozen=True)
class CellCounts:
    counts: tuple[int, ...]
    n: int

    @classmethod
    def of(cls, counts: Sequence[int], n: int | None = None) -> "CellCounts":
        ints = tuple(int(c) for c in counts)
        total = sum(ints) if n is None else int(n)
        return validate_counts(cls(ints, total))

    @property
    def q(self) -> int:
        return len(self.counts)

    @property
    def n_s(self) -> int:
        """Size of the audited subgroup (q=4 layout only)."""
        return self.counts[POS_S] + self.counts[NEG_S]

    @property
    def n_ref(self) -> int:
        return self.counts[POS_REF] + self.counts[NEG_REF]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)

    def scaled(self, factor: int) -> "CellCounts":
        return CellCounts(tuple(c * factor for c in self.counts), self.n * factor)


def validate_counts(counts: CellCounts) -> CellCounts:
    """Return ``counts`` unchanged if its invariants hold, raise otherwise."""
    if len(counts.counts) < 2:
        raise ValidationError(f"need at least 2 cells, got {len(counts.counts)}")
    if any(c < 0 for c in counts.counts):
        raise NegativeCount(f"negative cell count in {counts.counts}")
    if sum(counts.counts) != counts.n:
        raise SumMismatch(f"cells sum to {sum(counts.counts)} but n={counts.n}")
    return counts


def check_prob_vector(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValidationError("probability vector must be 1-d with at least 2 entries")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValidationError(f"probabilities must lie in [0, 1]: {p}")
    if abs(p.sum() - 1.0) > PROB_SUM_TOL:
        raise ValidationError(f"probabilities sum to {p.sum():.17g}, not 1")
    return p


def plug_in_probs(counts: CellCounts) -> np.ndarray:
    if counts.n == 0:
        raise EmptySample("cannot form plug-in probabilities from zero rows")
    return counts.as_array() / counts.n


@dataclass(frozen=True)
class TestResult:
    """Outcome of one subgroup test, whichever regime produced it.

    ``estimate`` is the plug-in metric value for the Wald regime and the
    posterior mean for the Bayesian regime. One-sided intervals carry an
    infinite endpoint.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    estimate: float
    interval_low: float
    interval_high: float
    decision: Decision
    regime: Regime
    direction: Direction = Direction.NONE
    p_value: float | None = None
    tail_probability: float | None = None
    sigma: float | None = None
    null_value: float = 0.0

    def __post_init__(self):
        if not (math.isnan(self.interval_low) or math.isnan(self.interval_high)):
            if self.interval_low > self.interval_high:
                raise ValidationError(
                    f"interval low {self.interval_low} exceeds high {self.interval_high}"
                )

    @property
    def rejected(self) -> bool:
        return self.decision is Decision.REJECT

    @property
    def p_or_tail(self) -> float | None:
        return self.p_value if self.p_value is not None else self.tail_probability


def no_data_result(null_value: float = 0.0) -> TestResult:
    nan = float("nan")
    return TestResult(
        estimate=nan,
        interval_low=nan,
        interval_high=nan,
        decision=Decision.NO_DATA,
        regime=Regime.NO_DATA,
        null_value=null_value,
    )


@dataclass(frozen=True)
class AuditConfig:
    alpha: float = 0.05
    min_support: int = 30
    mc_draws: int = 10_000
    prior_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    seed: int = 0
    metric: MetricId = MetricId.SP
    max_depth: int = 1
    reference: Reference = Reference.COMPLEMENT
    one_sided: Sidedness = Sidedness.TWO_SIDED
    bh_adjust: bool = False
    theta_delta: float = 0.1
    theta_gamma: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "metric", MetricId(self.metric))
        object.__setattr__(self, "reference", Reference(self.reference))
        object.__setattr__(self, "one_sided", Sidedness(self.one_sided))
        object.__setattr__(self, "prior_weights", tuple(float(w) for w in self.prior_weights))
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.min_support < 1:
            raise ConfigError(f"min_support must be >= 1, got {self.min_support}")
        if self.mc_draws < 100:
            raise ConfigError(f"mc_draws must be >= 100, got {self.mc_draws}")
        if not all(w > 0 and math.isfinite(w) for w in self.prior_weights):
            raise ConfigError(f"prior weights must be positive: {self.prior_weights}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "min_support": self.min_support,
            "mc_draws": self.mc_draws,
            "prior_weights": list(self.prior_weights),
            "seed": self.seed,
            "metric": self.metric.value,
            "max_depth": self.max_depth,
            "reference": self.reference.value,
            "one_sided": self.one_sided.value,
            "bh_adjust": self.bh_adjust,
            "theta_delta": self.theta_delta,
            "theta_gamma": self.theta_gamma,
        }
