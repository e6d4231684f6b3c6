"""How many negatives a subgroup of a given size needs before parity breaks.

A candidate subgroup of size ``n_s`` with ``k`` negative predictions is set
against a large fixed reference group whose negative rate equals the global
rate. Each candidate table goes through the same size-adaptive dispatch as a
real audit, so small cells are judged by the Bayesian test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .core import AuditConfig, CellCounts, Direction, Regime
from .engine import choose_regime, derive_seed, saft_test
from .errors import InvalidRate, ValidationError
from .metrics import get_metric


@dataclass(frozen=True)
class ResolutionConfig:
    min_support: int = 30
    mc_draws: int = 100_000
    prior_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    seed: int = 0
    n_ref: int = 100_000
    max_n: int = 5_000

    def audit_config(self, alpha: float) -> AuditConfig:
        return AuditConfig(alpha=alpha, min_support=self.min_support, mc_draws=self.mc_draws,
                           prior_weights=self.prior_weights, seed=self.seed)


@dataclass(frozen=True)
class ResolutionPoint:
    rate: float
    n_s: int
    direction: Direction
    count: int | None  # k*, None marks the no-power zone
    regime_used: Regime | None

    @property
    def min_fraction(self) -> float | None:
        return None if self.count is None else self.count / self.n_s


def _check_rate(rate: float) -> float:
    rate = float(rate)
    if not 0 < rate < 1:
        raise InvalidRate(f"global negative rate must lie in (0, 1), got {rate}")
    return rate


def _direction(direction) -> Direction:
    direction = Direction(direction)
    if direction is Direction.NONE:
        raise ValidationError("direction must be disadvantaged or advantaged")
    return direction


def candidate_counts(n_s: int, k: int, rate: float, n_ref: int) -> CellCounts:
    neg_ref = int(round(n_ref * rate))
    return CellCounts((n_s - k, k, n_ref - neg_ref, neg_ref), n_s + n_ref)


class _Evaluator:
    """Memoised reject/no-reject verdicts for one (rate, n_s, direction)."""

    def __init__(self, n_s, rate, alpha, direction, config: ResolutionConfig):
        self.n_s, self.rate, self.direction = n_s, rate, direction
        self.config = config
        self.audit_config = config.audit_config(alpha)
        self.metric = get_metric("sp")
        self.cache: dict[int, bool] = {}

    def counts(self, k: int) -> CellCounts:
        return candidate_counts(self.n_s, k, self.rate, self.config.n_ref)

    def __call__(self, k: int) -> bool:
        if k not in self.cache:
            seed = derive_seed(self.config.seed, f"res|{self.rate!r}|{self.n_s}|{k}")
            res = saft_test(self.counts(k), self.audit_config, seed, self.metric)
            self.cache[k] = res.rejected and res.direction is self.direction
        return self.cache[k]


def min_reject_count(n_s: int, global_neg_rate: float, alpha: float = 0.05,
                     direction: Direction | str = Direction.DISADVANTAGED,
                     config: ResolutionConfig | None = None) -> int | None:
    """Threshold count of negatives k* in a subgroup of size ``n_s``.

    Disadvantaged: the smallest k that rejects towards disadvantage (k* - 1
    does not). Advantaged: the largest k that rejects towards advantage
    (k* + 1 does not). ``None`` when not even the extreme outcome rejects.
    Rejection is assumed monotone in k; the search is a bisection whose
    end-points are always evaluated, so the returned edge is exact.
    """
    if n_s < 1:
        raise ValidationError(f"n_s must be >= 1, got {n_s}")
    rate = _check_rate(global_neg_rate)
    direction = _direction(direction)
    rejects = _Evaluator(n_s, rate, alpha, direction, config or ResolutionConfig())

    if direction is Direction.DISADVANTAGED:
        if not rejects(n_s):
            return None
        lo, hi = -1, n_s  # rejects(hi) is True; lo is a virtual non-reject
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if rejects(mid):
                hi = mid
            else:
                lo = mid
        return hi

    if not rejects(0):
        return None
    lo, hi = 0, n_s + 1  # rejects(lo) is True
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if rejects(mid):
            lo = mid
        else:
            hi = mid
    return lo


def no_power_boundary(global_neg_rate: float, alpha: float = 0.05,
                      direction: Direction | str = Direction.DISADVANTAGED,
                      config: ResolutionConfig | None = None) -> int | None:
    """Smallest subgroup size at which the most extreme outcome rejects."""
    rate = _check_rate(global_neg_rate)
    direction = _direction(direction)
    config = config or ResolutionConfig()
    for n_s in range(1, config.max_n + 1):
        rejects = _Evaluator(n_s, rate, alpha, direction, config)
        if rejects(n_s if direction is Direction.DISADVANTAGED else 0):
            return n_s
    return None


def resolution_point(n_s: int, rate: float, alpha: float, direction,
                     config: ResolutionConfig | None = None) -> ResolutionPoint:
    config = config or ResolutionConfig()
    direction = _direction(direction)
    k = min_reject_count(n_s, rate, alpha, direction, config)
    regime = None
    if k is not None:
        regime = choose_regime(candidate_counts(n_s, k, _check_rate(rate), config.n_ref),
                               config.min_support)
    return ResolutionPoint(float(rate), n_s, direction, k, regime)


def resolution_curve(rates: Iterable[float], n_range: tuple[int, int], alpha: float = 0.05,
                     direction: Direction | str = Direction.DISADVANTAGED,
                     config: ResolutionConfig | None = None) -> list[ResolutionPoint]:
    """One row per (rate, n_s) for n_s in the inclusive ``n_range``."""
    lo, hi = n_range
    if lo < 1 or hi < lo:
        raise ValidationError(f"bad n range {n_range}")
    rates = [_check_rate(r) for r in rates]
    return [resolution_point(n, r, alpha, direction, config)
            for r in rates for n in range(lo, hi + 1)]


def parse_rates(text: str) -> list[float]:
    """``"0.1:0.9:0.1"`` (start:stop:step, inclusive) or ``"0.3,0.5"``."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValidationError("rate step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]
