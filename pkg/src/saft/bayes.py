"""Finite-sample test via the Dirichlet-multinomial posterior.

Posterior draws of the cell probabilities are pushed through the metric;
the credible interval is read off empirical order statistics of those draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CellCounts, Direction, Sidedness, check_prob_vector
from .errors import ArityMismatch, EmptyDraws, TooManyGuardFailures, ValidationError
from .metrics import MetricDefinition

MAX_GUARD_FAILURE_FRACTION = 0.01
MIN_DRAWS = 100


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class DirichletParams:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) < 2:
            raise ValidationError("Dirichlet needs at least two weights")
        if not all(x > 0 and math.isfinite(x) for x in w):
            raise ValidationError(f"Dirichlet weights must be positive: {w}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def flat(cls, q: int = 4) -> "DirichletParams":
        return cls((1.0,) * q)

    @property
    def q(self) -> int:
        return len(self.weights)


def posterior_params(counts: CellCounts, prior: DirichletParams) -> DirichletParams:
    if counts.q != prior.q:
        raise ArityMismatch(f"prior has {prior.q} weights but counts have {counts.q} cells")
    return DirichletParams(tuple(w + c for w, c in zip(prior.weights, counts.counts)))


def _gamma_mt(shape: float, rng: np.random.Generator, size: int) -> np.ndarray:
    # Marsaglia & Tsang (2000), valid for shape >= 1
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        m = pending.size
        x = rng.standard_normal(m)
        u = rng.random(m)
        t = 1.0 + c * x
        ok = t > 0
        v = np.where(ok, t * t * t, 1.0)
        x2 = x * x
        squeeze = u < 1.0 - 0.0331 * x2 * x2
        with np.errstate(divide="ignore"):
            full = np.log(u) < 0.5 * x2 + d * (1.0 - v + np.log(v))
        accept = ok & (squeeze | full)
        out[pending[accept]] = d * v[accept]
        pending = pending[~accept]
    return out


def sample_gamma(shape: float, rng, size: int | None = None):
    """Unit-scale Gamma(shape) draws by exact rejection sampling.

    Shapes below one are boosted: Gamma(a) = Gamma(a + 1) * U**(1/a).
    Returns a float when ``size`` is None, an array otherwise.
    """
    if not shape > 0:
        raise ValidationError(f"gamma shape must be positive, got {shape}")
    rng = make_rng(rng)
    m = 1 if size is None else int(size)
    if shape < 1.0:
        g = _gamma_mt(shape + 1.0, rng, m)
        g *= rng.random(m) ** (1.0 / shape)
    else:
        g = _gamma_mt(shape, rng, m)
    return float(g[0]) if size is None else g


def sample_dirichlet(params: DirichletParams, rng, size: int | None = None) -> np.ndarray:
    """Dirichlet draws as normalised independent gammas; shape (size, q)."""
    rng = make_rng(rng)
    m = 1 if size is None else int(size)
    g = np.column_stack([sample_gamma(w, rng, m) for w in params.weights])
    p = g / g.sum(axis=1, keepdims=True)
    if size is None:
        return check_prob_vector(p[0])
    return p


def posterior_metric_draws(params: DirichletParams, metric: MetricDefinition, K: int, seed
                           ) -> tuple[np.ndarray, int]:
    """Return (metric draws, number of draws excluded by the domain guard)."""
    if K < MIN_DRAWS:
        raise ValidationError(f"need at least {MIN_DRAWS} Monte-Carlo draws, got {K}")
    if params.q != metric.q:
        raise ArityMismatch(f"metric {metric.id} expects {metric.q} cells, got {params.q}")
    p = sample_dirichlet(params, seed, K)
    ok = np.asarray(metric.domain_guard(p), dtype=bool)
    excluded = int(K - ok.sum())
    if excluded > MAX_GUARD_FAILURE_FRACTION * K:
        raise TooManyGuardFailures(
            f"{excluded} of {K} posterior draws fall outside the domain of {metric.id}"
        )
    if excluded:
        p = p[ok]
    return np.asarray(metric.value(p), dtype=float), excluded


def _order_index(u: float, k: int) -> int:
    # smallest j (1-based) with j/k >= u; the 1e-9 slack absorbs binary
    # representation error in u*k (0.025 * 1e5 is 2500.0000000000005).
    j = math.ceil(u * k - 1e-9)
    return min(max(j, 1), k)


def empirical_quantile(draws, u: float) -> float:
    """inf{t : fraction of draws <= t is >= u}, always an order statistic."""
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise EmptyDraws("no draws to take a quantile of")
    if not 0 < u <= 1:
        raise ValidationError(f"quantile level must lie in (0, 1], got {u}")
    j = _order_index(u, draws.size)
    return float(np.partition(draws, j - 1)[j - 1])


def empirical_quantiles(draws, levels) -> list[float]:
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise EmptyDraws("no draws to take a quantile of")
    idx = [_order_index(u, draws.size) - 1 for u in levels]
    part = np.partition(draws, sorted(set(idx)))
    return [float(part[i]) for i in idx]


@dataclass(frozen=True)
class PosteriorSummary:
    draws_used: int
    mean: float
    interval: tuple[float, float]
    tail_probability: float
    seed: int
    excluded: int = 0
    rejected: bool = False
    direction: Direction = Direction.NONE
    null_value: float = 0.0


def bayes_test(counts: CellCounts, metric: MetricDefinition, prior: DirichletParams | None = None,
               K: int = 10_000, alpha: float = 0.05, seed: int = 0,
               sidedness: Sidedness | str = Sidedness.TWO_SIDED) -> PosteriorSummary:
    """Credible-interval test of ``metric == null`` under a Dirichlet posterior.

    Rejects when the null value falls outside the (1 - alpha) interval. The
    reported tail probability is the posterior sign probability: twice the
    smaller of P(phi > null) and P(phi < null) for two-sided tests.
    """
    sidedness = Sidedness(sidedness)
    prior = prior or DirichletParams.flat(counts.q)
    params = posterior_params(counts, prior)
    draws, excluded = posterior_metric_draws(params, metric, K, seed)
    null = metric.null_value
    above = float(np.mean(draws > null))
    below = float(np.mean(draws < null))

    if sidedness is Sidedness.TWO_SIDED:
        low, high = empirical_quantiles(draws, [alpha / 2, 1 - alpha / 2])
        tail = min(1.0, 2.0 * min(above, below))
    elif sidedness is Sidedness.LESS:
        low, high = -math.inf, empirical_quantile(draws, 1 - alpha)
        tail = 1.0 - below
    else:
        low, high = empirical_quantile(draws, alpha), math.inf
        tail = 1.0 - above

    direction = Direction.NONE
    if high < null:
        direction = Direction.DISADVANTAGED
    elif low > null:
        direction = Direction.ADVANTAGED
    return PosteriorSummary(
        draws_used=int(draws.size),
        mean=float(draws.mean()),
        interval=(low, high),
        tail_probability=tail,
        seed=int(seed) if not isinstance(seed, np.random.Generator) else -1,
        excluded=excluded,
        rejected=direction is not Direction.NONE,
        direction=direction,
        null_value=null,
    )
