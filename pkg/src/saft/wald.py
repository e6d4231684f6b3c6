"""Large-sample (delta-method) Wald test for smooth fairness metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CellCounts, Sidedness, plug_in_probs
from .errors import DegenerateSigma, DomainGuard, NumericalNegative
from .metrics import MetricDefinition
from .normal import std_normal_cdf, std_normal_quantile, std_normal_sf

NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class WaldOutcome:
    estimate: float
    sigma: float
    std_error: float
    interval: tuple[float, float]
    p_value: float
    null_value: float = 0.0
    z: float = 0.0

    def rejects(self, alpha: float) -> bool:
        return self.p_value < alpha


def categorical_covariance(p) -> np.ndarray:
    """Covariance of a single categorical draw: diag(p) - p p^T."""
    p = np.asarray(p, dtype=float)
    return np.diag(p) - np.outer(p, p)


def asymptotic_sigma(p, grad) -> float:
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise DomainGuard("gradient is not finite")
    p = np.asarray(p, dtype=float)
    # V' (diag(p) - pp') V without forming the matrix
    var = float(np.dot(p, grad * grad) - np.dot(p, grad) ** 2)
    if var < -NEGATIVE_TOL:
        raise NumericalNegative(f"V'SV = {var:.3e} < 0")
    return math.sqrt(max(var, 0.0))


def wald_test(counts: CellCounts, metric: MetricDefinition, alpha: float = 0.05,
              sidedness: Sidedness | str = Sidedness.TWO_SIDED) -> WaldOutcome:
    """Plug-in Wald interval and p-value for ``metric`` at ``counts``.

    The statistic is z = sqrt(n) * (phi(p_hat) - null) / sigma(p_hat), with
    null 0 for differences and 1 for ratios. One-sided alternatives:
    ``less`` means phi < null, ``greater`` means phi > null.
    """
    sidedness = Sidedness(sidedness)
    p = plug_in_probs(counts)
    if not np.all(metric.domain_guard(p)):
        raise DomainGuard(f"metric {metric.id} undefined at counts {counts.counts}")
    estimate = float(metric.value(p))
    sigma = asymptotic_sigma(p, metric.gradient(p))
    null = metric.null_value
    se = sigma / math.sqrt(counts.n)

    if sigma == 0.0:
        if estimate != null:
            raise DegenerateSigma(
                f"zero asymptotic variance with estimate {estimate} != {null} at {counts.counts}"
            )
        return WaldOutcome(estimate, 0.0, 0.0, (estimate, estimate), 1.0, null, 0.0)

    z = (estimate - null) / se
    if sidedness is Sidedness.TWO_SIDED:
        half = se * std_normal_quantile(1 - alpha / 2)
        interval = (estimate - half, estimate + half)
        p_value = min(1.0, 2.0 * std_normal_sf(abs(z)))
    elif sidedness is Sidedness.LESS:
        interval = (-math.inf, estimate + se * std_normal_quantile(1 - alpha))
        p_value = std_normal_cdf(z)
    else:
        interval = (estimate - se * std_normal_quantile(1 - alpha), math.inf)
        p_value = std_normal_sf(z)
    return WaldOutcome(estimate, sigma, se, interval, p_value, null, z)
