"""Fairness metrics as smooth functions on the probability simplex.

All value/gradient functions accept arrays whose last axis holds the four
cells in canonical order, so the same code evaluates one plug-in point or a
(K, 4) block of posterior draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .core import MetricId, Reference
from .errors import DomainGuard, EmptyConditioned, MissingLabels

if TYPE_CHECKING:
    from .data import Dataset

Array = np.ndarray


def _cells(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2], p[..., 3]


def _guard_marginals(p) -> Array:
    p1, p2, p3, p4 = _cells(p)
    return (p1 + p2 > 0) & (p3 + p4 > 0)


def _guard_di(p) -> Array:
    p1, p2, p3, p4 = _cells(p)
    return _guard_marginals(p) & (p3 > 0)


def _guard_di_whole(p) -> Array:
    p1, p2, p3, p4 = _cells(p)
    return (p1 + p2 > 0) & (p1 + p3 > 0)


def _check(guard: Callable, p, name: str):
    if not np.all(guard(p)):
        raise DomainGuard(f"{name} undefined at p={np.asarray(p).tolist()}")


def sp_value(p):
    """Positive rate in S minus positive rate in the complement."""
    _check(_guard_marginals, p, "statistical parity")
    p1, p2, p3, p4 = _cells(p)
    return p1 / (p1 + p2) - p3 / (p3 + p4)


def sp_gradient(p) -> Array:
    _check(_guard_marginals, p, "statistical parity")
    p1, p2, p3, p4 = _cells(p)
    ps2 = (p1 + p2) ** 2
    pr2 = (p3 + p4) ** 2
    return np.stack([p2 / ps2, -p1 / ps2, -p4 / pr2, p3 / pr2], axis=-1)


def di_value(p):
    """Ratio of the positive rate in S to the positive rate in the complement."""
    _check(_guard_di, p, "disparate impact")
    p1, p2, p3, p4 = _cells(p)
    return (p1 / (p1 + p2)) * ((p3 + p4) / p3)


def di_gradient(p) -> Array:
    _check(_guard_di, p, "disparate impact")
    p1, p2, p3, p4 = _cells(p)
    ps, pr = p1 + p2, p3 + p4
    r_s, r_ref = p1 / ps, p3 / pr
    ratio = r_s / r_ref
    return np.stack(
        [
            (p2 / ps**2) / r_ref,
            (-p1 / ps**2) / r_ref,
            -ratio / r_ref * (p4 / pr**2),
            ratio / r_ref * (p3 / pr**2),
        ],
        axis=-1,
    )


# Whole-population reference: the comparison rate is p1 + p3 (n rows, not n_ref).

def sp_whole_value(p):
    _check(_guard_marginals, p, "statistical parity")
    p1, p2, p3, p4 = _cells(p)
    return p1 / (p1 + p2) - (p1 + p3)


def sp_whole_gradient(p) -> Array:
    _check(_guard_marginals, p, "statistical parity")
    p1, p2, p3, p4 = _cells(p)
    ps2 = (p1 + p2) ** 2
    return np.stack([p2 / ps2 - 1.0, -p1 / ps2, -np.ones_like(p3), np.zeros_like(p4)], axis=-1)


def di_whole_value(p):
    _check(_guard_di_whole, p, "disparate impact")
    p1, p2, p3, p4 = _cells(p)
    return (p1 / (p1 + p2)) / (p1 + p3)


def di_whole_gradient(p) -> Array:
    _check(_guard_di_whole, p, "disparate impact")
    p1, p2, p3, p4 = _cells(p)
    ps, pop = p1 + p2, p1 + p3
    r_s = p1 / ps
    return np.stack(
        [
            (p2 / ps**2) / pop - r_s / pop**2,
            (-p1 / ps**2) / pop,
            -r_s / pop**2,
            np.zeros_like(p4),
        ],
        axis=-1,
    )


def numeric_gradient(value: Callable, p, h: float = 1e-6) -> Array:
    """Central-difference gradient, one coordinate at a time.

    Fallback for user-registered metrics that do not ship an analytic gradient.
    Coordinates are perturbed independently (off the simplex), which is what
    the delta method needs: Sigma annihilates the all-ones direction anyway.
    """
    p = np.asarray(p, dtype=float)
    grad = np.empty(p.shape[-1:] + p.shape[:-1])
    for i in range(p.shape[-1]):
        step = np.zeros(p.shape[-1])
        step[i] = h
        grad[i] = (value(p + step) - value(p - step)) / (2 * h)
    return np.moveaxis(grad, 0, -1)


@dataclass(frozen=True)
class MetricDefinition:
    id: str
    q: int
    value: Callable
    gradient: Callable
    domain_guard: Callable
    null_value: float = 0.0
    conditioning: str = "none"  # or "positives_only"
    reference: Reference = Reference.COMPLEMENT

    @property
    def is_ratio(self) -> bool:
        return self.null_value == 1.0

    @classmethod
    def custom(cls, id: str, value: Callable, q: int = 4, gradient: Callable | None = None,
               domain_guard: Callable | None = None, null_value: float = 0.0) -> "MetricDefinition":
        guard = domain_guard or (lambda p: np.all(np.isfinite(np.asarray(p)), axis=-1))
        grad = gradient or (lambda p: numeric_gradient(value, p))
        return cls(id=id, q=q, value=value, gradient=grad, domain_guard=guard, null_value=null_value)


_REGISTRY = {
    (MetricId.SP, Reference.COMPLEMENT): (sp_value, sp_gradient, _guard_marginals, 0.0),
    (MetricId.DI, Reference.COMPLEMENT): (di_value, di_gradient, _guard_di, 1.0),
    (MetricId.SP, Reference.WHOLE_POPULATION): (sp_whole_value, sp_whole_gradient, _guard_marginals, 0.0),
    (MetricId.DI, Reference.WHOLE_POPULATION): (di_whole_value, di_whole_gradient, _guard_di_whole, 1.0),
}


def get_metric(metric: MetricId | str, reference: Reference | str = Reference.COMPLEMENT) -> MetricDefinition:
    """Look up a built-in metric.

    Equal opportunity reuses the statistical-parity function; the difference
    is only which rows are tabulated (``conditioning="positives_only"``).
    """
    metric, reference = MetricId(metric), Reference(reference)
    base = MetricId.SP if metric is MetricId.EO else metric
    value, grad, guard, null = _REGISTRY[(base, reference)]
    conditioning = "positives_only" if metric is MetricId.EO else "none"
    return MetricDefinition(
        id=metric.value, q=4, value=value, gradient=grad, domain_guard=guard,
        null_value=null, conditioning=conditioning, reference=reference,
    )


def eo_conditioning(dataset: "Dataset") -> "Dataset":
    """Keep only rows whose ground-truth label is 1."""
    if dataset.labels is None:
        raise MissingLabels("equal opportunity needs a label column")
    kept = dataset.subset(dataset.labels == 1)
    if kept.n_rows == 0:
        raise EmptyConditioned("no rows with label 1 to condition on")
    return kept
