"""Metric transformations and ratio-of-means effect sizes.

A performance metric is described by a :class:`MetricSpec`. Lower-is-better
metrics (time, steps) are inverted with the reciprocal-distance transform;
higher-is-better metrics with a finite ceiling can be mapped to odds so that
gains near the ceiling are not compressed.

The synergy ratio compares the human-computer team against the better of the
two single-agent baselines::

    rho_hat = X_HC / max(X_H, X_C)

and ``rho_hat > 1`` means the team beats both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, DomainError, UndefinedRatio

__all__ = [
    "Direction",
    "MetricSpec",
    "PerformanceTriple",
    "RatioResult",
    "transform_lower",
    "transform_upper",
    "inverse_upper",
    "transform_pipeline",
    "compute_rho",
    "compute_rho_hat",
    "is_synergy",
]


class Direction(str, enum.Enum):
    HIGHER_BETTER = "HigherBetter"
    LOWER_BETTER = "LowerBetter"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        key = str(text).strip().replace("_", "").replace("-", "").lower()
        if key in ("higherbetter", "higher", "up"):
            return cls.HIGHER_BETTER
        if key in ("lowerbetter", "lower", "down"):
            return cls.LOWER_BETTER
        raise ConfigError(f"unknown direction {text!r}")


@dataclass(frozen=True)
class MetricSpec:
    """Direction of desirability and the bounds of a performance metric."""

    name: str = "metric"
    direction: Direction = Direction.HIGHER_BETTER
    lower_bound: float = 0.0
    upper_bound: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction.parse(self.direction))
        if not math.isfinite(self.lower_bound):
            raise ConfigError("lower_bound must be finite")
        if self.upper_bound is not None:
            if not self.upper_bound > self.lower_bound:
                raise ConfigError(
                    f"upper_bound {self.upper_bound} must exceed lower_bound {self.lower_bound}"
                )
            if self.direction is Direction.LOWER_BETTER:
                # the reciprocal and odds transforms are never composed
                raise ConfigError(
                    "a LowerBetter metric cannot also carry an upper-bound transform"
                )

    @property
    def has_upper_bound(self) -> bool:
        return self.upper_bound is not None

    def contains(self, x: float) -> bool:
        if x < self.lower_bound:
            return False
        return self.upper_bound is None or x <= self.upper_bound


def transform_lower(x: float, spec: MetricSpec) -> float:
    """Desirable-lower-bound transform ``1 / (x - lower_bound)``."""
    d = x - spec.lower_bound
    if not d > 0:
        raise DomainError(
            f"lower-bound transform needs x > {spec.lower_bound}, got {x}"
        )
    return 1.0 / d


def transform_upper(x: float, spec: MetricSpec) -> float:
    """Desirable-upper-bound (odds) transform.

    The value is first rescaled onto [0, 1] using the metric bounds, then
    mapped to ``x' / (1 - x')``. The lower bound maps to a true zero and the
    upper bound is excluded (infinite odds).
    """
    if spec.upper_bound is None:
        raise DomainError(f"metric {spec.name!r} has no upper bound")
    lo, hi = spec.lower_bound, spec.upper_bound
    if not lo <= x < hi:
        raise DomainError(f"odds transform needs {lo} <= x < {hi}, got {x}")
    scaled = (x - lo) / (hi - lo)
    return scaled / (1.0 - scaled)


def inverse_upper(odds: float, spec: MetricSpec) -> float:
    """Map odds back onto the metric scale (inverse of :func:`transform_upper`)."""
    if spec.upper_bound is None:
        raise DomainError(f"metric {spec.name!r} has no upper bound")
    if odds < 0:
        raise DomainError("odds must be non-negative")
    scaled = odds / (1.0 + odds)
    return spec.lower_bound + scaled * (spec.upper_bound - spec.lower_bound)


def transform_pipeline(x: float, spec: MetricSpec, *, upper: bool = True) -> float:
    """Apply whichever transform the metric calls for.

    LowerBetter metrics get the reciprocal transform. HigherBetter metrics
    with an upper bound get the odds transform when ``upper`` is true.
    Anything else passes through unchanged.
    """
    if spec.direction is Direction.LOWER_BETTER:
        return transform_lower(x, spec)
    if upper and spec.upper_bound is not None:
        return transform_upper(x, spec)
    return float(x)


def compute_rho(numerator: float, denominator: float) -> float:
    """Plain ratio of two (already transformed) means.

    A zero denominator with a positive numerator yields ``math.inf``: the
    team does something neither baseline can do at all.
    """
    if denominator < 0 or numerator < 0:
        raise DomainError("ratio of means needs non-negative means")
    if denominator == 0:
        if numerator > 0:
            return math.inf
        raise UndefinedRatio("0/0 ratio is undefined")
    return numerator / denominator


@dataclass(frozen=True)
class PerformanceTriple:
    """Mean performance of human alone, computer alone and the team.

    ``h_impossible`` / ``c_impossible`` mark a baseline that cannot do the
    task at all; its (transformed) performance is taken to be zero.
    """

    x_h: float
    x_c: float
    x_hc: float
    metric: MetricSpec = MetricSpec()
    h_impossible: bool = False
    c_impossible: bool = False

    def __post_init__(self):
        checks = [("x_hc", self.x_hc, False)]
        checks.append(("x_h", self.x_h, self.h_impossible))
        checks.append(("x_c", self.x_c, self.c_impossible))
        for name, value, impossible in checks:
            if impossible:
                continue
            if not math.isfinite(value) or not self.metric.contains(value):
                raise DomainError(f"{name}={value} outside the bounds of {self.metric.name!r}")


@dataclass(frozen=True)
class RatioResult:
    """Synergy ratios for one triple.

    ``rho`` is the raw ``X_HC / max(X_H, X_C)`` with no transforms,
    ``rho_hat`` applies the lower-bound transform where the metric is
    lower-is-better and ``rho_hat_prime`` additionally applies the odds
    transform (``None`` when the metric has no known ceiling).
    """

    rho: float
    rho_hat: float
    rho_hat_prime: Optional[float]
    baseline_label: str

    def to_dict(self) -> dict:
        return {
            "rho": _json_ratio(self.rho),
            "rho_hat": _json_ratio(self.rho_hat),
            "rho_hat_prime": "n/a" if self.rho_hat_prime is None else _json_ratio(self.rho_hat_prime),
            "baseline_label": self.baseline_label,
        }


def _json_ratio(value: float):
    return "inf" if math.isinf(value) else value


def _synergy_ratio(hc: float, h: float, c: float) -> tuple[float, str]:
    label = "H" if h >= c else "C"
    if max(h, c) == 0 and hc == 0:
        raise UndefinedRatio("team and both baselines are all zero")
    return compute_rho(hc, max(h, c)), label


def _transformed_triple(t: PerformanceTriple, upper: bool) -> tuple[float, float, float]:
    f = lambda x: transform_pipeline(x, t.metric, upper=upper)  # noqa: E731
    h = 0.0 if t.h_impossible else f(t.x_h)
    c = 0.0 if t.c_impossible else f(t.x_c)
    return h, c, f(t.x_hc)


def compute_rho_hat(t: PerformanceTriple, transformed: bool = True) -> RatioResult:
    """Synergy ratio of a performance triple.

    With ``transformed=False`` every ratio is computed on the raw values and
    ``rho_hat_prime`` is not reported. The baseline label names the winner
    of the max in ``rho_hat`` (ties go to the human baseline).
    """
    raw_h = 0.0 if t.h_impossible else t.x_h
    raw_c = 0.0 if t.c_impossible else t.x_c
    rho, raw_label = _synergy_ratio(t.x_hc, raw_h, raw_c)
    if not transformed:
        return RatioResult(rho, rho, None, raw_label)

    h, c, hc = _transformed_triple(t, upper=False)
    rho_hat, label = _synergy_ratio(hc, h, c)
    prime = None
    if t.metric.direction is Direction.LOWER_BETTER:
        prime = rho_hat
    elif t.metric.upper_bound is not None:
        h, c, hc = _transformed_triple(t, upper=True)
        prime, _ = _synergy_ratio(hc, h, c)
    return RatioResult(rho, rho_hat, prime, label)


def is_synergy(ratio: float) -> bool:
    """Strict synergy criterion ``ratio > 1``."""
    return ratio > 1.0
