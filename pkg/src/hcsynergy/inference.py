"""Confidence intervals for a ratio of two means, and simple proportion tests.

Three interval constructions are provided for ``mean_x / mean_y``:

``fieller``
    Inverts the quadratic inequality ``(x - rho*y)^2 <= z^2 Var(x - rho*y)``.
    Exact under normality, but unbounded when the denominator mean is not
    clearly away from zero.
``delta``
    First-order Taylor expansion, symmetric around the estimate.
``recommended``
    The same variance on the log scale, back-transformed. Always positive and
    symmetric in ``log(rho)``.

Designs are ``independent`` (two separate samples) or ``paired`` (one sample
of pairs, correlation ``r``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, UnboundedInterval

METHODS = ("fieller", "delta", "recommended")
DESIGNS = ("independent", "paired")

# relative size below which a negative variance is treated as rounding noise
_NEG_TOL = 1e-12


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    sd: float
    r: Optional[float] = None  # correlation with the paired sample, paired designs only

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"need n >= 2, got {self.n}")
        if not self.sd >= 0:
            raise DomainError(f"sd must be non-negative, got {self.sd}")
        if self.r is not None and not -1.0 <= self.r <= 1.0:
            raise DomainError(f"correlation must lie in [-1, 1], got {self.r}")

    @property
    def var_of_mean(self) -> float:
        return self.sd**2 / self.n

    @classmethod
    def from_data(cls, values: Sequence[float]) -> "SampleSummary":
        a = np.asarray(values, dtype=float)
        if a.size < 2:
            raise DomainError("need at least two observations")
        return cls(int(a.size), float(a.mean()), float(a.std(ddof=1)))


def paired_summaries(x: Sequence[float], y: Sequence[float]) -> tuple[SampleSummary, SampleSummary]:
    """Summaries of two paired samples, both carrying their correlation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("paired samples must be 1-D and the same length")
    sx, sy = SampleSummary.from_data(x), SampleSummary.from_data(y)
    if sx.sd == 0 or sy.sd == 0:
        r = 0.0
    else:
        r = float(np.corrcoef(x, y)[0, 1])
        r = min(1.0, max(-1.0, r))
    return SampleSummary(sx.n, sx.mean, sx.sd, r), SampleSummary(sy.n, sy.mean, sy.sd, r)


@dataclass(frozen=True)
class RatioCI:
    estimate: float
    lower: float
    upper: float
    method: str
    design: str
    level: float = 0.95

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "design": self.design,
            "level": self.level,
            "estimate": self.estimate,
            "lower": self.lower,
            "upper": self.upper,
        }


def critical_value(level: float, df: Optional[float] = None) -> float:
    """Two-sided critical value; normal unless ``df`` is given."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")
    q = 0.5 * (1.0 + level)
    return float(stats.norm.ppf(q) if df is None else stats.t.ppf(q, df))


def _nonneg(value: float, scale: float, what: str) -> float:
    if value >= 0:
        return value
    if value >= -_NEG_TOL * max(scale, 1e-300):
        return 0.0
    raise DomainError(f"negative {what} under square root ({value:g})")


def _paired_cov(num: SampleSummary, den: SampleSummary, design: str, r: Optional[float]) -> float:
    if design == "independent":
        return 0.0
    if num.n != den.n:
        raise DomainError("paired design needs equal sample sizes")
    if r is None:
        r = num.r if num.r is not None else den.r
    if r is None:
        raise DomainError("paired design needs a correlation r")
    return r * num.sd * den.sd / num.n


def ratio_ci(
    numerator: SampleSummary,
    denominator: SampleSummary,
    method: str = "recommended",
    design: str = "independent",
    level: float = 0.95,
    r: Optional[float] = None,
    use_t: bool = False,
) -> RatioCI:
    """Confidence interval for ``numerator.mean / denominator.mean``.

    With ``use_t`` the critical value comes from a t distribution with
    ``n1 + n2 - 2`` degrees of freedom (``n - 1`` for paired data) instead of
    the normal.
    """
    method = method.lower()
    design = design.lower()
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    if design not in DESIGNS:
        raise DomainError(f"unknown design {design!r}")
    if not denominator.mean > 0:
        raise DomainError("denominator mean must be positive")

    xbar, ybar = numerator.mean, denominator.mean
    vx, vy = numerator.var_of_mean, denominator.var_of_mean
    cov = _paired_cov(numerator, denominator, design, r)
    df = None
    if use_t:
        df = numerator.n - 1 if design == "paired" else numerator.n + denominator.n - 2
    z = critical_value(level, df)
    est = xbar / ybar

    if method == "fieller":
        lo, hi = _fieller(xbar, ybar, vx, vy, cov, z)
    else:
        if method == "recommended" and not xbar > 0:
            raise DomainError("log-scale interval needs a positive numerator mean")
        if xbar == 0:
            raise DomainError("relative variance undefined for a zero numerator mean")
        scale = vx / xbar**2 + vy / ybar**2
        rel_var = _nonneg(
            vx / xbar**2 + vy / ybar**2 - 2.0 * cov / (xbar * ybar), scale, "relative variance"
        )
        half = z * math.sqrt(rel_var)
        if method == "delta":
            lo, hi = est - est * half, est + est * half
            lo, hi = min(lo, hi), max(lo, hi)
        else:
            log_est = math.log(est)
            lo, hi = math.exp(log_est - half), math.exp(log_est + half)
    return RatioCI(est, lo, hi, method, design, level)


def _fieller(xbar, ybar, vx, vy, cov, z) -> tuple[float, float]:
    z2 = z * z
    a = ybar**2 - z2 * vy
    if not a > 0:
        raise UnboundedInterval(
            "denominator mean is not significantly different from zero; Fieller set is unbounded"
        )
    b = xbar * ybar - z2 * cov
    c = xbar**2 - z2 * vx
    disc = _nonneg(b * b - a * c, b * b + abs(a * c), "Fieller discriminant")
    root = math.sqrt(disc)
    # roots of a*rho^2 - 2*b*rho + c, written to avoid cancellation
    q = b + math.copysign(root, b)
    if q == 0:
        return 0.0, 0.0
    r1, r2 = q / a, c / q
    return min(r1, r2), max(r1, r2)


def fieller_contains(rho: float, xbar, ybar, vx, vy, cov, z) -> bool:
    """Whether ``rho`` satisfies Fieller's defining inequality."""
    return (xbar - rho * ybar) ** 2 <= z * z * (vx + rho * rho * vy - 2.0 * rho * cov)


@dataclass(frozen=True)
class ProportionTestResult:
    p_hat: float
    z: float
    p_value: float

    def to_dict(self) -> dict:
        return {"p_hat": self.p_hat, "z": self.z, "p_value": self.p_value}


def proportion_z(p_hat: float, n: int, p0: float) -> float:
    if n < 1:
        raise DomainError("proportion test needs n >= 1")
    if not 0.0 < p0 < 1.0:
        raise DomainError(f"null proportion must lie in (0, 1), got {p0}")
    return (p_hat - p0) / math.sqrt(p0 * (1.0 - p0) / n)


def proportion_test(successes: int, n: int, p0: float = 0.5) -> ProportionTestResult:
    """One-sample z test of ``H1: p > p0`` without continuity correction."""
    if n < 1:
        raise DomainError("proportion test needs n >= 1")
    if not 0 <= successes <= n:
        raise DomainError(f"successes must lie in [0, {n}], got {successes}")
    p_hat = successes / n
    z = proportion_z(p_hat, n, p0)
    return ProportionTestResult(p_hat, z, float(stats.norm.sf(z)))


def accuracy_check(success_flags: Sequence[bool], threshold: float = 0.80) -> tuple[float, bool]:
    """Share of successful submissions and whether it strictly exceeds ``threshold``."""
    flags = list(success_flags)
    if not flags:
        raise DomainError("accuracy check needs at least one submission")
    if not 0.0 < threshold < 1.0:
        raise DomainError(f"threshold must lie in (0, 1), got {threshold}")
    share = sum(bool(f) for f in flags) / len(flags)
    return share, share > threshold
