"""Log-linear regression estimators of a multiplicative condition effect.

Under the multiplicative performance model ``s = beta * a_i / d_j * f^C * g^O * e``
the log outcome is linear::

    log s_ij = b0 + b1*C_ij + b2*T_j + b3*O_ij + v_i + eps_ij

so ``exp(b1)`` estimates the ratio of means between conditions. The subject
ability ``log a_i`` becomes the random intercept ``v_i``.

:func:`fit_lmm` fits the random-intercept model by maximum likelihood (or
REML). The likelihood is profiled over the variance ratio
``lam = sigma_u^2 / sigma_e^2``: for fixed ``lam`` the GLS coefficients and the
residual variance are closed form, so the fit reduces to a bounded 1-D search.
With a random intercept the covariance of subject ``g`` (``m`` rows) is
``sigma_e^2 (I + lam 11')`` whose inverse and determinant are scalar
expressions, so every evaluation runs on per-subject sums.

:func:`fit_ols` is the same fixed-effects model without the random intercept.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import optimize, stats

from .errors import DataError, DomainError, RankError

__all__ = [
    "LongRecord",
    "Coefficient",
    "RandomEffect",
    "RegressionFit",
    "EFFECTS",
    "fit_lmm",
    "fit_ols",
    "filter_successful",
    "read_long_csv",
    "write_long_csv",
    "format_table",
]

EFFECTS = ("Intercept", "Condition", "Task", "Order")
LAMBDA_MAX = 1e4
LAMBDA_TOL = 1e-9

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LongRecord:
    """One subject-task observation from a crossover experiment."""

    subject_id: str
    condition: int
    task: int
    order: int
    outcome: float

    def __post_init__(self):
        for name in ("condition", "task", "order"):
            if getattr(self, name) not in (0, 1):
                raise DomainError(f"{name} must be a 0/1 indicator, got {getattr(self, name)!r}")
        if not (self.outcome > 0 and math.isfinite(self.outcome)):
            raise DomainError(
                f"outcome must be positive and finite (subject {self.subject_id}), got {self.outcome}"
            )


@dataclass(frozen=True)
class Coefficient:
    estimate: float
    se: float
    p: float
    ci_low: float
    ci_high: float

    @property
    def exp_estimate(self) -> float:
        return math.exp(self.estimate)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "se": self.se,
            "p": self.p,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "exp_estimate": self.exp_estimate,
        }


@dataclass(frozen=True)
class RandomEffect:
    variance: float
    se_of_variance: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def se_of_sd(self) -> float:
        # delta method; undefined on the boundary
        if self.variance <= 0:
            return math.nan
        return self.se_of_variance / (2.0 * self.sd)

    def to_dict(self) -> dict:
        return {
            "variance": self.variance,
            "sd": self.sd,
            "se_of_variance": _nan_to_none(self.se_of_variance),
            "se_of_sd": _nan_to_none(self.se_of_sd),
        }


def _nan_to_none(x):
    return None if isinstance(x, float) and math.isnan(x) else x


@dataclass(frozen=True)
class RegressionFit:
    coefficients: dict
    random_effect: Optional[RandomEffect]
    residual_sd: float
    n_obs: int
    n_subjects: int
    log_likelihood: float
    method: str
    variance_ratio: float = 0.0
    level: float = 0.95
    cov_params: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def condition_ratio(self) -> float:
        """``exp(b1)``: the estimated ratio of means between conditions."""
        return self.coefficients["Condition"].exp_estimate

    @property
    def condition_ratio_ci(self) -> tuple[float, float]:
        c = self.coefficients["Condition"]
        return math.exp(c.ci_low), math.exp(c.ci_high)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_obs": self.n_obs,
            "n_subjects": self.n_subjects,
            "level": self.level,
            "coefficients": {k: v.to_dict() for k, v in self.coefficients.items()},
            "random_effect": None if self.random_effect is None else self.random_effect.to_dict(),
            "residual_sd": self.residual_sd,
            "variance_ratio": self.variance_ratio,
            "log_likelihood": self.log_likelihood,
        }


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------


@dataclass
class _Design:
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray  # integer subject codes, 0..G-1
    sizes: np.ndarray  # (G,)
    Sx: np.ndarray  # (G, p) per-subject column sums of X
    sy: np.ndarray  # (G,) per-subject sums of y
    XtX: np.ndarray
    Xty: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _design(data: Sequence[LongRecord]) -> _Design:
    if len(data) == 0:
        raise DomainError("no observations")
    X = np.array([[1.0, r.condition, r.task, r.order] for r in data])
    outcomes = np.array([r.outcome for r in data], dtype=float)
    if np.any(outcomes <= 0):
        raise DomainError("outcomes must be positive")
    y = np.log(outcomes)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankError("design matrix [1, condition, task, order] is rank deficient")
    _, groups = np.unique([str(r.subject_id) for r in data], return_inverse=True)
    G = int(groups.max()) + 1
    sizes = np.bincount(groups, minlength=G).astype(float)
    Sx = np.zeros((G, X.shape[1]))
    np.add.at(Sx, groups, X)
    sy = np.bincount(groups, weights=y, minlength=G)
    return _Design(X, y, groups, sizes, Sx, sy, X.T @ X, X.T @ y)


def _gls(d: _Design, lam: float):
    """GLS pieces at variance ratio ``lam``: (beta, quad form, A = X'V^-1 X, logdet V)."""
    w = lam / (1.0 + lam * d.sizes)
    A = d.XtX - (d.Sx * w[:, None]).T @ d.Sx
    b = d.Xty - d.Sx.T @ (w * d.sy)
    beta = np.linalg.solve(A, b)
    # quadratic form from residuals rather than y'V^-1y - b'beta, which cancels badly
    r = d.y - d.X @ beta
    rs = np.bincount(d.groups, weights=r, minlength=d.sizes.size)
    Q = max(float(r @ r) - float(np.sum(w * rs**2)), 0.0)
    logdet = float(np.sum(np.log1p(lam * d.sizes)))
    return beta, Q, A, logdet


def _profile_loglik(d: _Design, lam: float, reml: bool) -> float:
    _, Q, A, logdet = _gls(d, lam)
    n, p = d.n, d.p
    if reml:
        m = n - p
        s2 = Q / m
        if s2 <= 0:
            return math.inf
        _, logdetA = np.linalg.slogdet(A)
        return -0.5 * (m * (_LOG_2PI + math.log(s2) + 1.0) + logdet + logdetA)
    s2 = Q / n
    if s2 <= 0:
        return math.inf
    return -0.5 * (n * (_LOG_2PI + math.log(s2) + 1.0) + logdet)


def _loglik_variances(d: _Design, s2u: float, s2e: float, reml: bool) -> float:
    """Log-likelihood at given variance components, coefficients at their GLS value."""
    lam = s2u / s2e
    _, Q, A, logdet = _gls(d, lam)
    n, p = d.n, d.p
    ll = -0.5 * (logdet + n * math.log(s2e) + Q / s2e)
    if reml:
        _, logdetA = np.linalg.slogdet(A)
        return ll - 0.5 * ((n - p) * _LOG_2PI - p * math.log(s2e) + logdetA)
    return ll - 0.5 * n * _LOG_2PI


def _profile_score(d: _Design, lam: float, reml: bool) -> float:
    """Derivative of the profiled log-likelihood with respect to ``lam``."""
    beta, Q, A, _ = _gls(d, lam)
    r = d.y - d.X @ beta
    rs = np.bincount(d.groups, weights=r, minlength=d.sizes.size)
    k = 1.0 / (1.0 + lam * d.sizes)
    dQ = -float(np.sum((rs * k) ** 2))  # envelope theorem: beta held at its optimum
    dlogdet = float(np.sum(d.sizes * k))
    m = d.n - d.p if reml else d.n
    score = -0.5 * m * dQ / Q - 0.5 * dlogdet
    if reml:
        dA = -(d.Sx * (k**2)[:, None]).T @ d.Sx
        score -= 0.5 * float(np.trace(np.linalg.solve(A, dA)))
    return score


def _polish_lambda(d: _Design, lam: float, reml: bool) -> float:
    # a value-based search stalls near sqrt(eps) relative accuracy on a flat
    # optimum; a root of the score pins lambda to rounding level
    score = lambda t: _profile_score(d, t, reml)  # noqa: E731
    for width in (1e-6, 1e-4, 1e-2):
        lo, hi = lam * (1.0 - width), min(lam * (1.0 + width), LAMBDA_MAX)
        try:
            slo, shi = score(lo), score(hi)
        except (np.linalg.LinAlgError, ZeroDivisionError):
            return lam
        if slo > 0 > shi:
            return float(optimize.brentq(score, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps))
    return lam


def _maximize_lambda(d: _Design, reml: bool) -> float:
    if np.all(d.sizes == 1):
        # one row per subject: the intercept variance is absorbed by the residual
        return 0.0
    nll = lambda lam: -_profile_loglik(d, lam, reml)  # noqa: E731
    # coarse log-spaced scan to pick a bracket, then Brent (golden section + parabolic)
    grid = np.concatenate(([0.0], np.logspace(-6, math.log10(LAMBDA_MAX), 41)))
    vals = np.array([nll(g) for g in grid])
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(
        nll, bounds=(lo, hi), method="bounded", options={"xatol": LAMBDA_TOL, "maxiter": 500}
    )
    best, best_val = float(res.x), float(res.fun)
    for edge in (lo, hi):
        v = nll(edge)
        if v <= best_val:
            best, best_val = float(edge), v
    # prefer the boundary when it is as good: sigma_u^2 = 0 is a valid solution
    if nll(0.0) <= best_val + 1e-12:
        return 0.0
    if 0.0 < best < LAMBDA_MAX:
        best = _polish_lambda(d, best, reml)
    return best


def _coef_table(beta, cov, level) -> dict:
    z = float(stats.norm.ppf(0.5 * (1.0 + level)))
    out = {}
    for i, name in enumerate(EFFECTS):
        se = math.sqrt(max(cov[i, i], 0.0))
        est = float(beta[i])
        if se > 0:
            p = float(2.0 * stats.norm.sf(abs(est) / se))
        else:
            p = 0.0 if est != 0 else 1.0
        out[name] = Coefficient(est, se, p, est - z * se, est + z * se)
    return out


def _variance_se(d: _Design, s2u: float, s2e: float, reml: bool) -> float:
    """SE of sigma_u^2 from the numerical Hessian of the log-likelihood in (s2u, s2e)."""
    theta = np.array([s2u, s2e])
    h = 1e-5 * np.maximum(np.abs(theta), s2e)

    def ll(t):
        # V stays positive definite for slightly negative s2u near the boundary
        if t[1] <= 0 or np.any(1.0 + (t[0] / t[1]) * d.sizes <= 0):
            return math.nan
        return _loglik_variances(d, t[0], t[1], reml)

    H = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            ei = np.eye(2)[i] * h[i]
            ej = np.eye(2)[j] * h[j]
            H[i, j] = (
                ll(theta + ei + ej) - ll(theta + ei - ej) - ll(theta - ei + ej) + ll(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        return math.nan
    v = cov[0, 0]
    return math.sqrt(v) if np.isfinite(v) and v > 0 else math.nan


def _exact_within_fit(d: _Design):
    """Detect noise-free data (zero within-subject residual).

    The likelihood is unbounded there (sigma_e -> 0). Returns the exact
    coefficients and the subject-offset variance, or ``None`` when the data
    carry residual noise or the within-subject design cannot identify the
    slopes.
    """
    if np.all(d.sizes == 1):
        return None
    means_x = d.Sx[d.groups] / d.sizes[d.groups, None]
    means_y = d.sy[d.groups] / d.sizes[d.groups]
    Xw = (d.X - means_x)[:, 1:]
    yw = d.y - means_y
    if np.linalg.matrix_rank(Xw) < Xw.shape[1]:
        return None
    slopes, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    rw = yw - Xw @ slopes
    if float(rw @ rw) > 1e-24 * max(1.0, float(d.y @ d.y)):
        return None
    partial = d.y - d.X[:, 1:] @ slopes
    offsets = np.bincount(d.groups, weights=partial) / d.sizes
    b0 = float(np.mean(offsets))
    beta = np.concatenate(([b0], slopes))
    return beta, float(np.mean((offsets - b0) ** 2))


def fit_lmm(
    data: Sequence[LongRecord],
    method: str = "ML",
    level: float = 0.95,
    fixed_lambda: Optional[float] = None,
) -> RegressionFit:
    """Random-intercept linear mixed model on ``log(outcome)``.

    ``method`` is ``"ML"`` (default) or ``"REML"``. ``fixed_lambda`` skips the
    search and fits at the given variance ratio (``0`` reproduces OLS
    coefficients). Inference on fixed effects is Wald z with normal
    quantiles, two-sided.
    """
    method = method.upper()
    if method not in ("ML", "REML"):
        raise DomainError(f"unknown LMM method {method!r}")
    d = _design(data)
    n_subjects = int(d.sizes.size)
    if n_subjects < 2:
        raise DomainError("a random-intercept model needs at least two subjects")
    reml = method == "REML"
    exact = _exact_within_fit(d) if fixed_lambda is None else None
    if exact is not None:
        beta, s2u = exact
        return RegressionFit(
            coefficients=_coef_table(beta, np.zeros((d.p, d.p)), level),
            random_effect=RandomEffect(s2u, math.nan),
            residual_sd=0.0,
            n_obs=d.n,
            n_subjects=n_subjects,
            log_likelihood=math.inf,
            method=method,
            variance_ratio=math.inf,
            level=level,
            cov_params=np.zeros((d.p, d.p)),
        )
    if fixed_lambda is not None:
        if not 0.0 <= fixed_lambda:
            raise DomainError("variance ratio must be non-negative")
        lam = float(fixed_lambda)
    else:
        lam = _maximize_lambda(d, reml)

    beta, Q, A, _ = _gls(d, lam)
    s2e = Q / (d.n - d.p if reml else d.n)
    s2u = lam * s2e
    cov = s2e * np.linalg.inv(A)
    ll = _profile_loglik(d, lam, reml)
    re = RandomEffect(s2u, _variance_se(d, s2u, s2e, reml) if s2e > 0 else math.nan)
    return RegressionFit(
        coefficients=_coef_table(beta, cov, level),
        random_effect=re,
        residual_sd=math.sqrt(s2e),
        n_obs=d.n,
        n_subjects=n_subjects,
        log_likelihood=ll,
        method=method,
        variance_ratio=lam,
        level=level,
        cov_params=cov,
    )


def fit_ols(data: Sequence[LongRecord], level: float = 0.95) -> RegressionFit:
    """Ordinary least squares on ``log(outcome)`` with the same fixed effects.

    Standard errors use the unbiased residual variance ``RSS / (n - p)``; the
    reported log-likelihood is the Gaussian maximum (``RSS / n``).
    """
    d = _design(data)
    if d.n <= d.p:
        raise DomainError("OLS needs more observations than coefficients")
    beta, *_ = np.linalg.lstsq(d.X, d.y, rcond=None)
    resid = d.y - d.X @ beta
    rss = float(resid @ resid)
    s2 = rss / (d.n - d.p)
    cov = s2 * np.linalg.inv(d.XtX)
    s2_ml = rss / d.n
    ll = -0.5 * d.n * (_LOG_2PI + math.log(s2_ml) + 1.0) if s2_ml > 0 else math.inf
    return RegressionFit(
        coefficients=_coef_table(beta, cov, level),
        random_effect=None,
        residual_sd=math.sqrt(s2),
        n_obs=d.n,
        n_subjects=int(d.sizes.size),
        log_likelihood=ll,
        method="OLS",
        variance_ratio=0.0,
        level=level,
        cov_params=cov,
    )


def filter_successful(
    data: Iterable[LongRecord], scores: Mapping, threshold: float
) -> list[LongRecord]:
    """Keep observations whose quality score is at least ``threshold``.

    ``scores`` maps ``(subject_id, task)`` to a score.
    """
    kept = []
    for rec in data:
        key = (rec.subject_id, rec.task)
        if key not in scores:
            raise DataError(f"no score for subject {rec.subject_id!r}, task {rec.task}")
        if scores[key] >= threshold:
            kept.append(rec)
    return kept


# ---------------------------------------------------------------------------
# long-format CSV
# ---------------------------------------------------------------------------

LONG_HEADER = ("subject", "condition", "task", "order", "outcome")


def read_long_csv(path) -> tuple[list[LongRecord], Optional[dict]]:
    """Read ``subject,condition,task,order,outcome[,score]``.

    Returns the records and, when a ``score`` column is present, a mapping
    ``(subject, task) -> score``.
    """
    records, scores = [], {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in LONG_HEADER if c not in fields]
        if missing:
            raise DataError(f"missing columns {missing}", row=1)
        has_score = "score" in fields
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = LongRecord(
                    subject_id=row["subject"].strip(),
                    condition=_indicator(row["condition"]),
                    task=_indicator(row["task"]),
                    order=_indicator(row["order"]),
                    outcome=float(row["outcome"]),
                )
                if has_score and row["score"].strip():
                    scores[(rec.subject_id, rec.task)] = float(row["score"])
            except (ValueError, TypeError, AttributeError) as exc:
                raise DataError(str(exc), row=lineno) from None
            records.append(rec)
    return records, (scores if has_score else None)


def _indicator(text) -> int:
    v = float(text)
    if v not in (0.0, 1.0):
        raise DomainError(f"indicator must be 0 or 1, got {text!r}")
    return int(v)


def write_long_csv(records: Iterable[LongRecord], path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LONG_HEADER)
        for r in records:
            w.writerow([r.subject_id, r.condition, r.task, r.order, repr(float(r.outcome))])
    finally:
        if own:
            fh.close()


def format_table(fit: RegressionFit) -> str:
    """Aligned coefficient table (Effect, Estimate, SE, p, CI LL, CI UL, e^Estimate)."""
    pct = f"{100 * fit.level:g}%"
    head = ["Effect", "Estimate", "SE", "p", f"{pct} CI LL", f"{pct} CI UL", "e^Estimate"]
    rows = []
    for name, c in fit.coefficients.items():
        rows.append(
            [name] + [f"{v:.3f}" for v in (c.estimate, c.se, c.p, c.ci_low, c.ci_high, c.exp_estimate)]
        )
    if fit.random_effect is not None:
        re = fit.random_effect
        se = "nan" if math.isnan(re.se_of_variance) else f"{re.se_of_variance:.3f}"
        rows.append(["Subject RE (var)", f"{re.variance:.3f}", se, "", "", "", ""])
        se_sd = "nan" if math.isnan(re.se_of_sd) else f"{re.se_of_sd:.3f}"
        rows.append(["Subject RE (sd)", f"{re.sd:.3f}", se_sd, "", "", "", ""])
    widths = [max(len(r[i]) for r in rows + [head]) for i in range(len(head))]
    lines = ["  ".join(h.rjust(w) if i else h.ljust(w) for i, (h, w) in enumerate(zip(head, widths)))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))))
    lines.append(
        f"method={fit.method}  n_obs={fit.n_obs}  n_subjects={fit.n_subjects}  "
        f"residual_sd={fit.residual_sd:.4f}  loglik={fit.log_likelihood:.4f}"
    )
    return "\n".join(lines)
