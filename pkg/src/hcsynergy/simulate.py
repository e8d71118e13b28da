"""Synthetic crossover experiments from the multiplicative performance model.

Each subject ``i`` does both tasks ``j``; their outcome (speed) is::

    s_ij = beta * a_i / d_j * f**C_ij * g**O_ij * e_ij

with lognormal ability ``a_i`` and error ``e_ij``, so ``log s`` is exactly the
Gaussian random-intercept model fitted by :func:`hcsynergy.regression.fit_lmm`.

Randomness for replicate ``k`` comes from ``SeedSequence(base_seed,
spawn_key=(k,))``; replicates are therefore independent of evaluation order
and of how many worker processes run them.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, SynergyError
from .inference import paired_summaries, ratio_ci, SampleSummary
from .regression import LongRecord, fit_lmm, fit_ols

__all__ = [
    "Design",
    "SimConfig",
    "RecoveryReport",
    "ESTIMATORS",
    "generate",
    "recovery_study",
    "replicate_rng",
]

ESTIMATORS = ("ratio_of_means", "lmm", "ols")


class Design(str, enum.Enum):
    CROSSOVER = "WithinSubjectCrossover"
    BETWEEN = "BetweenSubjects"

    @classmethod
    def parse(cls, text) -> "Design":
        if isinstance(text, cls):
            return text
        key = str(text).replace("_", "").replace("-", "").lower()
        if key in ("withinsubjectcrossover", "crossover", "within"):
            return cls.CROSSOVER
        if key in ("betweensubjects", "between"):
            return cls.BETWEEN
        raise ConfigError(f"unknown design {text!r}")


@dataclass(frozen=True)
class SimConfig:
    n_subjects: int = 97
    beta: float = 0.03
    task_difficulty: tuple = (1.0, 1.0)
    condition_effect: float = 1.27
    order_effect: float = 1.0
    ability_log_sd: float = 0.2
    error_log_sd: float = 0.3
    design: Design = Design.CROSSOVER
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "design", Design.parse(self.design))
        object.__setattr__(self, "task_difficulty", tuple(float(x) for x in self.task_difficulty))
        if int(self.n_subjects) != self.n_subjects or self.n_subjects < 2:
            raise ConfigError("n_subjects must be an integer >= 2")
        if len(self.task_difficulty) != 2:
            raise ConfigError("task_difficulty needs exactly two values")
        positive = {
            "beta": self.beta,
            "condition_effect": self.condition_effect,
            "order_effect": self.order_effect,
            "task_difficulty[0]": self.task_difficulty[0],
            "task_difficulty[1]": self.task_difficulty[1],
        }
        for name, v in positive.items():
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v}")
        for name in ("ability_log_sd", "error_log_sd"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be non-negative, got {v}")
        if int(self.base_seed) != self.base_seed or self.base_seed < 0:
            raise ConfigError("base_seed must be a non-negative integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["design"] = self.design.value
        d["task_difficulty"] = list(self.task_difficulty)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_dict(json.loads(text))


def replicate_rng(base_seed: int, replicate: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(base_seed), spawn_key=(int(replicate),)))


def _cells(n: int, rng: np.random.Generator) -> np.ndarray:
    # even split over the four (first condition, first task) cells, shuffled
    return rng.permutation(np.arange(n) % 4)


def generate(config: SimConfig, replicate: int = 0) -> list[LongRecord]:
    """Simulate one experiment: two observations (tasks) per subject."""
    rng = replicate_rng(config.base_seed, replicate)
    n = config.n_subjects
    cells = _cells(n, rng)
    log_ability = rng.normal(0.0, 1.0, size=n) * config.ability_log_sd
    log_error = rng.normal(0.0, 1.0, size=(n, 2)) * config.error_log_sd
    width = len(str(n - 1))
    records = []
    for i in range(n):
        first_cond, first_task = divmod(int(cells[i]), 2)
        for pos in (0, 1):
            task = first_task if pos == 0 else 1 - first_task
            if config.design is Design.CROSSOVER:
                cond = first_cond if pos == 0 else 1 - first_cond
            else:
                cond = first_cond
            outcome = (
                config.beta
                * math.exp(log_ability[i])
                / config.task_difficulty[task]
                * config.condition_effect**cond
                * config.order_effect**pos
                * math.exp(log_error[i, pos])
            )
            records.append(LongRecord(f"s{i:0{width}d}", cond, task, pos, outcome))
    return records


@dataclass(frozen=True)
class RecoveryReport:
    estimator: str
    replicates: int
    failures: int
    truth: float
    mean_estimate: float
    bias: float
    rmse: float
    ci_coverage: float
    level: float = 0.95

    def to_dict(self) -> dict:
        return asdict(self)


def _estimate(records: list[LongRecord], config: SimConfig, estimator: str, level: float):
    if estimator in ("lmm", "ols"):
        fit = fit_lmm(records) if estimator == "lmm" else fit_ols(records)
        lo, hi = fit.condition_ratio_ci
        return fit.condition_ratio, lo, hi
    treated = {r.subject_id: r.outcome for r in records if r.condition == 1}
    control = {r.subject_id: r.outcome for r in records if r.condition == 0}
    if config.design is Design.CROSSOVER:
        ids = sorted(treated)
        num, den = paired_summaries([treated[k] for k in ids], [control[k] for k in ids])
        ci = ratio_ci(num, den, "recommended", "paired", level)
    else:
        # between subjects: each subject contributes the mean of their two tasks
        per_subj = {}
        for r in records:
            per_subj.setdefault((r.subject_id, r.condition), []).append(r.outcome)
        t = [np.mean(v) for (s, c), v in sorted(per_subj.items()) if c == 1]
        u = [np.mean(v) for (s, c), v in sorted(per_subj.items()) if c == 0]
        ci = ratio_ci(SampleSummary.from_data(t), SampleSummary.from_data(u), "recommended",
                      "independent", level)
    return ci.estimate, ci.lower, ci.upper


def _run_one(args):
    config, estimator, rep, level = args
    try:
        return rep, _estimate(generate(config, rep), config, estimator, level)
    except (SynergyError, np.linalg.LinAlgError, FloatingPointError):
        return rep, None


def recovery_study(
    config: SimConfig,
    estimator: str = "lmm",
    n_reps: int = 100,
    level: float = 0.95,
    workers: Optional[int] = 1,
) -> RecoveryReport:
    """Fit ``estimator`` on ``n_reps`` simulated experiments and score it against ``f``.

    Failed replicates are counted in ``failures`` and excluded from the
    aggregates. Aggregation uses exact (``math.fsum``) summation in replicate
    order, so the report does not depend on ``workers``.
    """
    if estimator not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    if n_reps < 1:
        raise ConfigError("n_reps must be >= 1")
    jobs = [(config, estimator, k, level) for k in range(n_reps)]
    if workers is None or workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, n_reps // 64)))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda t: t[0])

    truth = float(config.condition_effect)
    ok = [r for _, r in results if r is not None]
    failures = n_reps - len(ok)
    if not ok:
        nan = math.nan
        return RecoveryReport(estimator, n_reps, failures, truth, nan, nan, nan, nan, level)
    est = [e for e, _, _ in ok]
    mean = math.fsum(est) / len(est)
    rmse = math.sqrt(math.fsum((e - truth) ** 2 for e in est) / len(est))
    # a noise-free fit gives a zero-width interval at the truth up to rounding
    tol = 1e-9 * abs(truth)
    covered = sum(1 for _, lo, hi in ok if lo - tol <= truth <= hi + tol)
    return RecoveryReport(
        estimator=estimator,
        replicates=n_reps,
        failures=failures,
        truth=truth,
        mean_estimate=mean,
        bias=mean - truth,
        rmse=rmse,
        ci_coverage=covered / len(ok),
        level=level,
    )


def with_seed(config: SimConfig, seed: int) -> SimConfig:
    return replace(config, base_seed=seed)
