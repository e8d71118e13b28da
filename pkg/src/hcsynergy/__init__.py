"""Ratio-of-means tools for measuring human-computer synergy.

The public surface is re-exported here; see the submodules for details.
"""

from .cost import CostParams, CostRecord, per_call_cost, subject_cost, to_cents
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    RankError,
    SynergyError,
    UnboundedInterval,
    UndefinedRatio,
)
from .inference import (
    RatioCI,
    SampleSummary,
    accuracy_check,
    paired_summaries,
    proportion_test,
    proportion_z,
    ratio_ci,
)
from .metrics import (
    Direction,
    MetricSpec,
    PerformanceTriple,
    RatioResult,
    compute_rho,
    compute_rho_hat,
    is_synergy,
    transform_lower,
    transform_pipeline,
    transform_upper,
)
from .regression import LongRecord, RegressionFit, filter_successful, fit_lmm, fit_ols
from .review import (
    StudyRecord,
    Verdict,
    audit,
    audit_row,
    load_dataset,
    subset_by_direction,
    subset_top_per_study,
    summarize,
)
from .simulate import Design, RecoveryReport, SimConfig, generate, recovery_study

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
