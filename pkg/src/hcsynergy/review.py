"""Systematic-review records: loading, ratio audit and summary statistics.

The bundled table holds 79 published human/computer/team results. Each value
is stored as printed, and the number of printed decimals sets its rounding
half-width (``0.57`` means ``[0.565, 0.575]``). The audit recomputes the
synergy ratios over that box and checks the published ratios against it.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import statistics
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .errors import ConfigError, DataError, DomainError
from .metrics import Direction, MetricSpec, transform_pipeline

__all__ = [
    "StudyRecord",
    "Verdict",
    "AuditReport",
    "ReviewSummary",
    "COLUMNS",
    "SELECTIONS",
    "bundled_path",
    "load_dataset",
    "dump_dataset",
    "audit_row",
    "audit",
    "ratio_values",
    "summarize",
    "histogram",
    "histogram_tsv",
    "subset_top_per_study",
    "subset_by_direction",
]

COLUMNS = (
    "study_id",
    "task",
    "measure",
    "direction",
    "lower_bound",
    "upper_bound",
    "x_h",
    "x_c",
    "x_hc",
    "published_rho_hat",
    "published_rho_hat_prime",
    "anomaly_flag",
)


def _decimals(text: str) -> int:
    text = text.strip()
    return len(text.split(".", 1)[1]) if "." in text else 0


def _fmt(value: float, decimals: int) -> str:
    return f"{value:.{decimals}f}"


@dataclass(frozen=True)
class StudyRecord:
    """One experimental result from the review table.

    ``decimals`` holds the printed precision of ``(x_h, x_c, x_hc,
    published_rho_hat, published_rho_hat_prime)``.
    """

    study_id: str
    task: str
    measure: str
    metric: MetricSpec
    x_h: float
    x_c: float
    x_hc: float
    published_rho_hat: Optional[float] = None
    published_rho_hat_prime: Optional[float] = None
    anomaly_flag: Optional[str] = None
    decimals: tuple = field(default=(2, 2, 2, 2, 2), compare=True)

    def half_width(self, which: int) -> float:
        return 0.5 * 10.0 ** (-self.decimals[which])

    @property
    def values(self) -> tuple[float, float, float]:
        return self.x_h, self.x_c, self.x_hc


# ---------------------------------------------------------------------------
# io
# ---------------------------------------------------------------------------


def bundled_path() -> Path:
    return Path(str(resources.files("hcsynergy") / "data" / "review_table.csv"))


def _opt_float(text: str) -> Optional[float]:
    text = (text or "").strip()
    return float(text) if text else None


def _parse_row(row: dict, lineno: int) -> StudyRecord:
    try:
        metric = MetricSpec(
            name=row["measure"].strip(),
            direction=Direction.parse(row["direction"]),
            lower_bound=float(row["lower_bound"]) if row["lower_bound"].strip() else 0.0,
            upper_bound=_opt_float(row["upper_bound"]),
        )
        texts = [row[c].strip() for c in ("x_h", "x_c", "x_hc")]
        xs = [float(t) for t in texts]
        pub = [row[c] or "" for c in ("published_rho_hat", "published_rho_hat_prime")]
        decimals = tuple(_decimals(t) for t in texts) + tuple(_decimals(t) if t.strip() else 2 for t in pub)
        rec = StudyRecord(
            study_id=row["study_id"].strip(),
            task=row["task"].strip(),
            measure=row["measure"].strip(),
            metric=metric,
            x_h=xs[0],
            x_c=xs[1],
            x_hc=xs[2],
            published_rho_hat=_opt_float(pub[0]),
            published_rho_hat_prime=_opt_float(pub[1]),
            anomaly_flag=(row.get("anomaly_flag") or "").strip() or None,
            decimals=decimals,
        )
    except (ValueError, TypeError, AttributeError, ConfigError) as exc:
        raise DataError(str(exc), row=lineno) from None
    if not rec.study_id:
        raise DataError("empty study_id", row=lineno)
    for name, x in zip(("x_h", "x_c", "x_hc"), rec.values):
        if not math.isfinite(x) or not metric.contains(x):
            raise DataError(f"{name}={x} outside the bounds of metric {metric.name!r}", row=lineno)
    for name in ("published_rho_hat", "published_rho_hat_prime"):
        v = getattr(rec, name)
        if v is not None and not v > 0:
            raise DataError(f"{name} must be positive, got {v}", row=lineno)
    return rec


def load_dataset(path=None) -> list[StudyRecord]:
    """Load and validate a review table (the bundled one by default)."""
    path = bundled_path() if path is None else Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataError("empty file, expected a header", row=1)
        missing = [c for c in COLUMNS if c != "anomaly_flag" and c not in header]
        if missing:
            raise DataError(f"missing columns {missing}", row=1)
        records = []
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(row.get(c) is None for c in COLUMNS if c != "anomaly_flag"):
                raise DataError("wrong number of fields", row=lineno)
            records.append(_parse_row(row, lineno))
    return records


def dump_dataset(records: Iterable[StudyRecord], path_or_file=None) -> Optional[str]:
    """Write records in the bundled CSV schema, preserving printed precision.

    Returns the CSV text when no destination is given.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        m = r.metric
        w.writerow(
            [
                r.study_id,
                r.task,
                r.measure,
                m.direction.value,
                f"{m.lower_bound:g}",
                "" if m.upper_bound is None else f"{m.upper_bound:g}",
                _fmt(r.x_h, r.decimals[0]),
                _fmt(r.x_c, r.decimals[1]),
                _fmt(r.x_hc, r.decimals[2]),
                "" if r.published_rho_hat is None else _fmt(r.published_rho_hat, r.decimals[3]),
                ""
                if r.published_rho_hat_prime is None
                else _fmt(r.published_rho_hat_prime, r.decimals[4]),
                r.anomaly_flag or "",
            ]
        )
    text = buf.getvalue()
    if path_or_file is None:
        return text
    if isinstance(path_or_file, (str, Path)):
        Path(path_or_file).write_text(text, encoding="utf-8")
    else:
        path_or_file.write(text)
    return None


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------


class Verdict(str, enum.Enum):
    CONSISTENT = "CONSISTENT"
    ANOMALOUS = "ANOMALOUS"
    NOT_APPLICABLE = "NOT_APPLICABLE"


def _safe_transform(x: float, spec: MetricSpec, upper: bool) -> float:
    """Monotone transform extended to the closed domain (bounds map to 0 or inf)."""
    if spec.direction is Direction.LOWER_BETTER and x <= spec.lower_bound:
        return math.inf
    if upper and spec.upper_bound is not None and x >= spec.upper_bound:
        return math.inf
    return transform_pipeline(x, spec, upper=upper)


def _box(rec: StudyRecord, upper: bool) -> list[tuple[float, float]]:
    """Transformed interval of each of (x_h, x_c, x_hc) under input rounding."""
    spec = rec.metric
    out = []
    for i, x in enumerate(rec.values):
        h = rec.half_width(i)
        lo = max(x - h, spec.lower_bound)
        hi = x + h if spec.upper_bound is None else min(x + h, spec.upper_bound)
        a, b = _safe_transform(lo, spec, upper), _safe_transform(hi, spec, upper)
        out.append((min(a, b), max(a, b)))
    return out


def _div(a: float, b: float) -> float:
    if b == 0:
        return math.inf if a > 0 else 0.0
    return a / b


def _ratio_interval(box) -> tuple[float, float]:
    # team / max(human, computer) is increasing in the team value and
    # decreasing in each baseline, so the extremes sit at the box corners
    (hl, hh), (cl, ch), (tl, th) = box
    den_hi, den_lo = max(hh, ch), max(hl, cl)
    lo = 0.0 if math.isinf(den_hi) else _div(tl, den_hi)
    hi = math.inf if math.isinf(th) else _div(th, den_lo)
    return lo, hi


def _point(rec: StudyRecord, upper: bool) -> float:
    h, c, t = (transform_pipeline(x, rec.metric, upper=upper) for x in rec.values)
    d = max(h, c)
    return math.inf if d == 0 else t / d


@dataclass(frozen=True)
class RatioAudit:
    published: Optional[float]
    point: Optional[float]
    interval: Optional[tuple[float, float]]
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "published": self.published,
            "recomputed": self.point,
            "interval": None if self.interval is None else list(self.interval),
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class AuditReport:
    index: int
    study_id: str
    measure: str
    rho_hat: RatioAudit
    rho_hat_prime: RatioAudit

    @property
    def verdict(self) -> Verdict:
        if Verdict.ANOMALOUS in (self.rho_hat.verdict, self.rho_hat_prime.verdict):
            return Verdict.ANOMALOUS
        return Verdict.CONSISTENT

    def to_dict(self) -> dict:
        return {
            "row": self.index,
            "study_id": self.study_id,
            "measure": self.measure,
            "verdict": self.verdict.value,
            "rho_hat": self.rho_hat.to_dict(),
            "rho_hat_prime": self.rho_hat_prime.to_dict(),
        }


def _check(published, point, interval, slack) -> RatioAudit:
    if published is None or interval is None:
        return RatioAudit(published, point, interval, Verdict.NOT_APPLICABLE)
    ok = interval[0] - slack <= published <= interval[1] + slack
    return RatioAudit(published, point, interval, Verdict.CONSISTENT if ok else Verdict.ANOMALOUS)


def audit_row(rec: StudyRecord, index: int = 0) -> AuditReport:
    """Recompute both ratios over the rounding box and judge the published ones.

    A published value is CONSISTENT when it lies within the recomputed
    interval widened by half a unit of its own printed precision.
    ``rho_hat_prime`` is NOT_APPLICABLE for higher-is-better metrics without
    a known upper bound.
    """
    rh = _check(
        rec.published_rho_hat,
        _point(rec, upper=False),
        _ratio_interval(_box(rec, upper=False)),
        rec.half_width(3),
    )
    spec = rec.metric
    if spec.direction is Direction.HIGHER_BETTER and spec.upper_bound is None:
        rp = RatioAudit(rec.published_rho_hat_prime, None, None, Verdict.NOT_APPLICABLE)
    else:
        rp = _check(
            rec.published_rho_hat_prime,
            _point(rec, upper=True),
            _ratio_interval(_box(rec, upper=True)),
            rec.half_width(4),
        )
    return AuditReport(index, rec.study_id, rec.measure, rh, rp)


def audit(records: Sequence[StudyRecord]) -> list[AuditReport]:
    return [audit_row(r, i) for i, r in enumerate(records)]


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def _published_lower(rec: StudyRecord) -> Optional[float]:
    # for lower-is-better metrics no odds transform applies, so the printed
    # rho_hat_prime is the lower-bound-transformed rho_hat
    if rec.metric.direction is Direction.LOWER_BETTER:
        return rec.published_rho_hat_prime
    return rec.published_rho_hat


SELECTIONS: dict[str, Callable[[StudyRecord], Optional[float]]] = {
    "published_rho_hat": lambda r: r.published_rho_hat,
    "published_rho_hat_lower": _published_lower,
    "published_rho_hat_prime": lambda r: r.published_rho_hat_prime,
    "recomputed_rho_hat": lambda r: _point(r, upper=False),
    "recomputed_rho_hat_prime": lambda r: (
        None
        if r.metric.direction is Direction.HIGHER_BETTER and r.metric.upper_bound is None
        else _point(r, upper=True)
    ),
}


def ratio_values(records: Iterable[StudyRecord], which: str = "published_rho_hat") -> list[float]:
    """Ratios for the chosen column; rows where it is unavailable are skipped."""
    try:
        pick = SELECTIONS[which]
    except KeyError:
        raise ConfigError(f"unknown selection {which!r}; choose from {sorted(SELECTIONS)}") from None
    return [v for v in (pick(r) for r in records) if v is not None]


@dataclass(frozen=True)
class ReviewSummary:
    n: int
    mean: float
    median: float
    synergy_count: int
    synergy_fraction: float
    min: float
    max: float
    histogram: list

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "median": self.median,
            "synergy_count": self.synergy_count,
            "synergy_fraction": self.synergy_fraction,
            "min": self.min,
            "max": self.max,
            "histogram": [list(b) for b in self.histogram],
        }


def histogram(values: Sequence[float], bin_width: float = 0.05) -> list[tuple[float, float, int]]:
    """Counts in contiguous bins ``[k*w, (k+1)*w)`` covering the data."""
    if not bin_width > 0:
        raise DomainError("bin width must be positive")
    finite = [v for v in values if math.isfinite(v)]
    if len(finite) != len(values):
        raise DomainError("cannot bin infinite ratios")
    if not finite:
        return []
    # round before flooring so that 1.00 / 0.05 lands in bin 20, not 19
    idx = [math.floor(round(v / bin_width, 9)) for v in finite]
    lo, hi = min(idx), max(idx)
    counts = [0] * (hi - lo + 1)
    for k in idx:
        counts[k - lo] += 1
    return [
        (round(k * bin_width, 12), round((k + 1) * bin_width, 12), counts[k - lo])
        for k in range(lo, hi + 1)
    ]


def histogram_tsv(hist) -> str:
    lines = ["bin_mid\tcount"]
    lines += [f"{round(0.5 * (a + b), 12):g}\t{c}" for a, b, c in hist]
    return "\n".join(lines) + "\n"


def summarize(
    records: Iterable[StudyRecord], which: str = "published_rho_hat", bin_width: float = 0.05
) -> ReviewSummary:
    """Unweighted summary of one ratio column.

    ``published_rho_hat_lower`` uses the printed ratios with the lower-bound
    transform applied throughout (for lower-is-better rows that value is
    printed in the primed column).
    """
    vals = ratio_values(records, which)
    if not vals:
        raise DomainError("nothing to summarize")
    syn = sum(1 for v in vals if v > 1.0)
    finite = [v for v in vals if math.isfinite(v)]
    return ReviewSummary(
        n=len(vals),
        mean=math.fsum(vals) / len(vals),
        median=statistics.median(vals),
        synergy_count=syn,
        synergy_fraction=syn / len(vals),
        min=min(vals),
        max=max(vals),
        histogram=histogram(finite, bin_width) if len(finite) == len(vals) else [],
    )


def subset_top_per_study(
    records: Iterable[StudyRecord], which: str = "published_rho_hat"
) -> list[StudyRecord]:
    """One record per study: the one with the highest ratio (first wins ties)."""
    pick = SELECTIONS[which]
    best: dict[str, StudyRecord] = {}
    for r in records:
        v = pick(r)
        if v is None:
            continue
        cur = best.get(r.study_id)
        if cur is None or v > pick(cur):
            best[r.study_id] = r
    return list(best.values())


def subset_by_direction(records: Iterable[StudyRecord], direction) -> list[StudyRecord]:
    direction = direction if isinstance(direction, Direction) else Direction.parse(direction)
    return [r for r in records if r.metric.direction is direction]
