import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hcsynergy.errors import DataError, DomainError
from hcsynergy.metrics import Direction, MetricSpec
from hcsynergy.review import (
    SELECTIONS,
    StudyRecord,
    Verdict,
    audit,
    audit_row,
    bundled_path,
    dump_dataset,
    histogram,
    histogram_tsv,
    load_dataset,
    ratio_values,
    subset_by_direction,
    subset_top_per_study,
    summarize,
)

HEADER = ("study_id,task,measure,direction,lower_bound,upper_bound,x_h,x_c,x_hc,"
          "published_rho_hat,published_rho_hat_prime,anomaly_flag\n")
UNIT = MetricSpec("Accuracy", Direction.HIGHER_BETTER, 0.0, 1.0)


def _rec(x_h, x_c, x_hc, rho=None, prime=None, metric=UNIT, study="s"):
    return StudyRecord(study, "t", metric.name, metric, x_h, x_c, x_hc, rho, prime)


def _odds(x):
    return x / (1 - x)


# --- loading ---------------------------------------------------------------------


def test_bundled_dataset_has_79_rows(bundled_records):
    assert len(bundled_records) == 79
    assert bundled_path().name == "review_table.csv"


def test_header_only_file_is_empty(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text(HEADER)
    assert load_dataset(p) == []


def test_out_of_bound_row_rejected(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(HEADER + "a,t,Accuracy,HigherBetter,0,1,0.5,0.5,1.05,1.2,,\n")
    with pytest.raises(DataError, match="row 2"):
        load_dataset(p)


@pytest.mark.parametrize(
    "line",
    [
        "a,t,Accuracy,Sideways,0,1,0.5,0.5,0.6,1.2,,",
        "a,t,Accuracy,HigherBetter,0,1,0.5,zero,0.6,1.2,,",
        "a,t,Accuracy,HigherBetter,0,1,0.5,0.5,0.6,-1,,",
        "a,t,Accuracy,HigherBetter,0,1,0.5",
        ",t,Accuracy,HigherBetter,0,1,0.5,0.5,0.6,1.2,,",
    ],
)
def test_schema_violations_are_row_addressed(tmp_path, line):
    p = tmp_path / "bad.csv"
    p.write_text(HEADER + "a,t,Accuracy,HigherBetter,0,1,0.5,0.5,0.6,1.2,1.5,\n" + line + "\n")
    with pytest.raises(DataError, match="row 3"):
        load_dataset(p)


def test_missing_columns_and_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("study_id,task\n")
    with pytest.raises(DataError, match="row 1"):
        load_dataset(p)
    with pytest.raises(DataError):
        load_dataset(tmp_path / "nope.csv")


def test_dump_load_round_trip_is_byte_identical(bundled_records):
    text = dump_dataset(bundled_records)
    assert text == bundled_path().read_text(encoding="utf-8")
    buf = io.StringIO()
    dump_dataset(bundled_records, buf)
    assert buf.getvalue() == text


def test_rounding_precision_recorded(bundled_records):
    first = bundled_records[0]
    assert first.half_width(0) == pytest.approx(0.005)
    steps = next(r for r in bundled_records if r.measure == "Steps")
    assert steps.decimals[:3] == (2, 0, 2)
    assert steps.half_width(1) == 0.5


# --- audit -----------------------------------------------------------------------


def test_gonzalez_interval_oracle(bundled_records):
    rep = audit_row(bundled_records[0])
    lo, hi = rep.rho_hat_prime.interval
    # oracle: dense scan of the +-0.005 box
    g = np.linspace(-0.005, 0.005, 41)
    vals = [_odds(0.78 + c) / _odds(max(0.57 + a, 0.50 + b)) for a, b, c in itertools.product(g, g, g)]
    assert lo == pytest.approx(min(vals), abs=1e-12)
    assert hi == pytest.approx(max(vals), abs=1e-12)
    assert round(lo, 3) == 2.546 and round(hi, 3) == 2.811
    assert rep.rho_hat_prime.verdict is Verdict.CONSISTENT
    assert rep.verdict is Verdict.CONSISTENT


def test_holstein_point_recomputation():
    rep = audit_row(_rec(0.35, 0.51, 0.60, 1.18, 1.44))
    assert rep.rho_hat_prime.point == pytest.approx(1.5 / (51 / 49), rel=1e-12)
    assert rep.verdict is Verdict.CONSISTENT


def test_steps_row_anomalous():
    steps = MetricSpec("Steps", Direction.LOWER_BETTER, 0.0)
    rec = StudyRecord("b", "kitchen", "Steps", steps, 37.82, 34.0, 38.37, 1.01, 0.89,
                      decimals=(2, 0, 2, 2, 2))
    rep = audit_row(rec)
    assert rep.rho_hat.point == pytest.approx(34 / 38.37, rel=1e-12)
    assert rep.rho_hat.verdict is Verdict.ANOMALOUS
    assert rep.rho_hat_prime.verdict is Verdict.CONSISTENT
    assert rep.verdict is Verdict.ANOMALOUS


def test_no_ceiling_gives_not_applicable():
    open_metric = MetricSpec("Quality", Direction.HIGHER_BETTER, 0.0)
    rep = audit_row(_rec(3.1, 2.5, 3.74, 1.21, 1.5, metric=open_metric))
    assert rep.rho_hat_prime.verdict is Verdict.NOT_APPLICABLE
    assert rep.verdict is Verdict.CONSISTENT


def test_slack_is_half_a_printed_unit():
    # interval max is 0.785 / 0.565 = 1.38938; slack admits up to 1.39438
    rep = audit_row(_rec(0.57, 0.50, 0.78, 1.39))
    assert rep.rho_hat.interval[1] == pytest.approx(0.785 / 0.565, rel=1e-12)
    assert rep.rho_hat.verdict is Verdict.CONSISTENT
    assert audit_row(_rec(0.57, 0.50, 0.78, 1.40)).rho_hat.verdict is Verdict.ANOMALOUS


def test_bundled_audit_flags_curated_rows(bundled_records):
    reports = audit(bundled_records)
    bad = {r.index for r in reports if r.verdict is Verdict.ANOMALOUS}
    flagged = {i for i, r in enumerate(bundled_records) if r.anomaly_flag}
    assert bad == flagged


@given(st.floats(0.05, 0.9), st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_exact_published_values_always_consistent(h, c, hc):
    h, c, hc = (round(v, 2) for v in (h, c, hc))
    rho = round(hc / max(h, c), 2)
    prime = round(_odds(hc) / _odds(max(h, c)), 2)
    assert audit_row(_rec(h, c, hc, rho, prime)).verdict is Verdict.CONSISTENT


# --- summaries ----------------------------------------------------------------------


def test_summary_single_record():
    s = summarize([_rec(0.5, 0.4, 0.68, 1.36)])
    assert s.mean == s.median == 1.36
    assert s.synergy_fraction == 1.0


def test_summary_even_median_and_strict_synergy():
    s = summarize([_rec(0.5, 0.4, 0.25, 0.5), _rec(0.4, 0.4, 0.6, 1.5)])
    assert s.median == 1.0 and s.synergy_fraction == 0.5
    s = summarize([_rec(0.5, 0.5, 0.5, 1.0)])
    assert s.synergy_count == 0


def test_summary_empty_raises():
    with pytest.raises(DomainError):
        summarize([])
    with pytest.raises(DomainError):
        summarize([_rec(0.5, 0.5, 0.5)], "published_rho_hat")


def test_bundled_published_summary(bundled_records):
    s = summarize(bundled_records)
    assert s.n == 79
    assert round(s.mean, 2) == 0.96 and s.median == 0.99
    assert (s.min, s.max) == (0.44, 1.36)
    assert sum(c for _, _, c in s.histogram) == 79


def test_lower_selection_reads_primed_column_for_steps(bundled_records):
    steps = [r for r in bundled_records if r.metric.direction is Direction.LOWER_BETTER]
    assert ratio_values(steps, "published_rho_hat_lower") == [r.published_rho_hat_prime for r in steps]


def test_recomputed_prime_skips_rows_without_ceiling(bundled_records):
    vals = ratio_values(bundled_records, "recomputed_rho_hat_prime")
    no_ceiling = sum(1 for r in bundled_records
                     if r.metric.direction is Direction.HIGHER_BETTER and r.metric.upper_bound is None)
    assert len(vals) == 79 - no_ceiling


def test_unknown_selection():
    with pytest.raises(Exception):
        ratio_values([], "nonsense")
    assert set(SELECTIONS) >= {"published_rho_hat", "recomputed_rho_hat", "recomputed_rho_hat_prime"}


def test_histogram_edges():
    h = histogram([1.0, 1.0, 0.95, 1.04])
    assert h == [(0.95, 1.0, 1), (1.0, 1.05, 3)]
    assert histogram_tsv(h) == "bin_mid\tcount\n0.975\t1\n1.025\t3\n"
    with pytest.raises(DomainError):
        histogram([1.0], 0.0)
    with pytest.raises(DomainError):
        histogram([math.inf])


@given(st.lists(st.floats(0.01, 5.0), min_size=1, max_size=200), st.sampled_from([0.01, 0.05, 0.1, 0.25]))
def test_histogram_conserves_counts(values, width):
    h = histogram(values, width)
    assert sum(c for _, _, c in h) == len(values)
    for (a, b, _), (c, _, _) in zip(h, h[1:]):
        assert b == c


# --- subsets ---------------------------------------------------------------------


def test_top_per_study_keeps_max_and_first_on_ties():
    recs = [
        _rec(0.5, 0.5, 0.5, 1.0, study="a"),
        _rec(0.5, 0.5, 0.6, 1.2, study="b"),
        _rec(0.5, 0.5, 0.6, 1.2, study="a"),
        _rec(0.5, 0.5, 0.55, 1.1, study="b"),
        _rec(0.5, 0.5, 0.6, 1.2, study="a"),
    ]
    top = subset_top_per_study(recs)
    assert top == [recs[2], recs[1]]
    assert top[0] is recs[2]


def test_by_direction_counts(bundled_records):
    assert len(subset_by_direction(bundled_records, "lower")) == 4
    assert len(subset_by_direction(bundled_records, Direction.HIGHER_BETTER)) == 75
