import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hcsynergy.errors import ConfigError, DomainError, UndefinedRatio
from hcsynergy.metrics import (
    Direction,
    MetricSpec,
    PerformanceTriple,
    compute_rho,
    compute_rho_hat,
    inverse_upper,
    is_synergy,
    transform_lower,
    transform_pipeline,
    transform_upper,
)

UNIT = MetricSpec("pct", Direction.HIGHER_BETTER, 0.0, 1.0)
STEPS = MetricSpec("steps", Direction.LOWER_BETTER, 0.0)
OPEN = MetricSpec("quality", Direction.HIGHER_BETTER, 0.0)

unit_open = st.floats(min_value=1e-6, max_value=1 - 1e-6)


# --- metric validation -------------------------------------------------------


def test_metric_spec_rejects_inverted_bounds():
    with pytest.raises(ConfigError):
        MetricSpec("x", "HigherBetter", 1.0, 1.0)


def test_metric_spec_rejects_lower_better_with_ceiling():
    with pytest.raises(ConfigError):
        MetricSpec("x", "LowerBetter", 0.0, 10.0)


def test_metric_spec_rejects_infinite_floor():
    with pytest.raises(ConfigError):
        MetricSpec("x", "HigherBetter", -math.inf)


def test_direction_parse_aliases():
    assert Direction.parse("lower") is Direction.LOWER_BETTER
    assert Direction.parse("Higher_Better") is Direction.HIGHER_BETTER
    with pytest.raises(ConfigError):
        Direction.parse("sideways")


# --- lower-bound transform ----------------------------------------------------


def test_transform_lower_examples():
    assert transform_lower(2.0, STEPS) == 0.5
    # oracle: 1/34 computed exactly
    assert transform_lower(34.0, STEPS) == pytest.approx(float(Fraction(1, 34)), abs=5e-7)
    assert round(transform_lower(34.0, STEPS), 6) == 0.029412


def test_transform_lower_at_floor_raises():
    with pytest.raises(DomainError):
        transform_lower(1.0, MetricSpec("t", "LowerBetter", 1.0))


@given(st.floats(0.01, 1e6), st.floats(0.01, 1e6))
def test_transform_lower_strictly_decreasing(a, b):
    if a != b:
        assert (a > b) == (transform_lower(a, STEPS) < transform_lower(b, STEPS))


# --- upper-bound transform ----------------------------------------------------


def test_transform_upper_examples():
    assert transform_upper(0.0, UNIT) == 0.0
    assert transform_upper(0.60, UNIT) == pytest.approx(1.5, rel=1e-15)
    # oracle: 51/49 as an exact fraction
    assert transform_upper(0.51, UNIT) == pytest.approx(float(Fraction(51, 49)), rel=1e-14)
    assert round(transform_upper(0.51, UNIT), 6) == 1.040816


def test_transform_upper_ceiling_and_outside_raise():
    for x in (1.0, 1.2, -0.1):
        with pytest.raises(DomainError):
            transform_upper(x, UNIT)
    with pytest.raises(DomainError):
        transform_upper(0.5, OPEN)


def test_transform_upper_rescales_nonunit_bounds():
    spec = MetricSpec("q", "HigherBetter", 1.0, 5.0)
    # (3-1)/(5-1) = 0.5 -> odds 1
    assert transform_upper(3.0, spec) == pytest.approx(1.0)
    assert transform_upper(1.0, spec) == 0.0


def test_pipeline_examples():
    assert transform_pipeline(0.78, UNIT) == pytest.approx(float(Fraction(78, 22)), rel=1e-14)
    assert round(transform_pipeline(0.78, UNIT), 6) == 3.545455
    assert round(transform_pipeline(38.37, STEPS), 6) == 0.026062
    assert transform_pipeline(3.74, OPEN) == 3.74
    assert transform_pipeline(0.78, UNIT, upper=False) == 0.78


# --- ratios -------------------------------------------------------------------


def test_compute_rho_examples():
    assert round(compute_rho(0.032, 0.027), 3) == 1.185
    assert compute_rho(0.7, 0.7) == 1.0
    assert compute_rho(0.030, 0.0) == math.inf
    with pytest.raises(UndefinedRatio):
        compute_rho(0.0, 0.0)
    with pytest.raises(DomainError):
        compute_rho(-1.0, 2.0)


def test_rho_hat_untransformed_first_row():
    r = compute_rho_hat(PerformanceTriple(0.57, 0.50, 0.78, UNIT), transformed=False)
    assert r.rho_hat == pytest.approx(78 / 57, rel=1e-14)
    assert round(r.rho_hat, 4) == 1.3684
    assert r.rho_hat_prime is None
    assert r.baseline_label == "H"


def test_rho_hat_prime_holstein_row():
    r = compute_rho_hat(PerformanceTriple(0.35, 0.51, 0.60, UNIT))
    # oracle: (60/40) / (51/49) exactly
    expected = Fraction(60, 40) / Fraction(51, 49)
    assert r.rho_hat_prime == pytest.approx(float(expected), rel=1e-14)
    assert round(r.rho_hat_prime, 4) == 1.4412
    assert r.baseline_label == "C"


def test_rho_hat_equal_triple_is_one():
    r = compute_rho_hat(PerformanceTriple(0.4, 0.4, 0.4, UNIT))
    assert r.rho_hat == 1.0 and r.rho_hat_prime == 1.0
    assert not is_synergy(r.rho_hat)


def test_rho_hat_lower_better_uses_reciprocals():
    r = compute_rho_hat(PerformanceTriple(37.82, 34.0, 38.37, STEPS))
    assert r.rho == pytest.approx(38.37 / 37.82)
    assert r.rho_hat == pytest.approx(34.0 / 38.37)
    assert r.rho_hat_prime == r.rho_hat
    assert r.baseline_label == "C"  # 34 steps is the better baseline


def test_rho_hat_prime_not_applicable_without_ceiling():
    r = compute_rho_hat(PerformanceTriple(3.1, 2.5, 3.74, OPEN))
    assert r.rho_hat_prime is None
    assert r.to_dict()["rho_hat_prime"] == "n/a"


def test_impossible_baselines_give_infinity():
    spec = MetricSpec("speed", "HigherBetter", 0.0)
    t = PerformanceTriple(0.0, 0.0, 0.030, spec, h_impossible=True, c_impossible=True)
    r = compute_rho_hat(t)
    assert r.rho_hat == math.inf
    assert r.to_dict()["rho_hat"] == "inf"


def test_all_zero_triple_undefined():
    with pytest.raises(UndefinedRatio):
        compute_rho_hat(PerformanceTriple(0.0, 0.0, 0.0, OPEN))


def test_triple_outside_bounds_rejected():
    with pytest.raises(DomainError):
        PerformanceTriple(0.5, 0.5, 1.05, UNIT)


# --- properties ---------------------------------------------------------------


@given(unit_open, unit_open)
def test_extremization_law(x, y):
    rho = x / y
    rho_p = transform_upper(x, UNIT) / transform_upper(y, UNIT)
    # exact rational oracle for the sign
    fx, fy = Fraction(x), Fraction(y)
    exact = (fx / (1 - fx)) / (fy / (1 - fy)) - fx / fy
    assert (exact > 0) == (x > y) and (exact < 0) == (x < y)
    assert rho_p / rho == pytest.approx((1 - y) / (1 - x), rel=1e-12)


@given(unit_open, unit_open, unit_open)
def test_argmax_invariance(h, c, hc):
    raw = compute_rho_hat(PerformanceTriple(h, c, hc, UNIT), transformed=False)
    tr = compute_rho_hat(PerformanceTriple(h, c, hc, UNIT))
    assert raw.baseline_label == tr.baseline_label


@given(st.floats(0.0, 1 - 1e-9))
def test_odds_round_trip(x):
    t = transform_upper(x, UNIT)
    assert t / (1 + t) == pytest.approx(x, abs=1e-12)
    assert inverse_upper(t, UNIT) == pytest.approx(x, abs=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_rho_scale_invariance(a, b, c):
    assert compute_rho(c * a, c * b) == pytest.approx(compute_rho(a, b), rel=1e-12)


@given(unit_open, unit_open, unit_open, st.floats(0.1, 100.0))
def test_rho_hat_prime_joint_scale_invariance(h, c, hc, k):
    base = compute_rho_hat(PerformanceTriple(h, c, hc, UNIT))
    scaled_spec = MetricSpec("pct", "HigherBetter", 0.0, k)
    scaled = compute_rho_hat(PerformanceTriple(h * k, c * k, hc * k, scaled_spec))
    assert scaled.rho_hat_prime == pytest.approx(base.rho_hat_prime, rel=1e-9)


@given(st.floats(-10, 10), st.floats(0.1, 10), unit_open, unit_open)
def test_upper_transform_order_preserving(lo, width, a, b):
    spec = MetricSpec("m", "HigherBetter", lo, lo + width)
    xa, xb = lo + a * width, lo + b * width
    if xa != xb and xa < spec.upper_bound and xb < spec.upper_bound:
        assert (xa > xb) == (transform_upper(xa, spec) > transform_upper(xb, spec))


def test_extremization_bulk_10k():
    rng = np.random.default_rng(7)
    x, y = rng.uniform(1e-9, 1 - 1e-9, size=(2, 10_000))
    tx, ty = x / (1 - x), y / (1 - y)
    rho, rho_p = x / y, tx / ty
    assert np.all(np.sign(rho_p - rho) == np.sign(x - y))
    np.testing.assert_allclose(rho_p / rho, (1 - y) / (1 - x), rtol=1e-12)
