import json
import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from hcsynergy.errors import ConfigError
from hcsynergy.regression import fit_lmm
from hcsynergy.simulate import Design, SimConfig, generate, recovery_study, with_seed


def test_noise_free_outcomes_follow_product_formula():
    cfg = SimConfig(n_subjects=9, beta=0.05, task_difficulty=(1.0, 2.5), condition_effect=1.6,
                    order_effect=0.8, ability_log_sd=0.0, error_log_sd=0.0, base_seed=4)
    for r in generate(cfg):
        d = cfg.task_difficulty[r.task]
        expected = cfg.beta / d * cfg.condition_effect**r.condition * cfg.order_effect**r.order
        assert r.outcome == pytest.approx(expected, rel=1e-15)


def test_same_seed_bit_identical_and_replicates_differ():
    cfg = SimConfig(n_subjects=20, base_seed=99)
    assert generate(cfg) == generate(cfg)
    assert generate(cfg, 1) != generate(cfg, 0)
    assert generate(with_seed(cfg, 100)) != generate(cfg)


@pytest.mark.parametrize("n", [4, 7, 97])
def test_crossover_counterbalanced(n):
    recs = generate(SimConfig(n_subjects=n, base_seed=1))
    assert len(recs) == 2 * n
    by_subject = {}
    for r in recs:
        by_subject.setdefault(r.subject_id, []).append(r)
    cells = Counter()
    for rows in by_subject.values():
        first, second = sorted(rows, key=lambda r: r.order)
        assert (first.order, second.order) == (0, 1)
        assert {first.condition, second.condition} == {0, 1}
        assert {first.task, second.task} == {0, 1}
        cells[(first.condition, first.task)] += 1
    assert len(cells) == min(n, 4)
    assert max(cells.values()) - min(cells.values()) <= 1


def test_between_subjects_single_condition():
    recs = generate(SimConfig(n_subjects=12, design="between", base_seed=2))
    conds = {}
    for r in recs:
        conds.setdefault(r.subject_id, set()).add(r.condition)
    assert all(len(c) == 1 for c in conds.values())
    assert Counter(next(iter(c)) for c in conds.values()) == {0: 6, 1: 6}


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.floats(1e-3, 10), st.floats(0.0, 2.0), st.floats(0.0, 2.0),
       st.integers(0, 2**32))
def test_outcomes_strictly_positive(n, beta, a_sd, e_sd, seed):
    cfg = SimConfig(n_subjects=n, beta=beta, ability_log_sd=a_sd, error_log_sd=e_sd, base_seed=seed)
    assert all(r.outcome > 0 for r in generate(cfg))


def test_beta_scaling():
    a = generate(SimConfig(n_subjects=16, beta=0.03, base_seed=8))
    b = generate(SimConfig(n_subjects=16, beta=0.09, base_seed=8))
    for ra, rb in zip(a, b):
        assert rb.outcome == pytest.approx(3 * ra.outcome, rel=1e-14)
    assert fit_lmm(b).condition_ratio == pytest.approx(fit_lmm(a).condition_ratio, rel=1e-9)


def test_config_validation():
    for bad in (dict(n_subjects=1), dict(beta=0), dict(condition_effect=-1.0),
                dict(task_difficulty=(1.0,)), dict(error_log_sd=-0.1), dict(base_seed=-1),
                dict(design="latin-square")):
        with pytest.raises(ConfigError):
            SimConfig(**bad)
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"n_subject": 10})


def test_config_json_round_trip():
    cfg = SimConfig(n_subjects=30, design=Design.BETWEEN, base_seed=5)
    again = SimConfig.from_json(json.dumps(cfg.to_dict()))
    assert again == cfg


# --- recovery --------------------------------------------------------------------


@pytest.mark.parametrize("estimator", ["lmm", "ols", "ratio_of_means"])
def test_noise_free_recovery_is_exact(estimator):
    cfg = SimConfig(n_subjects=20, error_log_sd=0.0, base_seed=3)
    rep = recovery_study(cfg, estimator, n_reps=5)
    assert rep.failures == 0
    assert rep.bias == pytest.approx(0.0, abs=1e-12)
    assert rep.rmse == pytest.approx(0.0, abs=1e-12)
    assert rep.ci_coverage == 1.0


def test_single_replicate_coverage_is_binary():
    rep = recovery_study(SimConfig(n_subjects=30), "lmm", n_reps=1)
    assert rep.replicates == 1 and rep.ci_coverage in (0.0, 1.0)


def test_failures_counted_not_fatal():
    # with two subjects condition and order coincide, so every fit is rank deficient
    rep = recovery_study(SimConfig(n_subjects=2), "lmm", n_reps=3)
    assert rep.failures == 3 and math.isnan(rep.mean_estimate)


def test_between_design_ratio_of_means():
    rep = recovery_study(SimConfig(n_subjects=60, design="between"), "ratio_of_means", n_reps=40)
    assert rep.failures == 0 and 0 <= rep.ci_coverage <= 1
    assert abs(rep.bias) < 0.1


def test_worker_count_does_not_change_report():
    cfg = SimConfig(n_subjects=30, base_seed=12)
    assert recovery_study(cfg, "lmm", 12, workers=1) == recovery_study(cfg, "lmm", 12, workers=3)


def test_bad_estimator_and_reps():
    with pytest.raises(ConfigError):
        recovery_study(SimConfig(), "bootstrap", 2)
    with pytest.raises(ConfigError):
        recovery_study(SimConfig(), "lmm", 0)
