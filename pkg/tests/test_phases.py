import math

import numpy as np
import pytest

from rcquad.measure import ModelParams
from rcquad.phases import (CONTCRIT, DISCONTCRIT, SUBCRIT, SUPCRIT, UNDECIDED,
                           _decay_fit, _drift_fit, box_crossing_check, classify,
                           one_arm_scan, pc_scan)
from rcquad.sampler import Schedule

QUICK = Schedule(burn_in=50, sweeps=1500, thin=1, chains=1, seed=3)


def test_decay_fit_clean_exponential():
    ns = [4, 8, 12, 16]
    means = [math.exp(-0.5 * n) for n in ns]
    fit = _decay_fit(ns, means, [m * 0.01 for m in means])
    assert fit.decays and fit.slope < 0 and fit.r2 > 0.99


def test_decay_fit_flat_rejected():
    ns = [4, 8, 12, 16]
    fit = _decay_fit(ns, [0.4] * 4, [0.01] * 4)
    assert not fit.decays


def test_decay_fit_all_below_threshold():
    fit = _decay_fit([4, 8, 12, 16], [0.001, 0.0, 0.0, 0.0], [0.001] * 4)
    assert fit.decays


def test_decay_fit_two_point_halving_with_censored_tail():
    fit = _decay_fit([4, 8, 12, 16], [0.02, 0.004, 0.0, 0.0], [0.002] * 4)
    assert fit.decays


def test_decay_fit_noisy_rejected():
    ns = [4, 8, 12, 16]
    means = [0.04, 0.002, 0.03, 0.001]  # non-monotone mess
    fit = _decay_fit(ns, means, [m * 0.05 for m in means])
    assert not fit.decays


def test_drift_fit():
    ok, _, _ = _drift_fit([4, 8, 12, 16], [0.5, 0.51, 0.49, 0.5], [0.02] * 4)
    assert ok
    bad, _, _ = _drift_fit([4, 8, 12, 16], [0.5, 0.42, 0.34, 0.26], [0.005] * 4)
    assert not bad


def test_classify_needs_four_points():
    with pytest.raises(ValueError):
        classify(ModelParams(0.5, 1.0), (4, 8, 16), QUICK)


def test_classify_degenerate_p():
    v1 = classify(ModelParams(1.0, 2.0), (2, 3, 4, 5), QUICK)
    assert v1.verdict == SUPCRIT
    v0 = classify(ModelParams(0.0, 2.0), (2, 3, 4, 5), QUICK)
    assert v0.verdict == SUBCRIT


def test_classify_subcritical_q1():
    sch = Schedule(burn_in=100, sweeps=2000, thin=1, chains=2, seed=5)
    v = classify(ModelParams(0.25, 1.0), (4, 8, 12, 16), sch)
    assert v.verdict == SUBCRIT
    v2 = classify(ModelParams(0.75, 1.0), (4, 8, 12, 16), sch)
    assert v2.verdict == SUPCRIT


def test_box_crossing_p1_fails_band():
    rep = box_crossing_check(ModelParams(1.0, 2.0), 1, [4, 8], QUICK)
    assert not rep.passed
    assert rep.max_est == 1.0


def test_box_crossing_rho_validation():
    with pytest.raises(ValueError):
        box_crossing_check(ModelParams(0.5, 1.0), 5, [4, 8], QUICK)


def test_one_arm_p1_slope_zero():
    rep = one_arm_scan(ModelParams(1.0, 2.0), [2, 4, 8], QUICK)
    assert all(r["mean"] == 1.0 for r in rep.rows)
    assert rep.loglog_slope == 0.0


def test_one_arm_subcritical_prefers_exponential():
    sch = Schedule(burn_in=100, sweeps=8000, thin=1, chains=2, seed=31)
    rep = one_arm_scan(ModelParams(0.25, 1.0), [2, 4, 6, 8], sch)
    assert rep.preferred == "exponential"
    assert rep.loglog_slope < 0


def test_pc_scan_validation():
    with pytest.raises(ValueError):
        pc_scan(0.5, 0.05, 4, QUICK)


def test_verdict_json_shape():
    v = classify(ModelParams(1.0, 2.0), (2, 3, 4, 5), QUICK)
    js = v.as_json()
    assert js["verdict"] == SUPCRIT
    assert len(js["phi_free"]) == 4
    assert "thresholds" in js
