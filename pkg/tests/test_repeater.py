from __future__ import annotations

import math

import numpy as np
import pytest

from catcbsm.core import CodeParams, ParameterError
from catcbsm.montecarlo import EstimateSet, Interval, TrialTally, estimate
from catcbsm.repeater import (
    RepeaterGrid,
    RepeaterParams,
    binary_entropy,
    performance,
    point_seed,
    station_loss,
    sweep,
)


def make_est(p_i, p_x, p_y, p_z, p_fail, c=10.0, n=10**7) -> EstimateSet:
    ps = [p_i, p_x, p_y, p_z, p_fail]
    cov = np.zeros((6, 6))
    cov[:5, :5] = (np.diag(ps) - np.outer(ps, ps)) / n
    return EstimateSet(*(Interval(p, 0.0) for p in ps), c_exp=Interval(c, 0.0), n_trials=n, cov=cov)


def test_station_loss():
    l = station_loss(RepeaterParams(1000, 0.0, 0.99))
    assert l.eta1 == l.eta2 == 0.99
    assert station_loss(RepeaterParams(1000, 22, 1.0)).eta1 == pytest.approx(math.exp(-1))
    l = station_loss(RepeaterParams(1000, 0.7, 0.99))
    assert l.eta1 == pytest.approx(0.99 * math.exp(-0.7 / 22)) and l.eta2 == 0.99


def test_params_validation():
    with pytest.raises(ParameterError):
        RepeaterParams(10, 20, 0.9)
    with pytest.raises(ParameterError):
        RepeaterParams(10, 1, 1.5)


def test_binary_entropy():
    assert binary_entropy(0.0) == binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0


def test_perfect_station():
    perf = performance(make_est(1, 0, 0, 0, 0), RepeaterParams(1000, 1, 0.99))
    assert perf.P_s.value == 1.0 and perf.Q.value == 0.0 and perf.Rt0.value == 1.0
    assert perf.Q_tot.value == pytest.approx(10.0 * 1000)


def test_saturated_qber():
    perf = performance(make_est(0.25, 0.25, 0.25, 0.25, 0.0), RepeaterParams(100, 1, 0.99))
    assert perf.Q.value == 0.5 and perf.Rt0.value == 0.0 and perf.Q_tot.value == math.inf


def test_rt0_monotone():
    rp = RepeaterParams(1000, 1, 0.99)
    base = performance(make_est(0.97, 1e-5, 1e-6, 1e-5, 0.03 - 2.1e-5), rp).Rt0.value
    for k in range(1, 5):
        ps = [0.97, 1e-5, 1e-6, 1e-5, 0.03 - 2.1e-5]
        ps[k] += 1e-5
        ps[0] -= 1e-5
        assert performance(make_est(*ps), rp).Rt0.value <= base


def test_depends_on_ratio_only():
    est = make_est(0.99, 1e-5, 1e-6, 2e-5, 0.01 - 3.1e-5)
    a = performance(est, RepeaterParams(1000, 1, 0.99))
    b = performance(est, RepeaterParams(2000, 2, 0.99))
    assert a.Rt0.value == pytest.approx(b.Rt0.value, rel=1e-14)
    assert a.Q_tot.value == pytest.approx(b.Q_tot.value, rel=1e-14)


def test_qx_equals_qz_when_px_equals_pz():
    perf = performance(make_est(0.99, 3e-5, 1e-6, 3e-5, 0.01 - 6.1e-5), RepeaterParams(500, 1, 0.99))
    assert perf.Q_x.value == pytest.approx(perf.Q_z.value, rel=1e-14)


def test_delta_method_ci_positive():
    t = TrialTally(counts=(99000, 10, 1, 40, 949), cost_half_by_cat=(990000, 100, 10, 400, 9490), cost_sq_quarter=4 * 101000 * 25, n_trials=100000)
    est = estimate(t)
    perf = performance(est, RepeaterParams(100, 1, 0.99))
    assert 0 < perf.Rt0.value < 1
    assert perf.Rt0.ci > 0 and perf.Q_tot.ci > 0


def test_point_seed_stable():
    assert point_seed(1, 0) == point_seed(1, 0) != point_seed(1, 1)


def test_empty_grid():
    with pytest.raises(ParameterError):
        RepeaterGrid([], [3], [1.9], [1], [0.7]).points()


def test_sweep_single_point_and_error_rows():
    grid = RepeaterGrid([1, 3], [3], [1.6], [1, 3], [1.0])
    res = sweep(grid, 100.0, 0.99, 2000, seed=3)
    assert len(res.rows) == 4
    bad = [r for r in res.rows if r["status"] != "ok"]
    assert len(bad) == 1 and bad[0]["n"] == 1 and bad[0]["j"] == 3
    rec = res.optimum_record()
    assert rec["min_Q_tot"]["status"] == "ok"
    one = sweep(RepeaterGrid([3], [3], [1.6], [1], [1.0]), 100.0, 0.99, 2000, seed=3)
    assert one.best_q_tot == 0 and one.best_rt0 == 0
