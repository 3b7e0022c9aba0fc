from __future__ import annotations

import itertools

import pytest

from catcbsm.core import BellState, Letter, LossParams, Sign
from catcbsm.physbsm import exact_physical_statistics, interpret_full, interpret_sign_only
from catcbsm.povm import build_povm_table


def test_table_examples():
    assert interpret_full(0, 2).bell() is BellState.PSI_PLUS
    assert interpret_full(1, 0).bell() is BellState.PHI_MINUS
    r = interpret_full(2, 2)
    assert r.failed and r.sign is Sign.PLUS


def test_sign_only():
    assert interpret_sign_only(0, 1).sign is Sign.MINUS and interpret_sign_only(0, 1).letter is None
    assert interpret_sign_only(2, 0).sign is Sign.PLUS
    for x, y in itertools.product(range(3), repeat=2):
        assert interpret_sign_only(x, y).sign is interpret_full(x, y).sign


@pytest.mark.parametrize("alpha", (0.5, 1.0, 1.6, 2.0))
@pytest.mark.parametrize("etas", ((0.8, 0.8), (0.95, 0.9), (0.99, 0.95), (1.0, 1.0), (0.9, 0.99)))
def test_map_consistency(alpha, etas):
    t = build_povm_table(alpha, LossParams(*etas))
    for x, y in itertools.product(range(3), repeat=2):
        probs = {b: t.diag(x, y, b) for b in BellState}
        best = max(probs.values())
        if best == 0.0:
            continue
        res = interpret_full(x, y)
        if x != y:
            assert probs[res.bell()] == pytest.approx(best, rel=1e-12)
        else:
            # failure: phi and psi of the detected sign tie
            s = res.sign
            phi, psi = BellState.from_parts(Letter.PHI, s), BellState.from_parts(Letter.PSI, s)
            assert probs[phi] == pytest.approx(probs[psi], rel=1e-12)
            assert probs[phi] == pytest.approx(best, rel=1e-12)


def test_exact_statistics_sum_to_one(asym_table):
    stats = exact_physical_statistics(asym_table)
    assert sum(stats.values()) == pytest.approx(1.0, abs=1e-12)
    assert stats["p_x"] <= 1e-4 and stats["p_y"] <= 1e-4


def test_lossless_no_errors():
    for alpha in (0.5, 1.0, 2.0):
        s = exact_physical_statistics(build_povm_table(alpha, LossParams(1.0, 1.0)))
        assert s["p_x"] == s["p_y"] == s["p_z"] == 0.0


def test_tradeoff_in_alpha():
    loss = LossParams(0.99, 0.99)
    stats = [exact_physical_statistics(build_povm_table(a, loss)) for a in (0.8, 1.2, 1.6, 2.0)]
    fails = [s["p_fail"] for s in stats]
    zs = [s["p_z"] for s in stats]
    assert fails == sorted(fails, reverse=True)
    assert zs == sorted(zs)
