from __future__ import annotations

import itertools

import numpy as np
import pytest

from catcbsm import _kernels
from catcbsm.cbsm import (
    BlockDecision,
    Mode,
    Outcome,
    classify,
    hardware_efficient_block,
    hardware_efficient_logical,
    unoptimized_block,
    unoptimized_logical,
)
from catcbsm.core import BellState, CodeParams, Letter, LossParams, OutcomeMatrix, Sign
from catcbsm.montecarlo import run_trials
from catcbsm.physbsm import PhysicalResult, interpret_full
from catcbsm.povm import build_povm_table
from catcbsm.sampler import sample_outcome_matrix

# pair codes of a representative outcome for each physical result
PHI_P, PHI_M, PSI_P, PSI_M, FAIL_P = (2, 0), (1, 0), (0, 2), (0, 1), (0, 0)


def res(pair):
    return interpret_full(*pair)


def blk(sign, letter):
    return BlockDecision(sign=sign, letter=letter, d=1, f=None, n_full=1, n_signonly=0)


def test_unoptimized_block_examples():
    b = unoptimized_block([res(PHI_P), res(PHI_M), res(PSI_M)])
    assert (b.sign, b.letter) == (Sign.MINUS, Letter.PSI)
    b = unoptimized_block([res(PHI_P)] * 3)
    assert (b.sign, b.letter) == (Sign.PLUS, Letter.PHI)
    b = unoptimized_block([res(PHI_P), res(FAIL_P), res(PHI_P)])
    assert b.sign is Sign.PLUS and b.failed


def test_unoptimized_logical_examples():
    d = unoptimized_logical([blk(Sign.MINUS, Letter.PHI), blk(Sign.PLUS, Letter.PHI), blk(Sign.PLUS, Letter.PHI)])
    assert d.bell() is BellState.PHI_MINUS
    d = unoptimized_logical([blk(Sign.PLUS, Letter.PHI), blk(Sign.PLUS, Letter.PSI), blk(Sign.PLUS, None)])
    assert d.failed and d.sign is Sign.PLUS
    d = unoptimized_logical([blk(Sign.MINUS, Letter.PSI)])
    assert d.bell() is BellState.PSI_MINUS


def test_case1():
    b = hardware_efficient_block([PHI_P, PSI_P, PHI_P])
    assert (b.d, b.f, b.n_full, b.n_signonly) == (2, None, 3, 0)
    assert (b.sign, b.letter) == (Sign.PLUS, Letter.PSI)


def test_case3():
    b = hardware_efficient_block([FAIL_P, PHI_P, PHI_P])
    assert (b.f, b.d, b.n_full, b.n_signonly) == (1, 2, 1, 1)
    assert b.cost == 1.5 and b.failed and b.sign is Sign.PLUS


def test_case2():
    b = hardware_efficient_block([PHI_P, PHI_P, FAIL_P])
    assert (b.d, b.f, b.n_full, b.n_signonly) == (2, 3, 3, 0)
    assert b.failed


def test_sign_only_mode():
    b = hardware_efficient_block([PHI_M, PSI_P, PHI_M, PHI_P, PHI_P], Mode.SIGN_ONLY)
    assert (b.d, b.n_full, b.n_signonly, b.sign) == (5, 0, 5, Sign.PLUS)
    b = hardware_efficient_block([PHI_M, PHI_M, PHI_P, PHI_P, PHI_P], Mode.SIGN_ONLY)
    assert (b.d, b.n_signonly, b.sign, b.letter) == (5, 5, Sign.PLUS, None)
    b = hardware_efficient_block([PHI_M, PHI_M, PHI_M, PHI_P, PHI_P], Mode.SIGN_ONLY)
    assert (b.d, b.n_signonly, b.sign) == (3, 3, Sign.MINUS)


def test_j1_remaining_blocks_sign_only():
    mat = OutcomeMatrix(np.array([[PHI_P] * 3, [PHI_P] * 3, [PSI_M, PSI_M, PSI_M]]))
    d = hardware_efficient_logical(mat, CodeParams(3, 3, 1.0, 1))
    assert d.blocks[0].n_full == 3
    assert all(b.n_full == 0 for b in d.blocks[1:])
    assert d.cost == 3 + 0.5 * (2 + 2)
    assert d.bell() is BellState.PHI_MINUS


def test_all_blocks_fail():
    mat = OutcomeMatrix(np.array([[FAIL_P, PHI_M, PHI_M]] * 3))
    d = hardware_efficient_logical(mat, CodeParams(3, 3, 1.0, 3))
    assert d.failed and d.sign is Sign.MINUS


def test_classify():
    dec = unoptimized_logical([blk(Sign.PLUS, Letter.PHI)])
    assert classify(BellState.PHI_PLUS, dec) is Outcome.SUCCESS
    dec = unoptimized_logical([blk(Sign.MINUS, Letter.PSI)])
    assert classify(BellState.PHI_PLUS, dec) is Outcome.Y_ERROR
    assert classify(BellState.PHI_MINUS, dec) is Outcome.X_ERROR
    assert classify(BellState.PSI_PLUS, dec) is Outcome.Z_ERROR
    assert classify(BellState.PSI_MINUS, unoptimized_logical([blk(Sign.MINUS, None)])) is Outcome.FAILURE


def _all_rows(m):
    return itertools.product([(x, y) for x in range(3) for y in range(3)], repeat=m)


@pytest.mark.parametrize("m", (1, 3))
def test_block_invariants_exhaustive(m):
    for row in _all_rows(m):
        for mode in Mode:
            b = hardware_efficient_block(list(row), mode)
            assert b.d is not None and b.d <= m
            assert b.n_full + b.n_signonly <= m
            assert b.sign is unoptimized_block([res(p) for p in row]).sign
            if mode is Mode.FULL:
                assert b.failed == (b.f is not None)


def _python_decision(codes, params):
    d = hardware_efficient_logical(OutcomeMatrix.from_codes(codes), params)
    if d.failed:
        code = 4 + (d.sign is Sign.MINUS)
    else:
        code = d.bell().value
    return code, int(round(2 * d.cost))


@pytest.mark.parametrize("n,m,j", [(1, 1, 1), (3, 3, 1), (3, 3, 2), (5, 3, 3), (5, 5, 5), (7, 1, 4)])
def test_kernel_decisions_match_reference(n, m, j):
    rng = np.random.default_rng(n * 100 + m * 10 + j)
    codes = rng.integers(0, 9, (400, n, m)).astype(np.int8)
    # bias toward failures and mixed signs
    codes[::3] = rng.choice(np.array([0, 4, 8, 1, 3], dtype=np.int8), size=codes[::3].shape)
    params = CodeParams(n, m, 1.0, j)
    dec, cost = _kernels.decide_batch(codes, n, m, j)
    for i in range(len(codes)):
        assert (int(dec[i]), int(cost[i])) == _python_decision(codes[i], params)


def test_kernel_classify_matches_reference():
    decisions = np.arange(6, dtype=np.int8)
    for b in BellState:
        cat = _kernels.classify_batch(np.full(6, b.value, dtype=np.int8), decisions)
        for k in range(6):
            if k >= 4:
                assert cat[k] == Outcome.FAILURE
            else:
                dec = unoptimized_logical([blk(BellState(k).sign, BellState(k).letter)])
                assert cat[k] == classify(b, dec)


def test_paired_decisions_agree_with_unoptimized():
    params = CodeParams(3, 3, 1.6, 1)
    t = build_povm_table(1.6, LossParams(0.99, 0.99))
    rng = np.random.default_rng(31)
    for _ in range(2000):
        b2 = BellState(int(rng.integers(4)))
        mat = sample_outcome_matrix(params, t, b2, rng)
        he = hardware_efficient_logical(mat, params)
        un = unoptimized_logical([unoptimized_block([res(p) for p in mat.row(q)]) for q in range(3)])
        assert he.sign is un.sign
        if not he.failed and not un.failed:
            assert he.letter is un.letter


def test_lossless_monte_carlo_no_errors():
    tally = run_trials(CodeParams(3, 3, 1.0), LossParams(1.0, 1.0), 100_000, seed=3)
    assert tally.counts[1:4] == (0, 0, 0)


def test_equal_loss_no_letter_errors():
    for alpha in (1.0, 1.6):
        tally = run_trials(CodeParams(3, 3, alpha), LossParams(0.99, 0.99), 50_000, seed=4)
        assert tally.counts[1] == 0 and tally.counts[2] == 0


def test_cost_bounds():
    params = CodeParams(5, 5, 1.0, 2)
    rng = np.random.default_rng(32)
    codes = rng.integers(0, 9, (2000, 5, 5)).astype(np.int8)
    _, cost = _kernels.decide_batch(codes, 5, 5, 2)
    lower = params.n * ((params.m + 1) // 2)  # in half units: every block needs d >= ceil(m/2)
    assert cost.min() >= lower and cost.max() <= 2 * params.n * params.m
