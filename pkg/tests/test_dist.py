from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from catcbsm.core import BellState, CodeParams, Letter, LossParams, OutcomeMatrix, ParameterError, Sign, encoding_constants
from catcbsm.dist import (
    block_joint_probability,
    block_log_prefactor,
    block_vector,
    logical_joint_probability,
    logical_log_probabilities_batch,
    logical_log_probability,
    logical_transfer_entries,
    transfer_matrix,
)
from catcbsm.oracle import block_g_sums, enumerate_logical_distribution
from catcbsm.povm import build_povm_table, physical_outcome_probability

PAIRS = [(x, y) for x in range(3) for y in range(3)]


def test_transfer_matrix_structure(asym_table):
    for x, y in PAIRS:
        for s in Sign:
            t = transfer_matrix(asym_table, x, y, s)
            np.testing.assert_array_equal(t, t.T)
            assert len(set(np.diag(t))) == 1


def test_empty_and_single(asym_table):
    bv = block_vector(asym_table, [], Sign.PLUS)
    np.testing.assert_array_equal(bv.v, [1, 0, 0, 0])
    assert bv.log_scale == 0.0
    bv = block_vector(asym_table, [(0, 2)], Sign.MINUS, renormalize=False)
    t = asym_table
    np.testing.assert_allclose(bv.v, [t.element(0, 2, "M11-"), t.element(0, 2, "M12-"), t.element(0, 2, "M12-"), t.element(0, 2, "M22-")])


def test_recurrence_matches_permutation_sums():
    t = build_povm_table(1.0, LossParams(0.99, 0.99))
    seq = [(0, 2), (2, 0), (0, 0)]
    for s in Sign:
        v = block_vector(t, seq, s).value()
        g = block_g_sums(t, seq, s)
        assert v[0] == pytest.approx(g[0], rel=1e-10)
        assert v[3] == pytest.approx(g[3], rel=1e-10)


def test_recurrence_random_sequences(mixed_table):
    rng = np.random.default_rng(3)
    for _ in range(50):
        seq = [PAIRS[i] for i in rng.integers(0, 9, 3)]
        for s in Sign:
            v = block_vector(mixed_table, seq, s).value()
            g = block_g_sums(mixed_table, seq, s)
            np.testing.assert_allclose([v[0], v[1], v[3]], [g[0], g[1], g[3]], rtol=1e-10, atol=1e-15)
            np.testing.assert_allclose(v[1], v[2], rtol=1e-13, atol=1e-300)


def test_renormalization_is_exact(mixed_table):
    rng = np.random.default_rng(4)
    for _ in range(20):
        seq = [PAIRS[i] for i in rng.integers(0, 9, 5)]
        a = block_vector(mixed_table, seq, Sign.PLUS).value()
        b = block_vector(mixed_table, seq, Sign.PLUS, renormalize=False).value()
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)


def test_single_pls_block_is_physical(asym_table):
    params = CodeParams(1, 1, 1.0)
    assert block_log_prefactor(1.0, 1, Sign.PLUS) == pytest.approx(0.0, abs=1e-14)
    assert block_log_prefactor(1.0, 1, Sign.MINUS) == pytest.approx(0.0, abs=1e-14)
    for b in BellState:
        for x, y in PAIRS:
            ref = physical_outcome_probability(asym_table, x, y, b)
            assert block_joint_probability(params, asym_table, [(x, y)], b) == pytest.approx(ref, rel=1e-13, abs=1e-300)
            mat = OutcomeMatrix(np.array([[[x, y]]]))
            assert logical_joint_probability(params, asym_table, mat, b) == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_block_normalization():
    t = build_povm_table(1.2, LossParams(0.95, 0.95))
    params = CodeParams(1, 3, 1.2)
    for b in BellState:
        total = sum(block_joint_probability(params, t, seq, b) for seq in itertools.product(PAIRS, repeat=3))
        assert total == pytest.approx(1.0, abs=1e-10)


def test_transfer_entries_single_pls(asym_table):
    params = CodeParams(1, 1, 1.0)
    e4 = math.exp(-4.0)
    for x, y in PAIRS:
        lp, lm = logical_transfer_entries(params, asym_table, [(x, y)], Letter.PHI)
        assert lp == pytest.approx((1 + e4) * asym_table.diag(x, y, BellState.PHI_PLUS), rel=1e-13, abs=1e-300)
        assert lm == pytest.approx((1 - e4) * asym_table.diag(x, y, BellState.PHI_MINUS), rel=1e-13, abs=1e-300)
        assert lp >= 0 and lm >= 0


def test_single_block_logical_is_block():
    t = build_povm_table(1.3, LossParams(0.9, 0.97))
    params = CodeParams(1, 3, 1.3)
    rng = np.random.default_rng(5)
    for _ in range(20):
        codes = rng.integers(0, 9, (1, 3))
        mat = OutcomeMatrix.from_codes(codes)
        for b in BellState:
            a = logical_log_probability(params, t, mat, b)
            c = math.log(block_joint_probability(params, t, mat.row(0), b) or 1e-320)
            if a != -math.inf:
                assert a == pytest.approx(c, rel=1e-12)


def test_logical_normalization_three_blocks():
    t = build_povm_table(1.0, LossParams(0.95, 0.95))
    params = CodeParams(3, 1, 1.0)
    codes = enumerate_logical_distribution(params, t).codes()
    probs = np.exp(logical_log_probabilities_batch(params, t, codes))
    np.testing.assert_allclose(probs.sum(axis=0), 1.0, atol=1e-10)


def test_batch_matches_scalar(mixed_table):
    params = CodeParams(3, 3, 1.0)
    rng = np.random.default_rng(6)
    codes = rng.integers(0, 9, (30, 3, 3)).astype(np.int8)
    batch = logical_log_probabilities_batch(params, mixed_table, codes)
    for i in range(30):
        mat = OutcomeMatrix.from_codes(codes[i])
        for b in BellState:
            ref = logical_log_probability(params, mixed_table, mat, b)
            if ref == -math.inf:
                assert batch[i, b.value] == -math.inf
            else:
                assert batch[i, b.value] == pytest.approx(ref, rel=1e-12)


def test_permutation_covariance(mixed_table):
    params = CodeParams(3, 3, 1.0)
    rng = np.random.default_rng(7)
    for _ in range(20):
        codes = rng.integers(0, 9, (3, 3))
        mat = OutcomeMatrix.from_codes(codes)
        blocks = OutcomeMatrix.from_codes(codes[rng.permutation(3)])
        within = OutcomeMatrix.from_codes(np.array([row[rng.permutation(3)] for row in codes]))
        for b in BellState:
            ref = logical_log_probability(params, mixed_table, mat, b)
            for other in (blocks, within):
                got = logical_log_probability(params, mixed_table, other, b)
                if ref == -math.inf:
                    assert got == -math.inf
                else:
                    assert got == pytest.approx(ref, rel=1e-12)


def test_even_m_rejected():
    with pytest.raises(ParameterError):
        CodeParams(3, 2, 1.0)


def test_long_code_does_not_underflow(asym_table):
    params = CodeParams(5, 41, 1.0)
    codes = np.zeros((5, 41), dtype=np.int8)
    codes[:, ::2] = 6  # (2, 0): phi+ outcomes
    lp = logical_log_probability(params, asym_table, OutcomeMatrix.from_codes(codes), BellState.PHI_PLUS)
    assert math.isfinite(lp) and lp < -200


def test_constants_used(asym_table):
    c = encoding_constants(CodeParams(3, 1, 1.0))
    assert c.Ntilde_plus < c.Ntilde_minus
