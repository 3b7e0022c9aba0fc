from __future__ import annotations

import math

import numpy as np
import pytest

from catcbsm import _kernels
from catcbsm.core import BellState, CodeParams, LossParams, ParameterError, TruncationError
from catcbsm.montecarlo import estimate, run_trials
from catcbsm.oracle import (
    FockTruncation,
    coherent_overlap,
    coherent_probability,
    enumerate_block_distribution,
    enumerate_logical_distribution,
    exact_decision_statistics,
    fock_projector_overlap,
    oracle_povm_element,
)
from catcbsm.povm import build_povm_table, physical_outcome_probability

T40 = FockTruncation(40)


def test_vacuum_projection():
    for b, bp in ((1.0, 0.5), (1.4, -1.4), (0.0, 2.0)):
        assert fock_projector_overlap(b, bp, 0, T40) == pytest.approx(math.exp(-(b * b + bp * bp) / 2), rel=1e-15)


def test_parity_projectors_complete():
    for b in (0.3, 1.0, 2.0):
        assert coherent_overlap(b, b, FockTruncation.for_alpha(b)) == pytest.approx(1.0, abs=1e-12)


def test_odd_projection_closed_form():
    b = math.sqrt(2.0)
    got = fock_projector_overlap(b, -b, 1, T40)
    assert got == pytest.approx(math.exp(-(b * b + b * b) / 2) * math.sinh(-b * b), rel=1e-10)


def test_truncation_guard():
    with pytest.raises(TruncationError):
        fock_projector_overlap(2 * math.sqrt(2), 2 * math.sqrt(2), 1, FockTruncation(5))
    with pytest.raises(ParameterError):
        FockTruncation(0)


def test_oracle_element_examples():
    loss = LossParams(0.95, 0.9)
    for x in range(3):
        for y in range(3):
            assert abs(oracle_povm_element(1.0, loss, x, y, BellState.PHI_PLUS, BellState.PSI_MINUS)) < 1e-12
    lossless = LossParams(1.0, 1.0)
    assert abs(oracle_povm_element(1.0, lossless, 1, 1, BellState.PHI_PLUS, BellState.PHI_PLUS)) < 1e-12


def test_block_enumeration_single_pls(asym_loss, asym_table):
    enum = enumerate_block_distribution(CodeParams(1, 1, 1.0), asym_table)
    for ((x, y),), probs in enum.items():
        for b in BellState:
            assert probs[b.value] == pytest.approx(physical_outcome_probability(asym_table, x, y, b), rel=1e-12, abs=1e-300)


def test_block_enumeration_mass(mixed_table):
    enum = enumerate_block_distribution(CodeParams(1, 3, 1.0), mixed_table)
    np.testing.assert_allclose(sum(enum.values()), 1.0, atol=1e-10)


def test_block_enumeration_size_guard(asym_table):
    with pytest.raises(ParameterError):
        enumerate_block_distribution(CodeParams(1, 5, 1.0), asym_table)


def test_logical_enumeration_single_pls(asym_table):
    enum = enumerate_logical_distribution(CodeParams(1, 1, 1.0), asym_table)
    for c in range(9):
        for b in BellState:
            assert enum.probs[c, b.value] == pytest.approx(physical_outcome_probability(asym_table, c // 3, c % 3, b), rel=1e-12, abs=1e-300)


def test_logical_enumeration_normalization():
    t = build_povm_table(1.0, LossParams(0.95, 0.95))
    enum = enumerate_logical_distribution(CodeParams(3, 1, 1.0), t)
    assert enum.probs[:, BellState.PHI_MINUS.value].sum() == pytest.approx(1.0, abs=1e-10)


def test_logical_enumeration_size_guard(asym_table):
    with pytest.raises(ParameterError):
        enumerate_logical_distribution(CodeParams(3, 3, 1.0), asym_table)


def test_enumeration_matches_coherent_expansion(mixed_table):
    params = CodeParams(3, 1, 1.0)
    loss = LossParams(0.9, 0.97)
    enum = enumerate_logical_distribution(params, mixed_table)
    rng = np.random.default_rng(41)
    for idx in rng.integers(0, 729, 10):
        for b in BellState:
            ref = coherent_probability(params, loss, enum.matrix(int(idx)), b)
            assert enum.probs[idx, b.value] == pytest.approx(ref, rel=1e-10, abs=1e-16)


def test_index_roundtrip(asym_table):
    enum = enumerate_logical_distribution(CodeParams(1, 3, 1.0), asym_table)
    for k in (0, 17, 728):
        assert enum.index(enum.matrix(k)) == k


def test_exact_statistics_match_monte_carlo():
    """n=1, m=3, psi+ initial: 10^6 trials within 4 sigma of exhaustive values."""
    params = CodeParams(1, 3, 1.0)
    loss = LossParams(0.95, 0.9)
    enum = enumerate_logical_distribution(params, build_povm_table(1.0, loss))
    b2 = BellState.PSI_PLUS
    codes = enum.codes()
    decision, cost_half = _kernels.decide_batch(codes, 1, 3, 1)
    cat = _kernels.classify_batch(np.full(len(codes), b2.value, dtype=np.int8), decision)
    w = enum.probs[:, b2.value]
    exact = {k: float(w[cat == c].sum()) for c, k in enumerate(("p_i", "p_x", "p_y", "p_z", "p_fail"))}
    exact["c_exp"] = float((w * cost_half).sum()) / 2
    n = 1_000_000
    tally = run_trials(params, loss, n, seed=5, initial=BellState.PSI_PLUS)
    est = estimate(tally)
    for key in ("p_i", "p_x", "p_y", "p_z", "p_fail"):
        p = exact[key]
        sd = math.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(getattr(est, key).value - p) <= 4 * sd, key
    sd_c = est.c_exp.ci / 1.96
    assert abs(est.c_exp.value - exact["c_exp"]) <= 4 * max(sd_c, 1e-9)


def test_uniform_prior_statistics_sum(asym_table):
    params = CodeParams(3, 1, 1.0, 2)
    stats = exact_decision_statistics(params, enumerate_logical_distribution(params, asym_table))
    assert sum(stats[k] for k in ("p_i", "p_x", "p_y", "p_z", "p_fail")) == pytest.approx(1.0, abs=1e-12)
