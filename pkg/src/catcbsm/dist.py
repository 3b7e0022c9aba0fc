"""Exact joint distributions of CBSM outcomes at block and logical level.

Within a block, the probability of an outcome sequence is a sum over
permutations of physical Bell states. Grouping terms by the parity of the psi
count on bra and ket turns the sum into a product of 4x4 transfer matrices
acting on (1, 0, 0, 0). Across blocks, a 2x2 transfer matrix does the same for
the block signs.

Vectors are renormalized after each step; the logarithm of the scale is carried
alongside, so long codes never underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import BellState, CodeParams, Letter, OutcomeMatrix, ParameterError, Sign, encoding_constants
from .povm import PovmTable

__all__ = [
    "transfer_matrix",
    "transfer_matrices",
    "BlockVector",
    "LogicalVector",
    "block_vector",
    "block_log_prefactor",
    "block_log_probability",
    "block_joint_probability",
    "logical_transfer_entries",
    "logical_vector",
    "logical_log_probability",
    "logical_joint_probability",
    "logical_log_probabilities_batch",
]

_E1 = np.array([1.0, 0.0, 0.0, 0.0])


def transfer_matrix(table: PovmTable, x: int, y: int, sign: Sign) -> np.ndarray:
    """4x4 block transfer matrix for one outcome pair."""
    k = int(sign is Sign.MINUS)
    m11, m22, m12 = table.elements[x, y, k], table.elements[x, y, 2 + k], table.elements[x, y, 4 + k]
    return np.array(
        [
            [m11, m12, m12, m22],
            [m12, m11, m22, m12],
            [m12, m22, m11, m12],
            [m22, m12, m12, m11],
        ]
    )


def transfer_matrices(table: PovmTable) -> np.ndarray:
    """All 18 transfer matrices, shape (2, 9, 4, 4): [sign (+, -), 3x + y]."""
    out = np.empty((2, 9, 4, 4))
    for k, sign in enumerate(Sign):
        for c in range(9):
            out[k, c] = transfer_matrix(table, c // 3, c % 3, sign)
    return out


@dataclass(frozen=True)
class BlockVector:
    """Scaled block vector: the true vector is ``v * exp(log_scale)``.

    v2 = v3 always; those two can be negative when the modes lose photons at
    different rates. v1 and v4 are never negative.
    """

    sign: Sign
    v: np.ndarray
    log_scale: float = 0.0

    def value(self) -> np.ndarray:
        return self.v * math.exp(self.log_scale)


@dataclass(frozen=True)
class LogicalVector:
    """Scaled 2-vector over block signs; the true vector is ``w * exp(log_scale)``."""

    letter: Letter
    w: np.ndarray
    log_scale: float = 0.0

    def value(self) -> np.ndarray:
        return self.w * math.exp(self.log_scale)


def _renorm(vec: np.ndarray, log_scale: float) -> tuple[np.ndarray, float]:
    scale = float(np.max(np.abs(vec)))
    if scale == 0.0:
        return vec, -math.inf
    return vec / scale, log_scale + math.log(scale)


def block_vector(
    table: PovmTable, outcomes: Iterable[tuple[int, int]], sign: Sign, renormalize: bool = True
) -> BlockVector:
    """Apply the transfer matrix of each outcome pair, in order, to (1, 0, 0, 0)."""
    v, log_scale = _E1.copy(), 0.0
    for x, y in outcomes:
        v = transfer_matrix(table, int(x), int(y), sign) @ v
        if renormalize:
            v, log_scale = _renorm(v, log_scale)
            if log_scale == -math.inf:
                break
    return BlockVector(sign=sign, v=v, log_scale=log_scale)


def block_log_prefactor(alpha: float, m: int, sign: Sign) -> float:
    """log of the factor turning v1 (v4) into Pr(sequence | phi^(m) (psi^(m))).

    With normalized physical Bell states in the transfer matrices the factor is
    16 N^4 (2(1 +- e^{-4 alpha^2}))^m / (2(1 +- u^2)), N = N^(m) the block
    normalization. It equals 1 for m = 1.
    """
    a2 = alpha * alpha
    e2, e4 = math.exp(-2.0 * a2), math.exp(-4.0 * a2)
    s = 1.0 if sign is Sign.PLUS else -1.0
    t = math.tanh(a2)
    log_sum = m * math.log1p(e2) + math.log1p(t**m)  # log(A^m + B^m)
    u = (1.0 - t**m) / (1.0 + t**m)
    return (
        math.log(16.0)
        + m * math.log(2.0 * (1.0 + s * e4))
        - m * math.log(4.0)
        - 2.0 * log_sum
        - math.log(2.0 * (1.0 + s * u * u))
    )


def _check_block(params: CodeParams, outcomes: Sequence) -> None:
    if len(outcomes) != params.m:
        raise ParameterError(f"block outcome sequence has length {len(outcomes)}, expected m={params.m}")


def block_log_probability(
    params: CodeParams, table: PovmTable, outcomes: Sequence[tuple[int, int]], b1: BellState
) -> float:
    """log Pr(outcomes | b1) for a block Bell state; -inf for impossible sequences."""
    _check_block(params, outcomes)
    bv = block_vector(table, outcomes, b1.sign)
    comp = bv.v[0] if b1.letter is Letter.PHI else bv.v[3]
    if comp <= 0.0 or bv.log_scale == -math.inf:
        return -math.inf
    return math.log(comp) + bv.log_scale + block_log_prefactor(params.alpha, params.m, b1.sign)


def block_joint_probability(
    params: CodeParams, table: PovmTable, outcomes: Sequence[tuple[int, int]], b1: BellState
) -> float:
    """Pr(outcomes | b1) for the block Bell state b1 (may underflow for long blocks)."""
    return math.exp(block_log_probability(params, table, outcomes, b1))


def _log_transfer_entries(
    params: CodeParams, table: PovmTable, outcomes: Sequence[tuple[int, int]], letter: Letter
) -> tuple[float, float]:
    u2 = encoding_constants(params).u ** 2
    out = []
    for sign, c2 in ((Sign.PLUS, 1.0 + u2), (Sign.MINUS, 1.0 - u2)):
        lp = block_log_probability(params, table, outcomes, BellState.from_parts(letter, sign))
        out.append(lp + math.log(c2))
    return out[0], out[1]


def logical_transfer_entries(
    params: CodeParams, table: PovmTable, outcomes: Sequence[tuple[int, int]], letter: Letter
) -> tuple[float, float]:
    """(L+, L-) = (1 +- u^2) Pr(outcomes | block Bell state with this letter and sign +-)."""
    lp, lm = _log_transfer_entries(params, table, outcomes, letter)
    return math.exp(lp), math.exp(lm)


def logical_vector(params: CodeParams, table: PovmTable, matrix: OutcomeMatrix, letter: Letter) -> LogicalVector:
    """Chain the 2x2 block-sign transfer matrices over all blocks onto (1, 0)."""
    matrix.check_shape(params)
    w, log_scale = np.array([1.0, 0.0]), 0.0
    for p in range(matrix.n):
        lp, lm = _log_transfer_entries(params, table, matrix.row(p), letter)
        ref = max(lp, lm)
        if ref == -math.inf:
            return LogicalVector(letter=letter, w=np.zeros(2), log_scale=-math.inf)
        a, b = math.exp(lp - ref), math.exp(lm - ref)
        w = np.array([a * w[0] + b * w[1], b * w[0] + a * w[1]])
        w, log_scale = _renorm(w, log_scale + ref)
    return LogicalVector(letter=letter, w=w, log_scale=log_scale)


def logical_log_probability(params: CodeParams, table: PovmTable, matrix: OutcomeMatrix, b2: BellState) -> float:
    """log Pr(matrix | b2) for the logical Bell state b2; -inf if impossible."""
    consts = encoding_constants(params)
    lv = logical_vector(params, table, matrix, b2.letter)
    if b2.sign is Sign.PLUS:
        comp, norm = lv.w[0], consts.Ntilde_plus
    else:
        comp, norm = lv.w[1], consts.Ntilde_minus
    if comp <= 0.0 or lv.log_scale == -math.inf:
        return -math.inf
    return 2.0 * math.log(norm) + math.log(comp) + lv.log_scale


def logical_joint_probability(params: CodeParams, table: PovmTable, matrix: OutcomeMatrix, b2: BellState) -> float:
    """Pr(matrix | b2) (may underflow for large codes; see ``logical_log_probability``)."""
    return math.exp(logical_log_probability(params, table, matrix, b2))


def logical_log_probabilities_batch(params: CodeParams, table: PovmTable, codes: np.ndarray) -> np.ndarray:
    """log Pr(matrix | b2) for a stack of pair-code matrices, shape (N, 4).

    Same recurrences as ``logical_log_probability``, vectorized over matrices.
    Columns follow ``BellState.value``; impossible matrices give -inf.
    """
    codes = np.asarray(codes)
    if codes.ndim != 3 or codes.shape[1:] != (params.n, params.m):
        raise ParameterError(f"codes must have shape (N, {params.n}, {params.m})")
    T = transfer_matrices(table)
    consts = encoding_constants(params)
    u2 = consts.u**2
    N = codes.shape[0]
    pref = [block_log_prefactor(params.alpha, params.m, s) for s in Sign]
    logc2 = [math.log(1.0 + u2), math.log(1.0 - u2)]
    out = np.empty((N, 4))
    with np.errstate(divide="ignore", invalid="ignore"):
        # per block and sign: log of (1 +- u^2) Pr(row | phi/psi, sign)
        logL = np.empty((params.n, 2, 2, N))  # block, letter, sign, matrix
        for p in range(params.n):
            for k in range(2):
                v = np.zeros((N, 4))
                v[:, 0] = 1.0
                lv = np.zeros(N)
                for q in range(params.m):
                    v = np.einsum("nij,nj->ni", T[k, codes[:, p, q]], v)
                    sc = np.max(np.abs(v), axis=1)
                    safe = np.where(sc > 0, sc, 1.0)
                    v /= safe[:, None]
                    lv += np.where(sc > 0, np.log(safe), -np.inf)
                for li, mu in enumerate((0, 3)):
                    logL[p, li, k] = np.log(v[:, mu]) + lv + pref[k] + logc2[k]
        for li, letter in enumerate(Letter):
            w = np.zeros((N, 2))
            w[:, 0] = 1.0
            lw = np.zeros(N)
            for p in range(params.n):
                lp, lm = logL[p, li, 0], logL[p, li, 1]
                ref = np.maximum(lp, lm)
                ok = np.isfinite(ref)
                ref_s = np.where(ok, ref, 0.0)
                a, b = np.exp(lp - ref_s), np.exp(lm - ref_s)
                w = np.stack([a * w[:, 0] + b * w[:, 1], b * w[:, 0] + a * w[:, 1]], axis=1)
                sc = np.max(np.abs(w), axis=1)
                safe = np.where(sc > 0, sc, 1.0)
                w /= safe[:, None]
                lw += np.where(ok & (sc > 0), ref_s + np.log(safe), -np.inf)
            for sign, col, norm in ((Sign.PLUS, 0, consts.Ntilde_plus), (Sign.MINUS, 1, consts.Ntilde_minus)):
                b2 = BellState.from_parts(letter, sign)
                out[:, b2.value] = 2.0 * math.log(norm) + np.log(w[:, col]) + lw
    return np.where(np.isnan(out), -np.inf, out)
