"""Sequential sampling of a full outcome matrix from exact conditionals.

PLS outcomes are drawn one at a time in block-major order. The conditional
weight of a candidate pair (x, y) needs three ingredients:

* the running block vectors v+ and v- of the current block, extended by the
  candidate and summed over the PLSs still to come in the block;
* the logical vector w of the completed blocks;
* the sum over all blocks still to come.

The sums over unseen outcomes collapse to closed forms. Unseen PLSs in the
current block contribute R+-_k = (1 + o)^k +- (1 - o)^k with o the physical
<phi|psi> overlap of that sign (zero for minus). Unseen blocks contribute
D+-_p = 2^(n-p) +- (2u^2)^(n-p).

The two block signs enter with relative weight (1 +- e^{-4 alpha^2})^m times
their running scale. This ratio follows from the block normalization and makes
the product of conditionals equal the joint probability for every m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BellState, CodeParams, Letter, NumericalFault, OutcomeMatrix, Sign, encoding_constants
from .dist import transfer_matrices
from .povm import PovmTable

__all__ = [
    "SamplerConstants",
    "sampler_constants",
    "SamplerState",
    "new_state",
    "next_conditional_distribution",
    "advance",
    "conditional_weights",
    "sample_outcome_matrix",
]


@dataclass(frozen=True)
class SamplerConstants:
    """Per-(params, table) constants shared by the reference and compiled samplers.

    Attributes:
        T: (2, 9, 4, 4) block transfer matrices, sign index 0 = plus.
        T3: (2, 9, 3, 3) the same acting on (v1, v2, v4), using v2 = v3.
        Rp, Rm: (2, m) R+_k and R-_k for k = 0..m-1 trailing PLSs.
        Dp, Dm: (n,) D+ and D- for 0-based block index p (n-1-p blocks left).
        logc: (2,) m log(1 +- e^{-4 alpha^2}).
    """

    T: np.ndarray
    T3: np.ndarray
    Rp: np.ndarray
    Rm: np.ndarray
    Dp: np.ndarray
    Dm: np.ndarray
    logc: np.ndarray


def sampler_constants(params: CodeParams, table: PovmTable, printed_weights: bool = False) -> SamplerConstants:
    """Constants for the sequential sampler.

    Args:
        params: code parameters.
        table: POVM table for the loss in force.
        printed_weights: use sign weights (1 +- u^2) and drop the trailing
            factor of the minus sign. Exact only for m = 1; kept so the
            discrepancy for m > 1 can be reproduced.
    """
    n, m, a2 = params.n, params.m, params.alpha**2
    consts = encoding_constants(params)
    T = transfer_matrices(table)
    T3 = np.empty((2, 9, 3, 3))
    T3[:, :, 0, 0] = T[:, :, 0, 0]
    T3[:, :, 0, 1] = 2.0 * T[:, :, 0, 1]
    T3[:, :, 0, 2] = T[:, :, 0, 3]
    T3[:, :, 1, 0] = T[:, :, 1, 0]
    T3[:, :, 1, 1] = T[:, :, 1, 1] + T[:, :, 1, 2]
    T3[:, :, 1, 2] = T[:, :, 1, 3]
    T3[:, :, 2, 0] = T[:, :, 3, 0]
    T3[:, :, 2, 1] = 2.0 * T[:, :, 3, 1]
    T3[:, :, 2, 2] = T[:, :, 3, 3]
    k = np.arange(m)
    o = np.array([consts.overlap_phi_psi_plus, 0.0])[:, None]
    Rp = (1.0 + o) ** k + (1.0 - o) ** k
    Rm = (1.0 + o) ** k - (1.0 - o) ** k
    rest = n - 1 - np.arange(n)
    c_sum, c_diff = consts.C_plus**2 + consts.C_minus**2, consts.C_plus**2 - consts.C_minus**2
    Dp = c_sum**rest + c_diff**rest
    Dm = c_sum**rest - c_diff**rest
    e4 = math.exp(-4.0 * a2)
    logc = np.array([m * math.log1p(e4), m * math.log1p(-e4)])
    if printed_weights:
        logc = np.array([math.log1p(consts.u**2), math.log1p(-(consts.u**2))])
        Rp[1], Rm[1] = 1.0, 0.0
    for arr in (T, T3, Rp, Rm, Dp, Dm, logc):
        arr.setflags(write=False)
    return SamplerConstants(T=T, T3=T3, Rp=Rp, Rm=Rm, Dp=Dp, Dm=Dm, logc=logc)


@dataclass
class SamplerState:
    """Mutable per-trial state positioned at the next unsampled PLS.

    Attributes:
        initial_bell: logical Bell state being measured.
        p, q: 0-based block and PLS index of the next draw.
        v: (2, 4) running block vectors for sign plus and minus.
        log_v: (2,) log scales of ``v``.
        w: logical vector over the completed blocks.
        log_w: log scale of ``w`` (not needed for conditionals, kept for checks).
    """

    params: CodeParams
    consts: SamplerConstants
    initial_bell: BellState
    p: int = 0
    q: int = 0
    v: np.ndarray = field(default_factory=lambda: np.tile([1.0, 0.0, 0.0, 0.0], (2, 1)))
    log_v: np.ndarray = field(default_factory=lambda: np.zeros(2))
    w: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    log_w: float = 0.0

    @property
    def done(self) -> bool:
        return self.p >= self.params.n


def new_state(params: CodeParams, table: PovmTable, b2: BellState, consts: SamplerConstants | None = None) -> SamplerState:
    return SamplerState(params=params, consts=consts or sampler_constants(params, table), initial_bell=b2)


def conditional_weights(state: SamplerState) -> np.ndarray:
    """Unnormalized weights of the nine candidate pairs (common scale dropped)."""
    if state.done:
        raise NumericalFault("all PLSs already sampled")
    c, prm = state.consts, state.params
    psi = state.initial_bell.letter is Letter.PSI
    minus = state.initial_bell.sign is Sign.MINUS
    q_last = state.q == prm.m - 1
    k = prm.m - 1 - state.q
    xi = np.empty((2, 9))
    for s in range(2):
        cand = c.T[s] @ state.v[s]  # (9, 4)
        if q_last:
            xi[s] = cand[:, 3] if psi else cand[:, 0]
        else:
            xi[s] = c.Rp[s, k] * (cand[:, 0] + cand[:, 3]) + c.Rm[s, k] * (cand[:, 1] + cand[:, 2])
    lp, lm = state.log_v[0] + c.logc[0], state.log_v[1] + c.logc[1]
    ref = max(lp, lm)
    if ref == -math.inf:
        raise NumericalFault(f"outcome prefix has zero probability (block {state.p}, PLS {state.q})")
    sp, sm = math.exp(lp - ref), math.exp(lm - ref)
    w1, w2 = state.w
    if state.p == prm.n - 1:
        cp, cm = (w2, w1) if minus else (w1, w2)
    else:
        dp, dm = c.Dp[state.p], c.Dm[state.p]
        if minus:
            cp, cm = dm * w1 + dp * w2, dm * w2 + dp * w1
        else:
            cp, cm = dp * w1 + dm * w2, dp * w2 + dm * w1
    weights = sp * xi[0] * cp + sm * xi[1] * cm
    return np.maximum(weights, 0.0)


def next_conditional_distribution(state: SamplerState) -> np.ndarray:
    """Pr(next pair = 3x + y | outcomes so far, initial Bell state), length 9."""
    weights = conditional_weights(state)
    total = weights.sum()
    if not total > 0.0:
        raise NumericalFault(f"all candidate weights vanish at block {state.p}, PLS {state.q}")
    return weights / total


def advance(state: SamplerState, code: int) -> None:
    """Record the pair ``code`` = 3x + y at the current PLS and move on."""
    c, prm = state.consts, state.params
    for s in range(2):
        vec = c.T[s, code] @ state.v[s]
        scale = float(np.max(np.abs(vec)))
        if scale > 0.0:
            state.v[s] = vec / scale
            state.log_v[s] += math.log(scale)
        else:
            state.v[s] = 0.0
            state.log_v[s] = -math.inf
    state.q += 1
    if state.q < prm.m:
        return
    # block complete: L+- proportional to (1 +- e^{-4a^2})^m times v1 (phi) or v4 (psi)
    mu = 3 if state.initial_bell.letter is Letter.PSI else 0
    lp, lm = state.log_v[0] + c.logc[0], state.log_v[1] + c.logc[1]
    ref = max(lp, lm)
    if ref == -math.inf:
        raise NumericalFault(f"block {state.p} has zero probability under both signs")
    a = state.v[0, mu] * math.exp(lp - ref)
    b = state.v[1, mu] * math.exp(lm - ref)
    w = np.array([a * state.w[0] + b * state.w[1], b * state.w[0] + a * state.w[1]])
    scale = float(np.max(np.abs(w)))
    state.w = w / scale
    state.log_w += ref + math.log(scale)
    state.v = np.tile([1.0, 0.0, 0.0, 0.0], (2, 1))
    state.log_v = np.zeros(2)
    state.p += 1
    state.q = 0


def _inverse_cdf(weights: np.ndarray, u: float) -> int:
    total = float(np.sum(weights))
    thresh = u * total
    acc = 0.0
    cand = 8
    for c in range(9):
        acc += weights[c]
        if thresh < acc:
            cand = c
            break
    while weights[cand] <= 0.0 and cand > 0:
        cand -= 1
    return cand


def sample_outcome_matrix(params: CodeParams, table: PovmTable, b2: BellState, rng_stream) -> OutcomeMatrix:
    """Draw every PLS outcome by inverse CDF over its exact conditional.

    Args:
        rng_stream: anything with a ``random()`` method returning floats in
            [0, 1), e.g. ``numpy.random.Generator``. One draw per PLS.
    """
    state = new_state(params, table, b2)
    codes = np.empty((params.n, params.m), dtype=np.int8)
    while not state.done:
        weights = conditional_weights(state)
        if not weights.sum() > 0.0:
            raise NumericalFault(f"all candidate weights vanish at block {state.p}, PLS {state.q}")
        code = _inverse_cdf(weights, float(rng_stream.random()))
        codes[state.p, state.q] = code
        advance(state, code)
    return OutcomeMatrix.from_codes(codes)
