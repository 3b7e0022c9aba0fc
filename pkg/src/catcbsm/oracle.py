"""Brute-force validators for the closed-form modules.

Nothing here calls the formulas it checks. Physical-level quantities come from
truncated Fock sums over coherent-state components. Block and logical
distributions come from literal permutation sums, from explicit enumeration
of block sign patterns, or from a full coherent-component expansion of the
encoded Bell states. All routines are meant for small instances only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BellState,
    CodeParams,
    Letter,
    LossParams,
    OutcomeMatrix,
    ParameterError,
    Sign,
    TruncationError,
)
from .povm import ELEMENT_NAMES, PovmTable

__all__ = [
    "FockTruncation",
    "fock_projector_overlap",
    "coherent_overlap",
    "pls_kernel",
    "oracle_povm_element",
    "oracle_povm_table",
    "block_g_sums",
    "enumerate_block_distribution",
    "LogicalEnumeration",
    "enumerate_logical_distribution",
    "coherent_probability",
    "enumerate_coherent_distribution",
    "exact_decision_statistics",
]

TAIL_TOL = 1e-12
MAX_BLOCK_M = 4
MAX_LOGICAL_PLS = 6
MAX_COHERENT_PLS = 9


@dataclass(frozen=True)
class FockTruncation:
    """Photon-number cutoff for the truncated sums."""

    n_max: int

    def __post_init__(self) -> None:
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be a positive integer, got {self.n_max!r}")

    @classmethod
    def for_alpha(cls, alpha: float) -> FockTruncation:
        """Safe default: covers the sqrt(2) alpha beam-splitter output with margin."""
        mu = 2.0 * alpha * alpha
        return cls(int(math.ceil(mu + 12.0 * math.sqrt(mu) + 20.0)))


def _poisson_tail(mu: float, n_max: int) -> float:
    """Mass of Poisson(mu) strictly above n_max, summed directly."""
    if mu == 0.0:
        return 0.0
    total = 0.0
    k = n_max + 1
    log_term = -mu + k * math.log(mu) - math.lgamma(k + 1)
    while True:
        term = math.exp(log_term)
        total += term
        if k > mu and term < 1e-18 * max(total, 1e-300):
            return total
        k += 1
        log_term += math.log(mu) - math.log(k)


def fock_projector_overlap(beta: float, beta_prime: float, x: int, trunc: FockTruncation) -> float:
    """<beta|Pi_x|beta'> for real coherent amplitudes by a truncated Fock sum.

    Pi_0 projects on vacuum, Pi_1 on odd photon numbers, Pi_2 on even nonzero
    photon numbers.

    Raises:
        TruncationError: dropped tail could exceed ``TAIL_TOL``.
    """
    # |beta beta'|^n/n! e^{-(beta^2+beta'^2)/2} <= Poisson term at the mean below
    mu = 0.5 * (beta * beta + beta_prime * beta_prime)
    tail = _poisson_tail(mu, trunc.n_max)
    if tail > TAIL_TOL:
        raise TruncationError(
            f"n_max={trunc.n_max} drops tail mass {tail:.3g} for amplitudes ({beta:g}, {beta_prime:g})"
        )
    bb = beta * beta_prime
    term = math.exp(-mu)
    total = term if x == 0 else 0.0
    if x == 0:
        return total
    for k in range(1, trunc.n_max + 1):
        term *= bb / k
        if (k % 2 == 1) == (x == 1):
            total += term
    return total


def coherent_overlap(beta: float, beta_prime: float, trunc: FockTruncation) -> float:
    """<beta|beta'> as the sum of the three parity projections."""
    return sum(fock_projector_overlap(beta, beta_prime, x, trunc) for x in range(3))


# Two-mode coherent components |s1 alpha, s2 alpha>, index 2*(s1<0) + (s2<0).
_COMPONENTS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

# Bell states as coefficient vectors over _COMPONENTS (unnormalized).
_BELL_COEFFS = np.array(
    [
        [1.0, 0.0, 0.0, 1.0],  # phi+ = |a,a> + |-a,-a>
        [1.0, 0.0, 0.0, -1.0],  # phi-
        [0.0, 1.0, 1.0, 0.0],  # psi+ = |a,-a> + |-a,a>
        [0.0, 1.0, -1.0, 0.0],  # psi-
    ]
)


def pls_kernel(alpha: float, loss: LossParams, trunc: FockTruncation | None = None) -> np.ndarray:
    """Matrix elements of M_{x,y} between two-mode coherent components.

    Each input mode i loses photons into an environment at rate 1 - eta_i, so
    |a><c| picks up the environment overlap <sqrt(1-eta) c|sqrt(1-eta) a>. The
    surviving amplitudes pass a 50:50 beam splitter, (a1, a2) -> ((a1+a2)/sqrt2,
    (a1-a2)/sqrt2), and the outputs are projected by parity detectors.

    Returns:
        Array K of shape (3, 3, 4, 4): ``K[x, y, bra, ket]``.
    """
    trunc = trunc or FockTruncation.for_alpha(alpha)
    etas = (loss.eta1, loss.eta2)
    out = np.zeros((3, 3, 4, 4))
    r2 = math.sqrt(2.0)
    for ib, cb in enumerate(_COMPONENTS):
        for ik, ck in enumerate(_COMPONENTS):
            env = 1.0
            surv_b, surv_k = [], []
            for mode in range(2):
                eta = etas[mode]
                lost = math.sqrt(1.0 - eta) * alpha
                env *= coherent_overlap(lost * cb[mode], lost * ck[mode], trunc)
                surv_b.append(math.sqrt(eta) * alpha * cb[mode])
                surv_k.append(math.sqrt(eta) * alpha * ck[mode])
            o1b, o2b = (surv_b[0] + surv_b[1]) / r2, (surv_b[0] - surv_b[1]) / r2
            o1k, o2k = (surv_k[0] + surv_k[1]) / r2, (surv_k[0] - surv_k[1]) / r2
            for x in range(3):
                px = fock_projector_overlap(o1b, o1k, x, trunc)
                for y in range(3):
                    out[x, y, ib, ik] = env * px * fock_projector_overlap(o2b, o2k, y, trunc)
    return out


def _gram_kernel(alpha: float, trunc: FockTruncation) -> np.ndarray:
    """<c1 c2|a1 a2> over the two-mode components."""
    g = np.zeros((4, 4))
    for ib, cb in enumerate(_COMPONENTS):
        for ik, ck in enumerate(_COMPONENTS):
            g[ib, ik] = coherent_overlap(alpha * cb[0], alpha * ck[0], trunc) * coherent_overlap(
                alpha * cb[1], alpha * ck[1], trunc
            )
    return g


def oracle_povm_table(alpha: float, loss: LossParams, trunc: FockTruncation | None = None) -> np.ndarray:
    """All Bell-basis elements, shape (3, 3, 6) in ``ELEMENT_NAMES`` order."""
    trunc = trunc or FockTruncation.for_alpha(alpha)
    kern = pls_kernel(alpha, loss, trunc)
    gram = _gram_kernel(alpha, trunc)
    norms = np.sqrt(np.einsum("bi,ij,bj->b", _BELL_COEFFS, gram, _BELL_COEFFS))
    vecs = _BELL_COEFFS / norms[:, None]
    full = np.einsum("bi,xyij,cj->xybc", vecs, kern, vecs)
    pairs = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 2), (1, 3)]
    return np.stack([full[:, :, b, c] for b, c in pairs], axis=-1)


def oracle_povm_element(
    alpha: float,
    loss: LossParams,
    x: int,
    y: int,
    b: BellState,
    b_prime: BellState,
    trunc: FockTruncation | None = None,
) -> float:
    """<b|M_{x,y}|b'> for normalized physical Bell states, from Fock sums."""
    trunc = trunc or FockTruncation.for_alpha(alpha)
    kern = pls_kernel(alpha, loss, trunc)[x, y]
    gram = _gram_kernel(alpha, trunc)
    vb, vk = _BELL_COEFFS[b.value], _BELL_COEFFS[b_prime.value]
    norm = math.sqrt((vb @ gram @ vb) * (vk @ gram @ vk))
    return float(vb @ kern @ vk / norm)


# ---------------------------------------------------------------------------
# block level: literal permutation sums


def _label_element(table: PovmTable, x: int, y: int, sign: Sign, bra: int, ket: int) -> float:
    # labels: 0 = phi, 1 = psi (same sign)
    k = int(sign is Sign.MINUS)
    if bra == ket:
        name = ("M11", "M22")[bra] + "+-"[k]
    else:
        name = "M12" + "+-"[k]
    return table.elements[x, y, ELEMENT_NAMES.index(name)]


def block_g_sums(table: PovmTable, outcomes, sign: Sign) -> np.ndarray:
    """Permutation sums grouped by the parity of the psi count on bra and ket.

    Enumerates every bra label sequence in Perm[psi^l phi^(m-l)] and every ket
    sequence in Perm[psi^l' phi^(m-l')], multiplies the single-PLS elements and
    sums. Returns (even/even, even/odd, odd/even, odd/odd).
    """
    outcomes = list(outcomes)
    m = len(outcomes)
    if m > MAX_BLOCK_M:
        raise ParameterError(f"permutation enumeration capped at m <= {MAX_BLOCK_M}")
    sums = np.zeros(4)
    for l_bra in range(m + 1):
        for l_ket in range(m + 1):
            g = 0.0
            for bra_pos in itertools.combinations(range(m), l_bra):
                for ket_pos in itertools.combinations(range(m), l_ket):
                    term = 1.0
                    for i, (x, y) in enumerate(outcomes):
                        term *= _label_element(table, x, y, sign, int(i in bra_pos), int(i in ket_pos))
                    g += term
            sums[2 * (l_bra % 2) + (l_ket % 2)] += g
    return sums


def _oracle_block_overlap(alpha: float, m: int, trunc: FockTruncation) -> float:
    # <+~|+~> = 2(1 + <a|-a>), <-~|-~> = 2(1 - <a|-a>)
    ov = coherent_overlap(alpha, -alpha, trunc)
    a, b = (1.0 + ov) ** m, (1.0 - ov) ** m
    return (a - b) / (a + b)


def _phys_bell_overlap(alpha: float, trunc: FockTruncation) -> float:
    gram = _gram_kernel(alpha, trunc)
    norms = np.sqrt(np.einsum("bi,ij,bj->b", _BELL_COEFFS, gram, _BELL_COEFFS))
    return float(_BELL_COEFFS[0] @ gram @ _BELL_COEFFS[2] / (norms[0] * norms[2]))


def enumerate_block_distribution(
    params: CodeParams, table: PovmTable, trunc: FockTruncation | None = None
) -> dict[tuple[tuple[int, int], ...], np.ndarray]:
    """Block outcome distribution from the literal permutation sums.

    The normalization is the same permutation sum with every POVM element
    replaced by the physical Bell-state overlap, so the total mass is a real
    check that the elements resolve the identity.

    Returns:
        Map from outcome sequence to Pr(sequence | block Bell state), indexed by
        ``BellState.value``.
    """
    m = params.m
    if m > MAX_BLOCK_M:
        raise ParameterError(f"permutation enumeration capped at m <= {MAX_BLOCK_M}")
    trunc = trunc or FockTruncation.for_alpha(params.alpha)
    overlap = {Sign.PLUS: _phys_bell_overlap(params.alpha, trunc), Sign.MINUS: 0.0}
    norm = {}
    for sign in Sign:
        o = overlap[sign]
        # sum over label sequences of prod <P_i|P'_i>: phi/phi = psi/psi = 1, phi/psi = o
        acc = np.zeros(4)
        for bra in itertools.product((0, 1), repeat=m):
            for ket in itertools.product((0, 1), repeat=m):
                term = math.prod(1.0 if a == b else o for a, b in zip(bra, ket))
                acc[2 * (sum(bra) % 2) + (sum(ket) % 2)] += term
        norm[sign] = acc
    out = {}
    pairs = [(x, y) for x in range(3) for y in range(3)]
    for seq in itertools.product(pairs, repeat=m):
        probs = np.zeros(4)
        for sign in Sign:
            g = block_g_sums(table, seq, sign)
            for letter, idx in ((Letter.PHI, 0), (Letter.PSI, 3)):
                probs[BellState.from_parts(letter, sign).value] = g[idx] / norm[sign][idx]
        out[seq] = probs
    return out


# ---------------------------------------------------------------------------
# logical level: explicit sum over block sign patterns


@dataclass(frozen=True)
class LogicalEnumeration:
    """Exact distribution over every n x m outcome matrix.

    Attributes:
        n, m: code size.
        probs: shape (9**(n*m), 4); row k is the matrix whose flattened pair
            codes (block-major) spell k in base 9, column is ``BellState.value``.
    """

    n: int
    m: int
    probs: np.ndarray

    def matrix(self, index: int) -> OutcomeMatrix:
        return OutcomeMatrix.from_codes(self.codes()[index])

    def codes(self) -> np.ndarray:
        k = self.n * self.m
        idx = np.arange(9**k)
        digits = (idx[:, None] // 9 ** np.arange(k - 1, -1, -1)[None, :]) % 9
        return digits.reshape(-1, self.n, self.m).astype(np.int8)

    def index(self, matrix: OutcomeMatrix) -> int:
        k = 0
        for c in matrix.codes().ravel():
            k = 9 * k + int(c)
        return k


def enumerate_logical_distribution(
    params: CodeParams, table: PovmTable, trunc: FockTruncation | None = None
) -> LogicalEnumeration:
    """Exhaust all 9^(n m) outcome matrices for n m <= 6.

    Each logical Bell state expands into products of block Bell states over sign
    patterns with the right parity of minus signs; block states of different
    sign never interfere, so the probability is the pattern-weighted mixture of
    block probabilities. Pattern weights prod(1 +- u^2) are normalized by their
    own explicit sum.
    """
    n, m = params.n, params.m
    if n * m > MAX_LOGICAL_PLS:
        raise ParameterError(f"exhaustive enumeration capped at n*m <= {MAX_LOGICAL_PLS}")
    trunc = trunc or FockTruncation.for_alpha(params.alpha)
    block = enumerate_block_distribution(params, table, trunc)
    # rows of the block table in base-9 order of the pair codes
    block_probs = np.array([block[seq] for seq in sorted(block, key=lambda s: [3 * x + y for x, y in s])])
    u = _oracle_block_overlap(params.alpha, m, trunc)
    weight = {Sign.PLUS: 1.0 + u * u, Sign.MINUS: 1.0 - u * u}

    k = n * m
    idx = np.arange(9**k)
    rows = [(idx // 9 ** (m * (n - 1 - r))) % 9**m for r in range(n)]
    probs = np.zeros((9**k, 4))
    for target in BellState:
        total_w = 0.0
        acc = np.zeros(9**k)
        for pattern in itertools.product(Sign, repeat=n):
            n_minus = sum(s is Sign.MINUS for s in pattern)
            if (n_minus % 2 == 1) != (target.sign is Sign.MINUS):
                continue
            w = math.prod(weight[s] for s in pattern)
            total_w += w
            term = np.full(9**k, w)
            for r, s in enumerate(pattern):
                term *= block_probs[rows[r], BellState.from_parts(target.letter, s).value]
            acc += term
        probs[:, target.value] = acc / total_w
    return LogicalEnumeration(n=n, m=m, probs=probs)


# ---------------------------------------------------------------------------
# first principles: coherent-component expansion of the encoded Bell states


def _encoded_coefficients(n: int, m: int, b2: BellState) -> np.ndarray:
    """Coefficients of a logical Bell state over coherent components.

    |0_L> (|1_L>) is the n-fold product of |+~>^m + |-~>^m (minus), and the
    coefficient of |s_1 alpha, ..., s_m alpha> in |+~>^m +- |-~>^m is
    1 +- prod(s). Returned with one axis of length 4 per PLS, component index
    2*(s_A<0) + (s_B<0) matching ``pls_kernel``.
    """
    k = n * m
    signs = np.array(list(itertools.product((1, -1), repeat=k))).reshape(-1, n, m)
    block_par = signs.prod(axis=2)
    zero = np.prod(1 + block_par, axis=1).astype(float)
    one = np.prod(1 - block_par, axis=1).astype(float)
    s = 1.0 if b2.sign is Sign.PLUS else -1.0
    if b2.letter is Letter.PHI:
        coef = np.outer(zero, zero) + s * np.outer(one, one)
    else:
        coef = np.outer(zero, one) + s * np.outer(one, zero)
    # axes (A_1..A_k, B_1..B_k) -> interleave to (A_1, B_1, ..., A_k, B_k)
    coef = coef.reshape((2,) * (2 * k))
    order = [ax for q in range(k) for ax in (q, k + q)]
    return coef.transpose(order).reshape((4,) * k)


def _contract(coef: np.ndarray, mats: list[np.ndarray]) -> float:
    t = coef
    for q, mat in enumerate(mats):
        t = np.moveaxis(np.tensordot(mat, t, axes=([1], [q])), 0, q)
    return float(np.sum(coef * t))


def coherent_probability(
    params: CodeParams,
    loss: LossParams,
    matrix: OutcomeMatrix,
    b2: BellState,
    trunc: FockTruncation | None = None,
) -> float:
    """Pr(matrix | b2) from the full coherent-component expansion.

    Evaluates <B|prod M|B>/<B|B> with every PLS element taken from ``pls_kernel``.
    Cost grows as 4^(n m); capped at n m <= 9.
    """
    matrix.check_shape(params)
    k = params.n * params.m
    if k > MAX_COHERENT_PLS:
        raise ParameterError(f"coherent expansion capped at n*m <= {MAX_COHERENT_PLS}")
    trunc = trunc or FockTruncation.for_alpha(params.alpha)
    kern = pls_kernel(params.alpha, loss, trunc)
    gram = _gram_kernel(params.alpha, trunc)
    coef = _encoded_coefficients(params.n, params.m, b2)
    xs, ys = matrix.x.ravel(), matrix.y.ravel()
    num = _contract(coef, [kern[x, y] for x, y in zip(xs, ys)])
    den = _contract(coef, [gram] * k)
    return num / den


MAX_COHERENT_EXHAUSTIVE = 5


def enumerate_coherent_distribution(
    params: CodeParams, loss: LossParams, trunc: FockTruncation | None = None
) -> LogicalEnumeration:
    """Every outcome matrix at once from the coherent-component expansion.

    Pairs each bra component with each ket component per PLS (16 combinations)
    and contracts the PLS axes one at a time against the 9 outcome kernels.
    Memory grows as 16^(n m); capped at n m <= 5.
    """
    k = params.n * params.m
    if k > MAX_COHERENT_EXHAUSTIVE:
        raise ParameterError(f"exhaustive coherent expansion capped at n*m <= {MAX_COHERENT_EXHAUSTIVE}")
    trunc = trunc or FockTruncation.for_alpha(params.alpha)
    kern = pls_kernel(params.alpha, loss, trunc).reshape(9, 16)
    gram = _gram_kernel(params.alpha, trunc).reshape(16)
    probs = np.empty((9**k, 4))
    for b2 in BellState:
        coef = _encoded_coefficients(params.n, params.m, b2).reshape(-1)
        pair = np.outer(coef, coef).reshape((4,) * k + (4,) * k)
        order = [ax for q in range(k) for ax in (q, k + q)]
        t = pair.transpose(order).reshape((16,) * k)
        den = t
        for _ in range(k):
            den = np.tensordot(den, gram, axes=([0], [0]))
        for _ in range(k):
            # contracting the leading axis appends the outcome axis at the end
            t = np.tensordot(t, kern, axes=([0], [1]))
        probs[:, b2.value] = t.reshape(-1) / float(den)
    return LogicalEnumeration(n=params.n, m=params.m, probs=probs)


# ---------------------------------------------------------------------------
# exact decision statistics


def exact_decision_statistics(params: CodeParams, enum: LogicalEnumeration) -> dict[str, float]:
    """Exact p_i, p_x, p_y, p_z, p_fail and C_exp of the hardware-efficient scheme.

    Weights every outcome matrix by its exact probability under a uniform prior
    over the four initial logical Bell states.
    """
    from ._kernels import classify_batch, decide_batch

    codes = enum.codes()
    decision, cost_half = decide_batch(codes, params.n, params.m, params.j)
    out = dict.fromkeys(("p_i", "p_x", "p_y", "p_z", "p_fail"), 0.0)
    keys = ("p_i", "p_x", "p_y", "p_z", "p_fail")
    c_exp = 0.0
    for b in BellState:
        w = 0.25 * enum.probs[:, b.value]
        cat = classify_batch(np.full(len(codes), b.value, dtype=np.int8), decision)
        for c, key in enumerate(keys):
            out[key] += float(w[cat == c].sum())
        c_exp += float((w * cost_half).sum()) / 2.0
    out["c_exp"] = c_exp
    return out
