"""Decision logic of the concatenated BSM and its cost accounting.

Two schemes decode the same outcome matrix:

* unoptimized: every PLS gets a full BSM. The block sign is the majority of the
  m signs and the block letter is the parity of the psi count (failed if any
  PLS failed). The logical sign is the parity of the number of minus blocks and
  the logical letter is the majority over the non-failed blocks.
* hardware-efficient: a block stops measuring once its outcome is settled,
  switches to cheaper sign-only measurements after a failure, and whole blocks
  are measured sign-only once j non-failed block letters are in hand.

Cost counts a full BSM as 1 and a sign-only BSM as 1/2.

These functions are the readable reference. ``_kernels`` holds the compiled
versions used by the Monte Carlo engine, and the test suite keeps them equal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

from .core import BellState, CodeParams, Letter, OutcomeMatrix, ParameterError, Sign
from .physbsm import PhysicalResult, interpret_full, interpret_sign_only

__all__ = [
    "Mode",
    "Outcome",
    "BlockDecision",
    "LogicalDecision",
    "unoptimized_block",
    "unoptimized_logical",
    "hardware_efficient_block",
    "hardware_efficient_logical",
    "classify",
]


class Mode(enum.Enum):
    FULL = "full"
    SIGN_ONLY = "sign_only"


class Outcome(enum.IntEnum):
    """Trial category; values are the tally indices."""

    SUCCESS = 0
    X_ERROR = 1
    Y_ERROR = 2
    Z_ERROR = 3
    FAILURE = 4


@dataclass(frozen=True)
class BlockDecision:
    """Result of one block-level BSM.

    Attributes:
        sign: majority sign.
        letter: decoded letter, None when the block failed or was sign-only.
        d: 1-based index where one sign first reached ceil(m/2) votes.
        f: 1-based index of the first failed PLS, None if no PLS failed.
        n_full: full BSMs performed.
        n_signonly: sign-only BSMs performed.
    """

    sign: Sign
    letter: Letter | None
    d: int
    f: int | None
    n_full: int
    n_signonly: int

    @property
    def failed(self) -> bool:
        return self.letter is None

    @property
    def cost(self) -> float:
        return self.n_full + 0.5 * self.n_signonly


@dataclass(frozen=True)
class LogicalDecision:
    """Result of a logical-level BSM; ``letter`` is None on failure."""

    sign: Sign
    letter: Letter | None
    blocks: tuple[BlockDecision, ...] = field(default=())

    @property
    def failed(self) -> bool:
        return self.letter is None

    @property
    def cost(self) -> float:
        return sum(b.n_full for b in self.blocks) + 0.5 * sum(b.n_signonly for b in self.blocks)

    def bell(self) -> BellState | None:
        return None if self.letter is None else BellState.from_parts(self.letter, self.sign)


def _majority_index(signs: Sequence[Sign]) -> tuple[Sign, int]:
    """Sign reaching ceil(len/2) first, and the 1-based index where it does."""
    need = (len(signs) + 1) // 2
    plus = minus = 0
    for i, s in enumerate(signs, start=1):
        if s is Sign.PLUS:
            plus += 1
        else:
            minus += 1
        if plus == need:
            return Sign.PLUS, i
        if minus == need:
            return Sign.MINUS, i
    raise ParameterError("sign majority needs an odd, non-empty sequence")


def unoptimized_block(results: Sequence[PhysicalResult]) -> BlockDecision:
    """Decode a block from m full physical results."""
    m = len(results)
    if m % 2 == 0:
        raise ParameterError(f"block needs an odd number of results, got {m}")
    sign, d = _majority_index([r.sign for r in results])
    f = next((i for i, r in enumerate(results, start=1) if r.failed), None)
    if f is not None:
        letter = None
    else:
        n_psi = sum(r.letter is Letter.PSI for r in results)
        letter = Letter.PSI if n_psi % 2 else Letter.PHI
    return BlockDecision(sign=sign, letter=letter, d=d, f=f, n_full=m, n_signonly=0)


def _vote(blocks: Sequence[BlockDecision]) -> Letter | None:
    n_phi = sum(b.letter is Letter.PHI for b in blocks)
    n_psi = sum(b.letter is Letter.PSI for b in blocks)
    if n_phi == n_psi:
        return None
    return Letter.PHI if n_phi > n_psi else Letter.PSI


def _parity_sign(blocks: Sequence[BlockDecision]) -> Sign:
    n_minus = sum(b.sign is Sign.MINUS for b in blocks)
    return Sign.MINUS if n_minus % 2 else Sign.PLUS


def unoptimized_logical(blocks: Sequence[BlockDecision]) -> LogicalDecision:
    """Combine n block decisions: sign by minus-count parity, letter by majority."""
    blocks = tuple(blocks)
    return LogicalDecision(sign=_parity_sign(blocks), letter=_vote(blocks), blocks=blocks)


def hardware_efficient_block(outcome_row: Sequence[tuple[int, int]], mode: Mode = Mode.FULL) -> BlockDecision:
    """Decode one block, consuming PLS outcomes left to right only while needed.

    Full mode measures with full BSMs until the first failure at f. If the sign
    was already settled (d <= f) the block stops there. Otherwise it continues
    with sign-only BSMs until the sign is settled at d. Without any failure all
    m PLSs get a full BSM and the letter follows the psi-count parity.

    SignOnly mode performs sign-only BSMs on the first d PLSs.
    """
    m = len(outcome_row)
    if m % 2 == 0:
        raise ParameterError(f"block needs an odd number of outcomes, got {m}")
    need = (m + 1) // 2
    plus = minus = 0
    d = f = None
    n_full = n_signonly = n_psi = 0
    for i, (x, y) in enumerate(outcome_row, start=1):
        full = mode is Mode.FULL and f is None
        res = interpret_full(x, y) if full else interpret_sign_only(x, y)
        if full:
            n_full += 1
            if res.failed:
                f = i
            elif res.letter is Letter.PSI:
                n_psi += 1
        else:
            n_signonly += 1
        if res.sign is Sign.PLUS:
            plus += 1
        else:
            minus += 1
        if d is None and (plus == need or minus == need):
            d = i
        # stop once the sign is settled unless full measurements still run
        if d is not None and (mode is Mode.SIGN_ONLY or f is not None):
            break
    sign = Sign.PLUS if plus > minus else Sign.MINUS
    if mode is Mode.FULL and f is None:
        letter = Letter.PSI if n_psi % 2 else Letter.PHI
    else:
        letter = None
    return BlockDecision(sign=sign, letter=letter, d=d, f=f, n_full=n_full, n_signonly=n_signonly)


def hardware_efficient_logical(outcome_matrix: OutcomeMatrix, params: CodeParams) -> LogicalDecision:
    """Full-mode blocks until j letters are collected, sign-only blocks after that.

    The letter is the majority of the collected letters. Fewer than j may be
    available when blocks fail; the vote then uses what was collected and fails
    on zero letters or a tie.
    """
    outcome_matrix.check_shape(params)
    blocks = []
    collected = 0
    for p in range(outcome_matrix.n):
        mode = Mode.FULL if collected < params.j else Mode.SIGN_ONLY
        blk = hardware_efficient_block(outcome_matrix.row(p), mode)
        collected += not blk.failed
        blocks.append(blk)
    blocks = tuple(blocks)
    return LogicalDecision(sign=_parity_sign(blocks), letter=_vote(blocks), blocks=blocks)


def classify(initial: BellState, decision: LogicalDecision) -> Outcome:
    """Compare a decision to the initial Bell state."""
    if decision.letter is None:
        return Outcome.FAILURE
    letter_ok = decision.letter is initial.letter
    sign_ok = decision.sign is initial.sign
    if letter_ok and sign_ok:
        return Outcome.SUCCESS
    if sign_ok:
        return Outcome.X_ERROR
    if letter_ok:
        return Outcome.Z_ERROR
    return Outcome.Y_ERROR
