"""Interpretation of a single physical-level BSM.

The beam-splitter outputs are read by two parity detectors with results
(x, y) in {0, 1, 2}. The parity of x + y fixes the sign of the Bell state.
Comparing x with y fixes the letter: photons only in the first output mean
phi, only in the second mean psi, and x = y is a failure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import BellState, Letter, Sign

__all__ = ["PhysicalResult", "interpret_full", "interpret_sign_only", "exact_physical_statistics"]


@dataclass(frozen=True)
class PhysicalResult:
    """Decoded physical-level result; ``letter`` is None when undetermined."""

    sign: Sign
    letter: Letter | None

    @property
    def failed(self) -> bool:
        return self.letter is None

    def bell(self) -> BellState | None:
        return None if self.letter is None else BellState.from_parts(self.letter, self.sign)


def _sign(x: int, y: int) -> Sign:
    return Sign.PLUS if (x + y) % 2 == 0 else Sign.MINUS


def interpret_full(x: int, y: int) -> PhysicalResult:
    """Full BSM: sign from parity of x + y, letter from comparing x and y."""
    if x > y:
        letter = Letter.PHI
    elif x < y:
        letter = Letter.PSI
    else:
        letter = None
    return PhysicalResult(_sign(x, y), letter)


def interpret_sign_only(x: int, y: int) -> PhysicalResult:
    """Sign-only BSM: only the parity of the total photon number is read."""
    return PhysicalResult(_sign(x, y), None)


def exact_physical_statistics(table) -> dict[str, float]:
    """Exact success, error and failure probabilities of one physical BSM.

    Averages over the four Bell states with equal weight and classifies each
    outcome pair by ``interpret_full``. No sampling.

    Args:
        table: a ``povm.PovmTable``.
    """
    out = dict.fromkeys(("p_i", "p_x", "p_y", "p_z", "p_fail"), 0.0)
    for b in BellState:
        for x in range(3):
            for y in range(3):
                prob = 0.25 * table.diag(x, y, b)
                res = interpret_full(x, y)
                if res.failed:
                    key = "p_fail"
                else:
                    letter_ok = res.letter is b.letter
                    sign_ok = res.sign is b.sign
                    key = {(True, True): "p_i", (False, True): "p_x", (True, False): "p_z", (False, False): "p_y"}[
                        (letter_ok, sign_ok)
                    ]
                out[key] += prob
    return out
