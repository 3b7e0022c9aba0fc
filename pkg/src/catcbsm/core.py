"""Value types and encoding constants for the modified parity code.

A coherent-state qubit uses the basis {|alpha>, |-alpha>}. The (n, m, alpha)
code stacks three levels: n blocks per logical qubit, m physical-level spaces
(PLSs) per block, one coherent-state qubit per PLS. Everything downstream only
needs |alpha|^2, so alpha is kept real and positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import lru_cache

import numpy as np

__all__ = [
    "CBSMError",
    "ParameterError",
    "RangeError",
    "NumericalFault",
    "TruncationError",
    "Sign",
    "Letter",
    "BellState",
    "PnpdOutcome",
    "OutcomeMatrix",
    "CodeParams",
    "LossParams",
    "EncodingConstants",
    "encoding_constants",
]


class CBSMError(Exception):
    """Base class for all package errors."""


class ParameterError(CBSMError, ValueError):
    """Invalid input parameters (domain error)."""


class RangeError(ParameterError):
    """Parameters outside the range where the closed forms are representable."""


class NumericalFault(CBSMError, ArithmeticError):
    """A computation produced a result that valid inputs cannot produce."""


class TruncationError(NumericalFault):
    """A truncated Fock sum would drop more than the allowed tail mass."""


class Sign(IntEnum):
    PLUS = 1
    MINUS = -1

    def __neg__(self) -> Sign:  # type: ignore[override]
        return Sign.MINUS if self is Sign.PLUS else Sign.PLUS


class Letter(Enum):
    PHI = "phi"
    PSI = "psi"

    def flipped(self) -> Letter:
        return Letter.PSI if self is Letter.PHI else Letter.PHI


class BellState(Enum):
    """The four Bell states; the value is the integer code used by the kernels."""

    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    @property
    def letter(self) -> Letter:
        return Letter.PHI if self.value < 2 else Letter.PSI

    @property
    def sign(self) -> Sign:
        return Sign.PLUS if self.value % 2 == 0 else Sign.MINUS

    @classmethod
    def from_parts(cls, letter: Letter, sign: Sign) -> BellState:
        return cls(2 * (letter is Letter.PSI) + (sign is Sign.MINUS))

    def __str__(self) -> str:
        return ("phi" if self.letter is Letter.PHI else "psi") + ("+" if self.sign > 0 else "-")


class PnpdOutcome(IntEnum):
    """Photon-number parity detector result: no photon, odd count, even nonzero count."""

    ZERO = 0
    ODD = 1
    EVEN = 2


def _check_odd(name: str, value: int) -> None:
    if isinstance(value, bool) or int(value) != value or value < 1 or value % 2 == 0:
        raise ParameterError(f"{name} must be a positive odd integer, got {value!r}")


@dataclass(frozen=True)
class CodeParams:
    """Parameters (n, m, alpha) of the code plus the letter solidity j."""

    n: int
    m: int
    alpha: float
    j: int = 1

    def __post_init__(self) -> None:
        _check_odd("n", self.n)
        _check_odd("m", self.m)
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be a finite positive real, got {self.alpha!r}")
        if isinstance(self.j, bool) or int(self.j) != self.j or not 1 <= self.j <= self.n:
            raise ParameterError(f"j must be an integer in [1, n={self.n}], got {self.j!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True)
class LossParams:
    """Survival rates of the two modes entering a physical-level BSM."""

    eta1: float
    eta2: float

    def __post_init__(self) -> None:
        for name in ("eta1", "eta2"):
            eta = getattr(self, name)
            if not (isinstance(eta, (int, float)) and 0.0 < eta <= 1.0):
                raise ParameterError(f"{name} must lie in (0, 1], got {eta!r}")
            object.__setattr__(self, name, float(eta))

    @classmethod
    def symmetric(cls, eta: float) -> LossParams:
        return cls(eta, eta)


@dataclass(frozen=True)
class OutcomeMatrix:
    """PNPD results of one CBSM trial; ``entries[p, q] = (x, y)`` for block p, PLS q."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=np.int8)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ParameterError(f"outcome matrix must have shape (n, m, 2), got {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() > 2):
            raise ParameterError("PNPD outcomes must be 0, 1 or 2")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.entries[:, :, 0]

    @property
    def y(self) -> np.ndarray:
        return self.entries[:, :, 1]

    def row(self, p: int) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in self.entries[p]]

    def codes(self) -> np.ndarray:
        """Flattened pair codes 3x + y, shape (n, m)."""
        return (3 * self.entries[:, :, 0] + self.entries[:, :, 1]).astype(np.int8)

    @classmethod
    def from_codes(cls, codes: np.ndarray) -> OutcomeMatrix:
        codes = np.asarray(codes, dtype=np.int8)
        return cls(np.stack([codes // 3, codes % 3], axis=-1))

    def check_shape(self, params: CodeParams) -> None:
        if self.entries.shape[:2] != (params.n, params.m):
            raise ParameterError(
                f"outcome matrix is {self.n}x{self.m}, code expects {params.n}x{params.m}"
            )


@dataclass(frozen=True)
class EncodingConstants:
    """Normalization constants of the code.

    Attributes:
        u: overlap <+^(m)|-^(m)> of the normalized block basis states.
        Ntilde_plus: normalization of the logical Bell states with sign +.
        Ntilde_minus: normalization of the logical Bell states with sign -.
        overlap_phi_psi_plus: <phi+|psi+> of the physical-level Bell states.
        C_plus: sqrt(1 + u^2).
        C_minus: sqrt(1 - u^2).
    """

    u: float
    Ntilde_plus: float
    Ntilde_minus: float
    overlap_phi_psi_plus: float
    C_plus: float
    C_minus: float


def block_overlap(alpha: float, m: int) -> float:
    """u(alpha, m) = (A^m - B^m)/(A^m + B^m), A, B = 1 +- e^{-2 alpha^2}.

    Written as (1 - t^m)/(1 + t^m) with t = B/A = tanh(alpha^2) to avoid overflow.
    """
    tm = math.tanh(alpha * alpha) ** m
    return (1.0 - tm) / (1.0 + tm)


@lru_cache(maxsize=256)
def _constants(n: int, m: int, alpha: float) -> EncodingConstants:
    u = block_overlap(alpha, m)
    if not 0.0 < u < 1.0:
        raise RangeError(f"u(alpha={alpha}, m={m}) = {u} left (0, 1)")
    u2 = u * u
    u2n = u2**n
    scale = 2.0 ** (-(n - 1) / 2)
    e4 = math.exp(-4.0 * alpha * alpha)
    return EncodingConstants(
        u=u,
        Ntilde_plus=scale / math.sqrt(1.0 + u2n),
        Ntilde_minus=scale / math.sqrt(1.0 - u2n),
        overlap_phi_psi_plus=2.0 * math.exp(-2.0 * alpha * alpha) / (1.0 + e4),
        C_plus=math.sqrt(1.0 + u2),
        C_minus=math.sqrt(1.0 - u2),
    )


def encoding_constants(params: CodeParams) -> EncodingConstants:
    """Cached encoding constants for ``params`` (j does not enter)."""
    return _constants(params.n, params.m, params.alpha)
