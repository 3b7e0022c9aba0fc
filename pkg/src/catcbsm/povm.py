"""Closed-form POVM elements of the lossy physical-level BSM.

The measurement mixes the two coherent-state qubits on a 50:50 beam splitter and
reads both outputs with photon-number parity detectors. With photon loss eta1,
eta2 on the two inputs, the POVM element M_{x,y} restricted to the Bell basis
only couples states of equal sign, so per outcome pair there are six numbers:

    <phi+-|M|phi+->, <psi+-|M|psi+->, <phi+-|M|psi+->.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BellState, Letter, LossParams, ParameterError, RangeError, Sign

__all__ = [
    "PovmTable",
    "build_povm_table",
    "physical_outcome_probability",
    "loss_cross_factor",
    "ELEMENT_NAMES",
]

# column order of PovmTable.elements
ELEMENT_NAMES = ("M11+", "M11-", "M22+", "M22-", "M12+", "M12-")
_M11, _M22, _M12 = 0, 2, 4

# exp/sinh/cosh overflow beyond this argument
_MAX_EXPONENT = 700.0


def loss_cross_factor(eta: float, alpha: float) -> float:
    """Coherence factor e^{-2(1-eta)alpha^2} that loss leaves on |alpha><-alpha|."""
    return math.exp(-2.0 * (1.0 - eta) * alpha * alpha)


def _f(x: int, t: float, a2: float) -> float:
    # photon-number parity weights: f0 = 1, f1 = sinh, f2 = cosh - 1
    if x == 0:
        return 1.0
    if x == 1:
        return math.sinh(t * a2)
    return 2.0 * math.sinh(0.5 * t * a2) ** 2


@dataclass(frozen=True)
class PovmTable:
    """Bell-basis matrix elements of M_{x,y} for all nine outcome pairs.

    Attributes:
        alpha: coherent amplitude.
        eta1: survival rate of the first input mode.
        eta2: survival rate of the second input mode.
        elements: array of shape (3, 3, 6); ``elements[x, y]`` holds the values
            named in ``ELEMENT_NAMES``.
    """

    alpha: float
    eta1: float
    eta2: float
    elements: np.ndarray

    def element(self, x: int, y: int, name: str) -> float:
        return float(self.elements[x, y, ELEMENT_NAMES.index(name)])

    def diag(self, x: int, y: int, b: BellState) -> float:
        col = (_M11 if b.letter is Letter.PHI else _M22) + (b.sign is Sign.MINUS)
        return float(self.elements[x, y, col])

    def matrix_element(self, x: int, y: int, b: BellState, b_prime: BellState) -> float:
        """<b|M_{x,y}|b'>; real and symmetric in (b, b')."""
        if b.sign is not b_prime.sign:
            return 0.0
        if b.letter is b_prime.letter:
            return self.diag(x, y, b)
        return float(self.elements[x, y, _M12 + (b.sign is Sign.MINUS)])

    def bell_matrix(self, x: int, y: int) -> np.ndarray:
        """4x4 matrix of <b|M_{x,y}|b'> in BellState value order."""
        out = np.zeros((4, 4))
        for b in BellState:
            for bp in BellState:
                out[b.value, bp.value] = self.matrix_element(x, y, b, bp)
        return out

    def gram(self) -> np.ndarray:
        """Sum of ``bell_matrix`` over outcomes: the Bell-state Gram matrix."""
        return sum(self.bell_matrix(x, y) for x in range(3) for y in range(3))


def build_povm_table(alpha: float, loss: LossParams) -> PovmTable:
    """Evaluate the closed-form matrix elements for every outcome pair.

    Args:
        alpha: coherent amplitude, > 0.
        loss: survival rates of the two modes.

    Returns:
        The populated table.

    Raises:
        ParameterError: alpha not positive.
        RangeError: hyperbolic functions would overflow, or alpha is so small that
            the minus-sign Bell states are not normalizable in double precision.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise ParameterError(f"alpha must be a finite positive real, got {alpha!r}")
    eta1, eta2 = loss.eta1, loss.eta2
    a2 = alpha * alpha
    if a2 * max(eta1, eta2) * 2.0 > _MAX_EXPONENT or 4.0 * a2 > _MAX_EXPONENT:
        raise RangeError(f"alpha={alpha} outside the representable range")
    e4 = math.exp(-4.0 * a2)
    if 1.0 - e4 <= 1e-300:
        raise RangeError(f"alpha={alpha} too small to normalize the minus Bell states")

    pre = math.exp(-(eta1 + eta2) * a2)
    c = (pre / (1.0 + e4), pre / (1.0 - e4))
    env = math.exp(-2.0 * (2.0 - eta1 - eta2) * a2)
    g1, g2 = loss_cross_factor(eta1, a2**0.5), loss_cross_factor(eta2, a2**0.5)
    s1, s2 = math.sqrt(eta1), math.sqrt(eta2)
    eta_p = 0.5 * (s1 + s2) ** 2
    eta_m = 0.5 * (s1 - s2) ** 2
    # signed: the cross term picks up (-1) per sinh factor when eta1 < eta2
    kappa = 0.5 * (eta1 - eta2)

    el = np.zeros((3, 3, 6))
    for x in range(3):
        for y in range(3):
            par = -1.0 if (x + y) % 2 else 1.0
            fpm = _f(x, eta_p, a2) * _f(y, eta_m, a2)
            fmp = _f(x, eta_m, a2) * _f(y, eta_p, a2)
            fk = _f(x, kappa, a2) * _f(y, kappa, a2)
            for k, s in enumerate((1.0, -1.0)):
                diag = c[k] * (1.0 + s * par * env)
                el[x, y, _M11 + k] = diag * fpm
                el[x, y, _M22 + k] = diag * fmp
                el[x, y, _M12 + k] = c[k] * (s * par * g1 + g2) * fk
    el.setflags(write=False)
    return PovmTable(alpha=float(alpha), eta1=eta1, eta2=eta2, elements=el)


def physical_outcome_probability(table: PovmTable, x: int, y: int, b: BellState) -> float:
    """Pr(x, y | b) = <b|M_{x,y}|b>."""
    return table.diag(int(x), int(y), b)
