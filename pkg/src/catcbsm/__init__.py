"""Simulation of concatenated Bell-state measurement on coherent-state cat-code qubits.

Exact POVM elements and outcome distributions, an exact sequential sampler,
the hardware-efficient decision rule, a deterministic parallel Monte Carlo
engine and repeater performance metrics.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    BellState,
    CBSMError,
    CodeParams,
    Letter,
    LossParams,
    NumericalFault,
    OutcomeMatrix,
    ParameterError,
    RangeError,
    Sign,
    TruncationError,
    encoding_constants,
)
from .povm import PovmTable, build_povm_table


def version_string() -> str:
    """Version plus the git revision of the source tree when one is available."""
    import subprocess
    from pathlib import Path

    try:
        rev = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+g{rev}" if rev else __version__


__all__ = [
    "__version__",
    "version_string",
    "BellState",
    "CBSMError",
    "CodeParams",
    "Letter",
    "LossParams",
    "NumericalFault",
    "OutcomeMatrix",
    "ParameterError",
    "RangeError",
    "Sign",
    "TruncationError",
    "encoding_constants",
    "PovmTable",
    "build_povm_table",
]
