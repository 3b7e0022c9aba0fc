"""Validation suite behind ``catcbsm oracle-check``.

Each check compares a closed-form module against an oracle computation that
does not call it:

* povm:    ``build_povm_table`` vs truncated Fock sums.
* block:   the transfer-matrix block distribution vs literal permutation sums,
           plus normalization.
* logical: the batched logical distribution vs two exhaustive enumerations
           and vs the coherent-component expansion.
* sampler: product of sampler conditionals vs the joint probability, and the
           conditionals themselves vs marginals of the exhaustive enumeration.

Truncation errors are not caught; callers turn them into a nonzero exit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import BellState, CodeParams, LossParams, NumericalFault, OutcomeMatrix, ParameterError, Sign
from .dist import block_log_probability, block_vector, logical_log_probabilities_batch, logical_log_probability
from .oracle import (
    MAX_BLOCK_M,
    block_g_sums,
    FockTruncation,
    coherent_probability,
    enumerate_block_distribution,
    enumerate_coherent_distribution,
    enumerate_logical_distribution,
    oracle_povm_table,
)
from .povm import ELEMENT_NAMES, build_povm_table
from .sampler import advance, new_state, next_conditional_distribution, sample_outcome_matrix, sampler_constants

__all__ = ["CheckResult", "Violation", "ValidationReport", "LEVELS", "run_validation", "element_states"]

LEVELS = ("povm", "block", "logical", "sampler")

POVM_RTOL = 1e-8
POVM_ATOL = 1e-15  # floor for elements that vanish identically
DIST_TOL = 1e-10
CHAIN_RTOL = 1e-9
FIG2_SPACING = 1.0
ATT_LENGTH = 22.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    max_error: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class Violation:
    check: str
    case: dict
    value: float
    reference: float
    error: float

    def __str__(self) -> str:
        case = ", ".join(f"{k}={v}" for k, v in self.case.items())
        return f"{self.check}: {case}: value={self.value!r} reference={self.reference!r} error={self.error:.3g}"

    def as_dict(self) -> dict:
        return {"check": self.check, **self.case, "value": self.value, "reference": self.reference, "error": self.error}


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self, max_violations: int = 10) -> dict:
        return {
            "passed": self.passed,
            "checks": [c.__dict__ for c in self.checks],
            "violations": [v.as_dict() for v in self.violations[:max_violations]],
            "n_violations": len(self.violations),
        }


class _Tracker:
    """Accumulates one named check."""

    def __init__(self, report: ValidationReport, name: str, tol: float):
        self.report, self.name, self.tol = report, name, tol
        self.cases, self.max_error, self.ok = 0, 0.0, True

    def record(self, error: float, case: dict, value: float, reference: float) -> None:
        self.cases += 1
        if not error <= self.tol:  # NaN counts as a violation
            self.ok = False
            self.report.violations.append(Violation(self.name, case, float(value), float(reference), float(error)))
        if math.isfinite(error):
            self.max_error = max(self.max_error, error)
        else:
            self.max_error = math.inf

    def close(self) -> None:
        self.report.checks.append(CheckResult(self.name, self.cases, self.max_error, self.tol, self.ok))


def element_states(name: str) -> tuple[BellState, BellState]:
    """(B, B') such that element ``name`` is <B|M|B'>."""
    sign = name[-1]
    phi, psi = ("phi" + sign), ("psi" + sign)
    bra, ket = {"M11": (phi, phi), "M22": (psi, psi), "M12": (phi, psi)}[name[:3]]
    lookup = {str(b): b for b in BellState}
    return lookup[bra], lookup[ket]


def geometries(eta: float) -> list[tuple[str, LossParams]]:
    """Symmetric loss and one extra fiber span on either input.

    The reversed case (first input lossier) is the repeater station geometry,
    where the cross elements change sign.
    """
    extra = eta * math.exp(-FIG2_SPACING / ATT_LENGTH)
    return [
        ("symmetric", LossParams(eta, eta)),
        ("asymmetric", LossParams(eta, extra)),
        ("reversed", LossParams(extra, eta)),
    ]


def _trunc(alpha: float, n_max: int | None) -> FockTruncation:
    return FockTruncation(n_max) if n_max is not None else FockTruncation.for_alpha(alpha)


def check_povm(report: ValidationReport, alphas: Sequence[float], etas: Sequence[float], n_max: int | None) -> None:
    """Every element at every outcome pair, relative tolerance with a tiny floor."""
    tr = _Tracker(report, "povm_vs_fock", POVM_RTOL)
    for alpha in alphas:
        trunc = _trunc(alpha, n_max)
        for eta in etas:
            for geom, loss in geometries(eta):
                got = build_povm_table(alpha, loss).elements
                ref = oracle_povm_table(alpha, loss, trunc)
                for x in range(3):
                    for y in range(3):
                        for k, name in enumerate(ELEMENT_NAMES):
                            a, b = got[x, y, k], ref[x, y, k]
                            err = abs(a - b) / max(abs(b), POVM_ATOL / POVM_RTOL)
                            bra, ket = element_states(name)
                            case = {
                                "alpha": alpha, "eta1": loss.eta1, "eta2": loss.eta2, "geometry": geom,
                                "x": x, "y": y, "B": str(bra), "B_prime": str(ket), "element": name,
                            }  # fmt: skip
                            tr.record(err, case, a, b)
    tr.close()


def _check_losses(etas: Sequence[float]) -> list[LossParams]:
    # the reversed geometry has negative cross elements; the lowest eta the most loss
    eta = min(etas)
    return [geometries(eta)[2][1]]


def check_block(report: ValidationReport, alphas: Sequence[float], etas: Sequence[float], n_max: int | None) -> None:
    """Block probabilities vs permutation sums for m in {1, 3}, total mass per Bell
    state, and the raw vector recurrence for sequence lengths 1 to 4."""
    tr = _Tracker(report, "block_vs_permutation_sums", DIST_TOL)
    tn = _Tracker(report, "block_normalization", DIST_TOL)
    for alpha in alphas:
        for loss in _check_losses(etas):
            table = build_povm_table(alpha, loss)
            for m in (1, 3):
                params = CodeParams(1, m, alpha)
                enum = enumerate_block_distribution(params, table, _trunc(alpha, n_max))
                mass = np.zeros(4)
                for seq, ref in enum.items():
                    mass += ref
                    for b in BellState:
                        lp = block_log_probability(params, table, seq, b)
                        val = math.exp(lp)
                        err = abs(val - ref[b.value]) / max(ref[b.value], 1e-300) if ref[b.value] > 1e-12 else abs(val - ref[b.value])
                        tr.record(err, {"alpha": alpha, "eta1": loss.eta1, "eta2": loss.eta2, "seq": str(seq), "B": str(b)}, val, ref[b.value])
                for b in BellState:
                    tn.record(abs(mass[b.value] - 1.0), {"alpha": alpha, "m": m, "B": str(b)}, mass[b.value], 1.0)
    # the recurrence itself, for every sequence length up to the enumeration cap
    tv = _Tracker(report, "block_recurrence_vs_permutation_sums", DIST_TOL)
    rng = np.random.default_rng(0)
    for alpha in alphas:
        for loss in _check_losses(etas):
            table = build_povm_table(alpha, loss)
            for length in range(1, MAX_BLOCK_M + 1):
                for _ in range(50):
                    seq = [(int(c) // 3, int(c) % 3) for c in rng.integers(0, 9, length)]
                    for sign in Sign:
                        v = block_vector(table, seq, sign, renormalize=False).v
                        g = block_g_sums(table, seq, sign)
                        scale = max(abs(g[0]), abs(g[3]), 1e-300)
                        err = float(np.max(np.abs(v - g))) / scale
                        case = {"alpha": alpha, "eta1": loss.eta1, "eta2": loss.eta2, "seq": str(seq), "sign": sign.name}
                        tv.record(err, case, float(v[0]), float(g[0]))
    tr.close()
    tn.close()
    tv.close()


LOGICAL_SHAPES = ((1, 1), (3, 1), (5, 1), (1, 3), (1, 5))


def _compare_tables(tr: _Tracker, tn: _Tracker, case: dict, got: np.ndarray, ref: np.ndarray, source: str) -> None:
    diff = np.abs(got - ref)
    worst = np.unravel_index(int(np.argmax(diff)), diff.shape)
    where = {"matrix_index": int(worst[0]), "B": str(BellState(int(worst[1])))}
    tr.record(float(diff.max()), {**case, "reference": source, **where}, got[worst], ref[worst])
    for b in BellState:
        s = float(ref[:, b.value].sum())
        tn.record(abs(s - 1.0), {**case, "B": str(b), "source": source}, s, 1.0)


def check_logical(
    report: ValidationReport, alphas: Sequence[float], etas: Sequence[float], n_max: int | None, seed: int
) -> None:
    """Batched logical distribution vs exhaustive enumerations and coherent expansion.

    Two exhaustive references: block-level permutation sums mixed over block
    sign patterns (m <= 3), and the coherent-component expansion of every
    outcome matrix (n m <= 5).
    """
    tr = _Tracker(report, "logical_vs_enumeration", DIST_TOL)
    tn = _Tracker(report, "logical_normalization", DIST_TOL)
    tc = _Tracker(report, "logical_vs_coherent_expansion", CHAIN_RTOL)
    rng = np.random.default_rng(seed)
    alpha_set = sorted({alphas[0], alphas[len(alphas) // 2]})
    for alpha in alpha_set:
        for loss in _check_losses(etas):
            table = build_povm_table(alpha, loss)
            for n, m in LOGICAL_SHAPES:
                params = CodeParams(n, m, alpha)
                case = {"alpha": alpha, "eta1": loss.eta1, "eta2": loss.eta2, "n": n, "m": m}
                refs = [("coherent", enumerate_coherent_distribution(params, loss, _trunc(alpha, n_max)))]
                if m <= 3:
                    refs.append(("permutation", enumerate_logical_distribution(params, table, _trunc(alpha, n_max))))
                got = np.exp(logical_log_probabilities_batch(params, table, refs[0][1].codes()))
                for source, enum in refs:
                    _compare_tables(tr, tn, case, got, enum.probs, source)
                _compare_tables(tr, tn, case, got, got, "recurrence")
            # first-principles spot checks on a code too large to enumerate
            params = CodeParams(3, 3, alpha)
            for _ in range(4):
                b2 = BellState(int(rng.integers(4)))
                matrix = sample_outcome_matrix(params, table, b2, rng)
                ref = coherent_probability(params, loss, matrix, b2, _trunc(alpha, n_max))
                val = math.exp(logical_log_probability(params, table, matrix, b2))
                tc.record(abs(val - ref) / abs(ref), {"alpha": alpha, "n": 3, "m": 3, "B": str(b2), "codes": matrix.codes().tolist()}, val, ref)
    tr.close()
    tn.close()
    tc.close()


CHAIN_SHAPES = ((3, 3), (1, 5), (5, 1))


def chain_rule_error(params: CodeParams, table, matrix: OutcomeMatrix, b2: BellState, consts=None) -> tuple[float, float]:
    """(log product of conditionals, log joint) for one matrix; -inf on a zero conditional."""
    state = new_state(params, table, b2, consts)
    total = 0.0
    for code in matrix.codes().ravel():
        try:
            probs = next_conditional_distribution(state)
        except NumericalFault:
            return -math.inf, logical_log_probability(params, table, matrix, b2)
        if probs[code] <= 0.0:
            total = -math.inf
            break
        total += math.log(probs[code])
        advance(state, int(code))
    return total, logical_log_probability(params, table, matrix, b2)


def check_sampler(
    report: ValidationReport, alphas: Sequence[float], etas: Sequence[float], seed: int, n_matrices: int = 100
) -> None:
    """Chain rule on random matrices, conditionals vs enumerated marginals."""
    tr = _Tracker(report, "sampler_chain_rule", CHAIN_RTOL)
    tm = _Tracker(report, "sampler_vs_enumerated_marginals", DIST_TOL)
    rng = np.random.default_rng(seed)
    for alpha in alphas:
        for loss in _check_losses(etas):
            table = build_povm_table(alpha, loss)
            for n, m in CHAIN_SHAPES:
                params = CodeParams(n, m, alpha)
                consts = sampler_constants(params, table)
                for i in range(n_matrices):
                    b2 = BellState(int(rng.integers(4)))
                    if i % 2 == 0:
                        matrix = sample_outcome_matrix(params, table, b2, rng)
                    else:
                        matrix = OutcomeMatrix.from_codes(rng.integers(0, 9, size=(n, m)))
                    lp, lj = chain_rule_error(params, table, matrix, b2, consts)
                    if lj == -math.inf or lp == -math.inf:
                        err = 0.0 if lp == lj else math.inf
                    else:
                        err = abs(math.expm1(lp - lj))
                    case = {"alpha": alpha, "n": n, "m": m, "B": str(b2), "codes": matrix.codes().tolist()}
                    tr.record(err, case, lp, lj)
            for n, m in ((3, 1), (1, 3)):
                params = CodeParams(n, m, alpha)
                enum = enumerate_logical_distribution(params, table)
                K = n * m
                for b2 in BellState:
                    probs = enum.probs[:, b2.value]
                    matrix = sample_outcome_matrix(params, table, b2, rng)
                    flat = matrix.codes().ravel()
                    state = new_state(params, table, b2)
                    prefix = 0
                    for k in range(K):
                        marg = probs.reshape(9 ** (k + 1), 9 ** (K - k - 1)).sum(axis=1)
                        block = marg[9 * prefix : 9 * prefix + 9]
                        ref = block / block.sum()
                        got = next_conditional_distribution(state)
                        err = float(np.abs(got - ref).max())
                        tm.record(err, {"alpha": alpha, "n": n, "m": m, "B": str(b2), "prefix_length": k}, float(got.max()), float(ref.max()))
                        advance(state, int(flat[k]))
                        prefix = 9 * prefix + int(flat[k])
    tr.close()
    tm.close()


def run_validation(
    level: str = "all",
    alphas: Sequence[float] = (0.5, 1.0, 1.6, 2.0),
    etas: Sequence[float] = (0.8, 0.95, 0.99, 1.0),
    n_max: int | None = None,
    seed: int = 1,
) -> ValidationReport:
    """Run the checks of ``level`` (one of ``LEVELS`` or ``"all"``).

    Raises:
        ParameterError: unknown level.
        TruncationError: ``n_max`` too small for some amplitude.
    """
    if level != "all" and level not in LEVELS:
        raise ParameterError(f"level must be one of {LEVELS + ('all',)}, got {level!r}")
    alphas, etas = list(alphas), list(etas)
    if not alphas or not etas:
        raise ParameterError("empty alpha or eta grid")
    report = ValidationReport()
    todo = LEVELS if level == "all" else (level,)
    if "povm" in todo:
        check_povm(report, alphas, etas, n_max)
    if "block" in todo:
        check_block(report, alphas, etas, n_max)
    if "logical" in todo:
        check_logical(report, alphas, etas, n_max, seed)
    if "sampler" in todo:
        check_sampler(report, alphas, etas, seed)
    return report
