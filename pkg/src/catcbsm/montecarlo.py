"""Monte Carlo trial engine for the hardware-efficient CBSM.

Trial t draws its uniforms from chunk t // CHUNK_SIZE. Chunk c has its own
Philox stream seeded by SeedSequence(seed, spawn_key=(c,)), so the uniforms of
a trial depend only on (seed, t). Results are therefore identical for any
worker count and for any split of a trial range into sub-ranges. Costs are
tallied in half units as Python integers, which keeps every merge exact.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import BellState, CodeParams, LossParams, NumericalFault, ParameterError
from .povm import build_povm_table
from .sampler import sampler_constants

__all__ = ["CHUNK_SIZE", "TrialTally", "Interval", "EstimateSet", "run_trials", "run_trial_range", "estimate", "chunk_uniforms"]

CHUNK_SIZE = 4096
CATEGORIES = ("success", "x_err", "y_err", "z_err", "fail")
Z95 = 1.959963984540054


@dataclass(frozen=True)
class TrialTally:
    """Exact counts of one or more batches of trials.

    Attributes:
        counts: trials per category, in ``CATEGORIES`` order.
        cost_half_by_cat: summed cost per category, in half units.
        cost_sq_quarter: summed squared cost, in quarter units.
        fail_sign_ok: failures whose logical sign was still correct.
        n_trials: total trials.
    """

    counts: tuple[int, ...] = (0, 0, 0, 0, 0)
    cost_half_by_cat: tuple[int, ...] = (0, 0, 0, 0, 0)
    cost_sq_quarter: int = 0
    fail_sign_ok: int = 0
    n_trials: int = 0

    def __post_init__(self) -> None:
        if sum(self.counts) != self.n_trials:
            raise ParameterError("tally counts must sum to n_trials")

    def __add__(self, other: TrialTally) -> TrialTally:
        return TrialTally(
            counts=tuple(a + b for a, b in zip(self.counts, other.counts)),
            cost_half_by_cat=tuple(a + b for a, b in zip(self.cost_half_by_cat, other.cost_half_by_cat)),
            cost_sq_quarter=self.cost_sq_quarter + other.cost_sq_quarter,
            fail_sign_ok=self.fail_sign_ok + other.fail_sign_ok,
            n_trials=self.n_trials + other.n_trials,
        )

    @property
    def cost_sum(self) -> float:
        return sum(self.cost_half_by_cat) / 2

    @property
    def cost_sq_sum(self) -> float:
        return self.cost_sq_quarter / 4

    def as_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "counts": dict(zip(CATEGORIES, self.counts)),
            "cost_sum": self.cost_sum,
            "cost_sq_sum": self.cost_sq_sum,
            "cost_sum_by_category": {k: v / 2 for k, v in zip(CATEGORIES, self.cost_half_by_cat)},
            "fail_sign_correct": self.fail_sign_ok,
        }


@dataclass(frozen=True)
class Interval:
    """Point estimate with a symmetric 95% confidence half-width."""

    value: float
    ci: float

    @property
    def low(self) -> float:
        return self.value - self.ci

    @property
    def high(self) -> float:
        return self.value + self.ci


@dataclass(frozen=True)
class EstimateSet:
    """Category probabilities and expected cost with 95% CIs.

    ``cov`` is the estimated covariance of (p_i, p_x, p_y, p_z, p_fail, c_exp),
    used for delta-method propagation downstream.
    """

    p_i: Interval
    p_x: Interval
    p_y: Interval
    p_z: Interval
    p_fail: Interval
    c_exp: Interval
    n_trials: int
    cov: np.ndarray = field(repr=False)

    def probabilities(self) -> np.ndarray:
        return np.array([self.p_i.value, self.p_x.value, self.p_y.value, self.p_z.value, self.p_fail.value])

    def as_dict(self) -> dict:
        out = {}
        for key in ("p_i", "p_x", "p_y", "p_z", "p_fail", "c_exp"):
            iv = getattr(self, key)
            out[key] = iv.value
            out[key + "_ci"] = iv.ci
        out["n_trials"] = self.n_trials
        return out


def chunk_uniforms(seed: int, chunk: int, rows: int, width: int) -> np.ndarray:
    """Uniforms of the first ``rows`` trials of ``chunk``."""
    ss = np.random.SeedSequence(seed, spawn_key=(chunk,))
    return np.random.Generator(np.random.Philox(ss)).random((rows, width))


def _run_chunk(args) -> TrialTally:
    seed, chunk, lo, hi, n, m, j, consts, initial_fixed = args
    width = n * m + 1
    u = chunk_uniforms(seed, chunk, hi, width)[lo:hi]
    rows = hi - lo
    codes = np.empty((rows, n, m), dtype=np.int8)
    initial = np.empty(rows, dtype=np.int8)
    faults = _kernels.sample_chunk(
        u, initial_fixed, n, m, consts.T3, consts.Rp, consts.Rm, consts.Dp, consts.Dm, consts.logc, codes, initial
    )
    if faults:
        raise NumericalFault(f"{faults} trials hit all-zero conditional weights in chunk {chunk}")
    decision, cost_half = _kernels.decide_batch(codes, n, m, j)
    counts = np.zeros(5, dtype=np.int64)
    by_cat = np.zeros(5, dtype=np.int64)
    sq = np.zeros(1, dtype=np.int64)
    fail_ok = np.zeros(1, dtype=np.int64)
    _kernels.tally_into(initial, decision, cost_half, counts, by_cat, sq, fail_ok)
    return TrialTally(
        counts=tuple(int(c) for c in counts),
        cost_half_by_cat=tuple(int(c) for c in by_cat),
        cost_sq_quarter=int(sq[0]),
        fail_sign_ok=int(fail_ok[0]),
        n_trials=rows,
    )


def run_trial_range(
    params: CodeParams,
    loss: LossParams,
    start: int,
    stop: int,
    seed: int,
    threads: int = 1,
    initial: BellState | None = None,
) -> TrialTally:
    """Run trials with global indices [start, stop).

    Args:
        params: code parameters including j.
        loss: survival rates of the two BSM inputs.
        start, stop: trial index range.
        seed: master seed (non-negative integer).
        threads: worker threads; results do not depend on it.
        initial: fix the initial logical Bell state instead of drawing it
            uniformly (for validation).
    """
    if not 0 <= start <= stop:
        raise ParameterError(f"invalid trial range [{start}, {stop})")
    if int(seed) != seed or seed < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")
    if threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")
    table = build_povm_table(params.alpha, loss)
    consts = sampler_constants(params, table)
    fixed = -1 if initial is None else initial.value
    tasks = []
    for chunk in range(start // CHUNK_SIZE, (stop + CHUNK_SIZE - 1) // CHUNK_SIZE):
        base = chunk * CHUNK_SIZE
        lo, hi = max(start, base) - base, min(stop, base + CHUNK_SIZE) - base
        tasks.append((int(seed), chunk, lo, hi, params.n, params.m, params.j, consts, fixed))
    total = TrialTally()
    if threads == 1 or len(tasks) <= 1:
        for t in tasks:
            total = total + _run_chunk(t)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(_run_chunk, tasks):
                total = total + part
    return total


def run_trials(
    params: CodeParams,
    loss: LossParams,
    n_trials: int,
    seed: int,
    threads: int = 1,
    initial: BellState | None = None,
) -> TrialTally:
    """Run ``n_trials`` trials: uniform initial Bell state, sampled outcomes,
    hardware-efficient decision, classification and cost."""
    if n_trials < 1:
        raise ParameterError(f"n_trials must be >= 1, got {n_trials}")
    return run_trial_range(params, loss, 0, n_trials, seed, threads=threads, initial=initial)


def _proportion(count: int, n: int) -> Interval:
    p = count / n
    if count == 0 or count == n:
        # rule of three for an empty (or full) category
        return Interval(p, 3.0 / n)
    return Interval(p, Z95 * math.sqrt(p * (1.0 - p) / n))


def estimate(tally: TrialTally) -> EstimateSet:
    """Point estimates and normal-approximation 95% CIs.

    Zero-count categories get the rule-of-three half-width 3/n, and the
    matching variance in ``cov``. The cost CI uses the sample variance. Warns
    below 100 trials.
    """
    n = tally.n_trials
    if n < 1:
        raise ParameterError("cannot estimate from an empty tally")
    if n < 100:
        warnings.warn(f"only {n} trials; confidence intervals are unreliable", stacklevel=2)
    p = np.array(tally.counts, dtype=float) / n
    cost_by_cat = np.array(tally.cost_half_by_cat, dtype=float) / 2.0
    c_mean = cost_by_cat.sum() / n
    c_var = max(tally.cost_sq_sum / n - c_mean * c_mean, 0.0) * (n / (n - 1) if n > 1 else 1.0)
    cov = np.zeros((6, 6))
    cov[:5, :5] = (np.diag(p) - np.outer(p, p)) / n
    cross = (cost_by_cat / n - p * c_mean) / n
    cov[:5, 5] = cov[5, :5] = cross
    cov[5, 5] = c_var / n
    for k, c in enumerate(tally.counts):
        if c == 0 or c == n:
            # same rule of three as the reported interval
            cov[k, k] = (3.0 / n / Z95) ** 2
    probs = [_proportion(c, n) for c in tally.counts]
    return EstimateSet(
        p_i=probs[0],
        p_x=probs[1],
        p_y=probs[2],
        p_z=probs[3],
        p_fail=probs[4],
        c_exp=Interval(c_mean, Z95 * math.sqrt(c_var / n)),
        n_trials=n,
        cov=cov,
    )
