"""Repeater performance metrics and parameter sweeps.

A chain of L/L0 stations each performs one CBSM between the incoming logical
qubit (after L0 of fiber) and half of a locally prepared Bell pair. Per-station
error statistics compound over the chain into a key rate per time slot
(Rt0) and a total cost per secret bit (Q_tot).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import CBSMError, CodeParams, LossParams, ParameterError
from .montecarlo import EstimateSet, Interval, estimate, run_trials

__all__ = [
    "RepeaterParams",
    "PerfMetrics",
    "station_loss",
    "binary_entropy",
    "performance",
    "performance_point",
    "RepeaterGrid",
    "SweepResult",
    "point_seed",
    "sweep",
]

Z95 = 1.959963984540054


@dataclass(frozen=True)
class RepeaterParams:
    """Chain geometry. Lengths in km."""

    L_total: float
    L0: float
    eta0: float
    L_att: float = 22.0

    def __post_init__(self) -> None:
        if not (self.L_total > 0 and self.L_att > 0):
            raise ParameterError("L_total and L_att must be positive")
        if not 0 <= self.L0 <= self.L_total:
            raise ParameterError(f"L0 must lie in [0, L_total], got {self.L0}")
        if not 0 < self.eta0 <= 1:
            raise ParameterError(f"eta0 must lie in (0, 1], got {self.eta0}")

    @property
    def stations(self) -> float:
        """L/L0 as a real number."""
        if self.L0 <= 0:
            raise ParameterError("L0 must be positive to count stations")
        return self.L_total / self.L0


@dataclass(frozen=True)
class PerfMetrics:
    """Chain performance with 95% CIs from the delta method."""

    P_s: Interval
    Q_x: Interval
    Q_z: Interval
    Q: Interval
    Rt0: Interval
    Q_tot: Interval

    def as_dict(self) -> dict:
        out = {}
        for key in ("P_s", "Q_x", "Q_z", "Q", "Rt0", "Q_tot"):
            iv = getattr(self, key)
            out[key] = iv.value
            out[key + "_ci"] = iv.ci
        return out


def station_loss(rp: RepeaterParams) -> LossParams:
    """(eta1, eta2) = (eta0 e^{-L0/L_att}, eta0): traveled qubit, local Bell half."""
    return LossParams(rp.eta0 * math.exp(-rp.L0 / rp.L_att), rp.eta0)


def binary_entropy(q: float) -> float:
    """h(q) in bits with h(0) = h(1) = 0."""
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def _qber(base: float, stations: float) -> float:
    # a non-positive per-station bias leaves no correlation after the chain
    if base <= 0.0:
        return 0.5
    return 0.5 * (1.0 - min(base, 1.0) ** stations)


def _metrics(x: np.ndarray, stations: float) -> np.ndarray:
    """(P_s, Q_x, Q_z, Q, Rt0, Q_tot) from (p_i, p_x, p_y, p_z, p_fail, c_exp)."""
    p_i, p_x, p_y, p_z, p_fail, c_exp = x
    p_s = max(1.0 - p_fail, 0.0) ** stations
    norm = p_i + p_x + p_z + p_y
    if norm <= 0.0:
        q_x = q_z = 0.5
    else:
        q_x = _qber((p_i - p_x + p_z - p_y) / norm, stations)
        q_z = _qber((p_i + p_x - p_z - p_y) / norm, stations)
    q = 0.5 * (q_x + q_z)
    rt0 = max(p_s * (1.0 - 2.0 * binary_entropy(q)), 0.0)
    q_tot = c_exp * stations / rt0 if rt0 > 0.0 else math.inf
    return np.array([p_s, q_x, q_z, q, rt0, q_tot])


def performance(est: EstimateSet, rp: RepeaterParams) -> PerfMetrics:
    """Per-chain metrics from per-station estimates.

    The exponent L/L0 is real. CIs propagate the joint covariance of the
    category probabilities and the cost through a central-difference gradient.
    Rt0 = 0 gives Q_tot = +inf rather than an error.
    """
    stations = rp.stations
    x = np.array([*est.probabilities(), est.c_exp.value])
    f0 = _metrics(x, stations)
    grad = np.zeros((6, 6))
    for k in range(6):
        h = 1e-7 * max(abs(x[k]), 1e-6)
        up, dn = x.copy(), x.copy()
        up[k] += h
        dn[k] = max(dn[k] - h, 0.0)
        fu, fd = _metrics(up, stations), _metrics(dn, stations)
        with np.errstate(invalid="ignore"):
            grad[:, k] = (fu - fd) / (up[k] - dn[k])
    ivs = []
    for r in range(6):
        if not math.isfinite(f0[r]):
            ivs.append(Interval(math.inf, math.inf))
            continue
        g = grad[r]
        var = float(g @ est.cov @ g) if np.all(np.isfinite(g)) else math.inf
        ivs.append(Interval(float(f0[r]), Z95 * math.sqrt(max(var, 0.0))))
    return PerfMetrics(*ivs)


def performance_point(
    params: CodeParams, rp: RepeaterParams, n_trials: int, seed: int, threads: int = 1
) -> tuple[EstimateSet, PerfMetrics]:
    """Simulate one grid point and evaluate the chain metrics."""
    est = estimate(run_trials(params, station_loss(rp), n_trials, seed, threads=threads))
    return est, performance(est, rp)


@dataclass(frozen=True)
class RepeaterGrid:
    """Cartesian grid over code parameters and station spacing."""

    n: Sequence[int]
    m: Sequence[int]
    alpha: Sequence[float]
    j: Sequence[int]
    L0: Sequence[float]

    def points(self) -> list[tuple[int, int, float, int, float]]:
        pts = list(itertools.product(self.n, self.m, self.alpha, self.j, self.L0))
        if not pts:
            raise ParameterError("empty parameter grid")
        return pts


def point_seed(seed: int, index: int) -> int:
    """Seed of grid point ``index``, derived from the master seed."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass
class SweepResult:
    """Rows of a sweep plus the indices of the optima (None if no valid row)."""

    rows: list[dict]
    best_q_tot: int | None = None
    best_rt0: int | None = None
    q_tot_overlaps: list[int] = field(default_factory=list)
    rt0_overlaps: list[int] = field(default_factory=list)

    def optimum_record(self) -> dict:
        def pick(i: int | None) -> dict | None:
            return None if i is None else self.rows[i]

        return {
            "min_Q_tot": pick(self.best_q_tot),
            "min_Q_tot_ci_overlaps": [self.rows[i] for i in self.q_tot_overlaps],
            "max_Rt0": pick(self.best_rt0),
            "max_Rt0_ci_overlaps": [self.rows[i] for i in self.rt0_overlaps],
        }


def _overlapping(rows: list[dict], best: int, key: str) -> list[int]:
    lo, hi = rows[best][key] - rows[best][key + "_ci"], rows[best][key] + rows[best][key + "_ci"]
    out = []
    for i, r in enumerate(rows):
        if i == best or r.get("status") != "ok" or not math.isfinite(r[key]):
            continue
        if r[key] - r[key + "_ci"] <= hi and r[key] + r[key + "_ci"] >= lo:
            out.append(i)
    return out


def sweep(
    grid: RepeaterGrid,
    L_total: float,
    eta0: float,
    n_trials: int,
    seed: int,
    L_att: float = 22.0,
    threads: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> SweepResult:
    """Evaluate every grid point and locate min Q_tot and max Rt0.

    Points that cannot be evaluated (e.g. j > n) are kept as rows with an error
    status; the sweep continues. Grid points whose CI overlaps the optimum's
    are listed, since point estimates alone do not separate them.
    """
    rows = []
    pts = grid.points()
    for idx, (n, m, alpha, j, L0) in enumerate(pts):
        row = {"n": n, "m": m, "alpha": alpha, "j": j, "L0": L0, "L": L_total, "eta0": eta0, "Latt": L_att}
        pseed = point_seed(seed, idx)
        row["point_seed"] = pseed
        row["trials"] = n_trials
        try:
            params = CodeParams(n, m, alpha, j)
            rp = RepeaterParams(L_total, L0, eta0, L_att)
            loss = station_loss(rp)
            row["eta1"], row["eta2"] = loss.eta1, loss.eta2
            est, perf = performance_point(params, rp, n_trials, pseed, threads=threads)
            row.update(est.as_dict())
            row.update(perf.as_dict())
            row["status"] = "ok"
        except CBSMError as exc:
            row["status"] = f"error: {exc}"
        rows.append(row)
        if progress is not None:
            progress(idx + 1, len(pts))
    ok = [i for i, r in enumerate(rows) if r["status"] == "ok"]
    res = SweepResult(rows=rows)
    if ok:
        res.best_q_tot = min(ok, key=lambda i: (rows[i]["Q_tot"], i))
        res.best_rt0 = max(ok, key=lambda i: (rows[i]["Rt0"], -i))
        if math.isfinite(rows[res.best_q_tot]["Q_tot"]):
            res.q_tot_overlaps = _overlapping(rows, res.best_q_tot, "Q_tot")
        res.rt0_overlaps = _overlapping(rows, res.best_rt0, "Rt0")
    return res
