"""Compiled hot loops: outcome sampling and hardware-efficient decisions.

Mirrors ``sampler`` and ``cbsm`` on flat integer arrays. Pair codes are 3x + y.
Decisions are coded 0..3 for a decoded Bell state (``BellState.value``) and
4 + (sign is minus) for a failure. Costs are counted in half units, so
tallies stay exact integers.

Block vectors keep three components (v1, v2, v4); v3 always equals v2.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

FAIL_PLUS = 4
FAIL_MINUS = 5


@njit(cache=True, nogil=True)
def _weights(
    out, v, lv, w, T3, q_last, k, Rp, Rm, logc, p_last, Dp_p, Dm_p, target_minus, target_psi
):
    """Unnormalized weights of the 9 candidate pairs at the current PLS."""
    # candidate vectors and xi for both signs
    xi = np.empty((2, 9))
    for s in range(2):
        a, b, c = v[s, 0], v[s, 1], v[s, 2]
        for cand in range(9):
            t = T3[s, cand]
            n1 = t[0, 0] * a + t[0, 1] * b + t[0, 2] * c
            n2 = t[1, 0] * a + t[1, 1] * b + t[1, 2] * c
            n4 = t[2, 0] * a + t[2, 1] * b + t[2, 2] * c
            if q_last:
                xi[s, cand] = n4 if target_psi else n1
            else:
                xi[s, cand] = Rp[s, k] * (n1 + n4) + 2.0 * Rm[s, k] * n2
    lp = lv[0] + logc[0]
    lm = lv[1] + logc[1]
    ref = max(lp, lm)
    sp = math.exp(lp - ref)
    sm = math.exp(lm - ref)
    w1, w2 = w[0], w[1]
    if p_last:
        if target_minus:
            cp, cm = w2, w1
        else:
            cp, cm = w1, w2
    else:
        if target_minus:
            cp = Dm_p * w1 + Dp_p * w2
            cm = Dm_p * w2 + Dp_p * w1
        else:
            cp = Dp_p * w1 + Dm_p * w2
            cm = Dp_p * w2 + Dm_p * w1
    total = 0.0
    for cand in range(9):
        val = sp * xi[0, cand] * cp + sm * xi[1, cand] * cm
        if val < 0.0:
            # only rounding can push a probability below zero
            val = 0.0
        out[cand] = val
        total += val
    return total


@njit(cache=True, nogil=True)
def sample_chunk(uniforms, initial_fixed, n, m, T3, Rp, Rm, Dp, Dm, logc, codes, initial):
    """Sample one outcome matrix per row of ``uniforms``.

    Args:
        uniforms: (B, n*m + 1) array in [0, 1); column 0 picks the initial Bell
            state, column 1 + p*m + q drives PLS (p, q) by inverse CDF.
        initial_fixed: Bell value to use for every trial, or -1 for uniform.
        T3: (2, 9, 3, 3) reduced transfer matrices.
        Rp, Rm: (2, m) trailing-sum factors R+_k, R-_k per sign.
        Dp, Dm: (n,) remaining-block factors D+, D- per block index.
        logc: (2,) m log(1 +- e^{-4 alpha^2}).
        codes: (B, n, m) int8 output.
        initial: (B,) int8 output.

    Returns:
        Number of trials where all candidate weights vanished (numerical fault).
    """
    n_rows = uniforms.shape[0]
    faults = 0
    v = np.empty((2, 3))
    lv = np.empty(2)
    w = np.empty(2)
    wt = np.empty(9)
    for r in range(n_rows):
        if initial_fixed >= 0:
            b = initial_fixed
        else:
            b = min(int(uniforms[r, 0] * 4.0), 3)
        initial[r] = b
        target_psi = b >= 2
        target_minus = b % 2 == 1
        w[0] = 1.0
        w[1] = 0.0
        col = 1
        for p in range(n):
            for s in range(2):
                v[s, 0] = 1.0
                v[s, 1] = 0.0
                v[s, 2] = 0.0
                lv[s] = 0.0
            p_last = p == n - 1
            for q in range(m):
                q_last = q == m - 1
                total = _weights(
                    wt, v, lv, w, T3, q_last, m - 1 - q, Rp, Rm, logc,
                    p_last, Dp[p], Dm[p], target_minus, target_psi,
                )
                if not total > 0.0:
                    faults += 1
                    total = 1.0
                    wt[:] = 1.0 / 9.0
                thresh = uniforms[r, col] * total
                col += 1
                acc = 0.0
                cand = 8
                for c in range(9):
                    acc += wt[c]
                    if thresh < acc:
                        cand = c
                        break
                # the sampled pair must have positive weight
                while wt[cand] <= 0.0 and cand > 0:
                    cand -= 1
                codes[r, p, q] = cand
                for s in range(2):
                    t = T3[s, cand]
                    a, bb, c = v[s, 0], v[s, 1], v[s, 2]
                    n1 = t[0, 0] * a + t[0, 1] * bb + t[0, 2] * c
                    n2 = t[1, 0] * a + t[1, 1] * bb + t[1, 2] * c
                    n4 = t[2, 0] * a + t[2, 1] * bb + t[2, 2] * c
                    scale = max(abs(n1), abs(n2), abs(n4))
                    if scale > 0.0:
                        v[s, 0] = n1 / scale
                        v[s, 1] = n2 / scale
                        v[s, 2] = n4 / scale
                        lv[s] += math.log(scale)
                    else:
                        v[s, 0] = 0.0
                        v[s, 1] = 0.0
                        v[s, 2] = 0.0
                        lv[s] = -np.inf
            # block finished: fold (L+, L-) into w
            lp = lv[0] + logc[0]
            lm = lv[1] + logc[1]
            cp = v[0, 2] if target_psi else v[0, 0]
            cm = v[1, 2] if target_psi else v[1, 0]
            ref = max(lp, lm)
            if ref == -np.inf:
                faults += 1
                ref = 0.0
            a_ = cp * math.exp(lp - ref) if lp > -np.inf else 0.0
            b_ = cm * math.exp(lm - ref) if lm > -np.inf else 0.0
            n1 = a_ * w[0] + b_ * w[1]
            n2 = b_ * w[0] + a_ * w[1]
            scale = max(abs(n1), abs(n2))
            if scale > 0.0:
                w[0] = n1 / scale
                w[1] = n2 / scale
    return faults


@njit(cache=True, nogil=True)
def _decide_one(codes_row, n, m, j):
    need = (m + 1) // 2
    collected = 0
    n_phi = 0
    n_psi_blocks = 0
    n_minus_blocks = 0
    cost_half = 0
    for p in range(n):
        full_mode = collected < j
        plus = 0
        minus = 0
        d = 0
        f = 0
        n_psi = 0
        for i in range(m):
            c = codes_row[p, i]
            x = c // 3
            y = c - 3 * x
            full = full_mode and f == 0
            if full:
                cost_half += 2
                if x == y:
                    f = i + 1
                elif x < y:
                    n_psi += 1
            else:
                cost_half += 1
            if (x + y) % 2 == 0:
                plus += 1
            else:
                minus += 1
            if d == 0 and (plus == need or minus == need):
                d = i + 1
            if d != 0 and ((not full_mode) or f != 0):
                break
        if plus < minus:
            n_minus_blocks += 1
        if full_mode and f == 0:
            collected += 1
            if n_psi % 2 == 1:
                n_psi_blocks += 1
            else:
                n_phi += 1
    minus_sign = n_minus_blocks % 2
    if n_phi == n_psi_blocks:
        return FAIL_PLUS + minus_sign, cost_half
    letter_psi = 1 if n_psi_blocks > n_phi else 0
    return 2 * letter_psi + minus_sign, cost_half


@njit(cache=True, nogil=True)
def decide_into(codes, n, m, j, decision, cost_half):
    for r in range(codes.shape[0]):
        dcs, ch = _decide_one(codes[r], n, m, j)
        decision[r] = dcs
        cost_half[r] = ch


@njit(cache=True, nogil=True)
def classify_into(initial, decision, category):
    for r in range(initial.shape[0]):
        d = decision[r]
        if d >= FAIL_PLUS:
            category[r] = 4
            continue
        b = initial[r]
        letter_ok = (d >= 2) == (b >= 2)
        sign_ok = (d % 2) == (b % 2)
        if letter_ok and sign_ok:
            category[r] = 0
        elif sign_ok:
            category[r] = 1
        elif letter_ok:
            category[r] = 3
        else:
            category[r] = 2


@njit(cache=True, nogil=True)
def tally_into(initial, decision, cost_half, counts, cost_by_cat, cost_sq_half, fail_sign_ok):
    """Accumulate categories and half-unit costs; all sums are integers."""
    for r in range(initial.shape[0]):
        d = decision[r]
        b = initial[r]
        if d >= FAIL_PLUS:
            cat = 4
            if (d - FAIL_PLUS) == (b % 2):
                fail_sign_ok[0] += 1
        else:
            letter_ok = (d >= 2) == (b >= 2)
            sign_ok = (d % 2) == (b % 2)
            if letter_ok and sign_ok:
                cat = 0
            elif sign_ok:
                cat = 1
            elif letter_ok:
                cat = 3
            else:
                cat = 2
        counts[cat] += 1
        ch = cost_half[r]
        cost_by_cat[cat] += ch
        cost_sq_half[0] += ch * ch


def decide_batch(codes: np.ndarray, n: int, m: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Hardware-efficient decisions for a stack of (n, m) pair-code matrices."""
    codes = np.ascontiguousarray(codes, dtype=np.int8)
    decision = np.empty(codes.shape[0], dtype=np.int8)
    cost_half = np.empty(codes.shape[0], dtype=np.int64)
    decide_into(codes, n, m, j, decision, cost_half)
    return decision, cost_half


def classify_batch(initial: np.ndarray, decision: np.ndarray) -> np.ndarray:
    """Category codes (``cbsm.Outcome`` values) for paired initial states and decisions."""
    category = np.empty(len(decision), dtype=np.int8)
    classify_into(np.ascontiguousarray(initial, dtype=np.int8), np.ascontiguousarray(decision, dtype=np.int8), category)
    return category
