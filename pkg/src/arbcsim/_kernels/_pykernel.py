"""Pure-Python charging-profile kernel.

This is the reference transition; ``_core.pyx`` mirrors it line for line and
must stay bit-identical.
"""
import math

import numpy as np

TC, CC, CV, TERMINATED = 0, 1, 2, 3
REASON_NONE, REASON_MIN_CURRENT, REASON_CV_TIMER, REASON_CUTOFF = 0, 1, 2, 3

# Time comparisons tolerate accumulated rounding of repeated dt additions.
TIME_EPS_H = 1e-9

# Order of the packed profile parameters.
PARAM_FIELDS = (
    "v_tc_start", "v_tc_cc", "v_cv", "i_tc_max", "i_cc", "i_min",
    "tc_duration_h", "cv_decay_tau_h", "cv_timer_h", "session_cutoff_h",
    "cc_slope_v_per_mah",
)


def check_terminal(stage, i, t, prm):
    """Reason code if the state must stop before stepping, else 0."""
    if stage == CV and i < prm[5]:
        return REASON_MIN_CURRENT
    if t >= prm[9] - TIME_EPS_H:
        return REASON_CUTOFF
    return REASON_NONE


def advance(stage, i, v, q, t, tcv, dt, prm):
    """One profile tick. Returns (stage, i, v, q, t, tcv, reason)."""
    (v0, v_tc_cc, v_cv, i_tc_max, i_cc, i_min,
     tc_dur, tau, cv_timer, cutoff, slope) = prm
    reason = REASON_NONE
    q = q + i * dt
    t = t + dt
    if stage == TC:
        frac = t / tc_dur
        if frac >= 1.0 - TIME_EPS_H:
            stage = CC
            i = i_cc
            v = v_tc_cc
        else:
            i = i_tc_max * frac
            v = v0 + (v_tc_cc - v0) * frac
    elif stage == CC:
        v = v + slope * i * dt
        if v >= v_cv:
            stage = CV
            v = v_cv
            tcv = 0.0
    elif stage == CV:
        tcv = tcv + dt
        i = i_cc * math.exp(-tcv / tau)
        if i < i_min:
            stage = TERMINATED
            reason = REASON_MIN_CURRENT
        elif tcv >= cv_timer - TIME_EPS_H:
            stage = TERMINATED
            reason = REASON_CV_TIMER
    if stage != TERMINATED and t >= cutoff - TIME_EPS_H:
        stage = TERMINATED
        reason = REASON_CUTOFF
    return stage, i, v, q, t, tcv, reason


def profile_trajectory(prm, dt_h, max_ticks):
    """Run the profile from its initial state until it terminates.

    Returns ``(t, i, v, q, stage, reason)``; arrays hold the initial state,
    every intermediate state and the terminal state.
    """
    n = max_ticks + 1
    t_a = np.empty(n)
    i_a = np.empty(n)
    v_a = np.empty(n)
    q_a = np.empty(n)
    s_a = np.empty(n, dtype=np.int8)
    stage, i, v, q, t, tcv = TC, 0.0, prm[0], 0.0, 0.0, 0.0
    t_a[0], i_a[0], v_a[0], q_a[0], s_a[0] = t, i, v, q, stage
    k = 0
    reason = REASON_NONE
    while k < max_ticks:
        reason = check_terminal(stage, i, t, prm)
        if reason:
            stage = TERMINATED
            s_a[k] = stage
            break
        stage, i, v, q, t, tcv, reason = advance(stage, i, v, q, t, tcv, dt_h, prm)
        k += 1
        t_a[k], i_a[k], v_a[k], q_a[k], s_a[k] = t, i, v, q, stage
        if stage == TERMINATED:
            break
    else:
        raise RuntimeError(f"profile did not terminate within {max_ticks} ticks")
    k += 1
    return t_a[:k], i_a[:k], v_a[:k], q_a[:k], s_a[:k], reason
