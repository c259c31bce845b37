# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled charging-profile kernel; mirrors ``_pykernel`` exactly."""
import numpy as np

from libc.math cimport exp

cdef enum:
    TC = 0
    CC = 1
    CV = 2
    TERMINATED = 3

cdef double TIME_EPS_H = 1e-9


def profile_trajectory(tuple prm, double dt_h, Py_ssize_t max_ticks):
    cdef double v0 = prm[0], v_tc_cc = prm[1], v_cv = prm[2]
    cdef double i_tc_max = prm[3], i_cc = prm[4], i_min = prm[5]
    cdef double tc_dur = prm[6], tau = prm[7], cv_timer = prm[8]
    cdef double cutoff = prm[9], slope = prm[10]

    cdef Py_ssize_t n = max_ticks + 1
    t_arr = np.empty(n)
    i_arr = np.empty(n)
    v_arr = np.empty(n)
    q_arr = np.empty(n)
    s_arr = np.empty(n, dtype=np.int8)
    cdef double[::1] t_a = t_arr, i_a = i_arr, v_a = v_arr, q_a = q_arr
    cdef signed char[::1] s_a = s_arr

    cdef int stage = TC
    cdef int reason = 0
    cdef double i = 0.0, v = v0, q = 0.0, t = 0.0, tcv = 0.0, frac
    cdef Py_ssize_t k = 0
    cdef bint done = False
    t_a[0] = t; i_a[0] = i; v_a[0] = v; q_a[0] = q; s_a[0] = stage

    with nogil:
        while k < max_ticks:
            if stage == CV and i < i_min:
                reason = 1
            elif t >= cutoff - TIME_EPS_H:
                reason = 3
            if reason:
                stage = TERMINATED
                s_a[k] = stage
                done = True
                break

            q = q + i * dt_h
            t = t + dt_h
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
                v = v + slope * i * dt_h
                if v >= v_cv:
                    stage = CV
                    v = v_cv
                    tcv = 0.0
            elif stage == CV:
                tcv = tcv + dt_h
                i = i_cc * exp(-tcv / tau)
                if i < i_min:
                    stage = TERMINATED
                    reason = 1
                elif tcv >= cv_timer - TIME_EPS_H:
                    stage = TERMINATED
                    reason = 2
            if stage != TERMINATED and t >= cutoff - TIME_EPS_H:
                stage = TERMINATED
                reason = 3

            k += 1
            t_a[k] = t; i_a[k] = i; v_a[k] = v; q_a[k] = q; s_a[k] = stage
            if stage == TERMINATED:
                done = True
                break

    if not done:
        raise RuntimeError(f"profile did not terminate within {max_ticks} ticks")
    k += 1
    return t_arr[:k], i_arr[:k], v_arr[:k], q_arr[:k], s_arr[:k], reason
