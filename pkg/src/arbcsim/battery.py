"""Li-ion CC-CV charging profile as a discrete-time state machine.

Trajectory shapes: linear trickle ramp in time, constant-current stage with
voltage linear in delivered charge, exponential current decay at constant
voltage.  Units: mA, V, mAh, hours.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .constants import CC_CV_THRESHOLD_V, MIN_CURRENT_MA, SESSION_CUTOFF_H, TC_CC_THRESHOLD_V
from .errors import ConfigError, DomainError, StateError

__all__ = [
    "Stage",
    "ProfileParams",
    "ChargeState",
    "ProfileTrajectory",
    "profile_init",
    "profile_step",
    "charge_terminated",
    "profile_trajectory",
    "calibrate_profile",
    "TERMINATION_REASONS",
]


class Stage(enum.IntEnum):
    TC = _kernels.TC
    CC = _kernels.CC
    CV = _kernels.CV
    TERMINATED = _kernels.TERMINATED


TERMINATION_REASONS = {
    _kernels.REASON_NONE: None,
    _kernels.REASON_MIN_CURRENT: "min_current",
    _kernels.REASON_CV_TIMER: "cv_timer",
    _kernels.REASON_CUTOFF: "session_cutoff",
}


@dataclass(frozen=True)
class ProfileParams:
    """Charging-profile parameters.

    The defaults for ``tc_duration_h``, ``cv_decay_tau_h`` and
    ``cc_slope_v_per_mah`` are frozen output of :func:`calibrate_profile`
    (``arbcsim calibrate-profile``): CC ends at 60 % of capacity with
    ``i_cc`` = 700 mA, and the default session integrates to 5.96 Wh of
    preferred power.
    """

    capacity_mah: float = 1000.0
    v_tc_start: float = 2.5
    v_tc_cc: float = TC_CC_THRESHOLD_V
    v_cv: float = CC_CV_THRESHOLD_V
    i_tc_max: float = 200.0
    i_cc: float = 700.0
    i_min: float = MIN_CURRENT_MA
    tc_duration_h: float = 0.5
    cv_decay_tau_h: float = 1.808227
    cv_timer_h: float = 2.4
    session_cutoff_h: float = SESSION_CUTOFF_H
    cc_slope_v_per_mah: float = 0.002181708

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ConfigError(f"must be a finite number, got {value!r}", f.name)
            if value <= 0:
                raise ConfigError(f"must be positive, got {value}", f.name)
        if not self.v_tc_start < self.v_tc_cc < self.v_cv:
            raise ConfigError("need v_tc_start < v_tc_cc < v_cv", "v_tc_cc")
        if not self.i_min < self.i_tc_max <= self.i_cc <= self.capacity_mah:
            raise ConfigError("need i_min < i_tc_max <= i_cc <= capacity (1C)", "i_cc")

    def packed(self) -> tuple:
        """Parameters in kernel order."""
        return tuple(float(getattr(self, name)) for name in _kernels.PARAM_FIELDS)

    @property
    def max_power_w(self) -> float:
        return self.i_cc * self.v_cv / 1000.0


@dataclass(frozen=True)
class ChargeState:
    stage: Stage
    i_pref: float  # mA
    v_pref: float  # V
    charge_delivered: float  # mAh
    elapsed_h: float
    cv_elapsed_h: float = 0.0
    termination_reason: str | None = None

    @property
    def p_pref(self) -> float:
        """Preferred charging power in W."""
        return self.i_pref * self.v_pref / 1000.0


def profile_init(params: ProfileParams) -> ChargeState:
    if not isinstance(params, ProfileParams):
        raise ConfigError(f"expected ProfileParams, got {type(params).__name__}")
    return ChargeState(Stage.TC, 0.0, params.v_tc_start, 0.0, 0.0, 0.0)


def profile_step(state: ChargeState, dt_h: float, params: ProfileParams) -> ChargeState:
    if state.stage is Stage.TERMINATED:
        raise StateError("cannot step a terminated charge state")
    if not dt_h > 0:
        raise DomainError(f"dt must be positive, got {dt_h}")
    prm = params.packed()
    reason = _kernels.check_terminal(state.stage, state.i_pref, state.elapsed_h, prm)
    if reason:
        return replace(state, stage=Stage.TERMINATED, termination_reason=TERMINATION_REASONS[reason])
    stage, i, v, q, t, tcv, reason = _kernels.advance(
        int(state.stage), state.i_pref, state.v_pref, state.charge_delivered,
        state.elapsed_h, state.cv_elapsed_h, dt_h, prm,
    )
    return ChargeState(Stage(stage), i, v, q, t, tcv, TERMINATION_REASONS[reason])


def charge_terminated(state: ChargeState, params: ProfileParams | None = None) -> bool:
    return state.stage is Stage.TERMINATED


@dataclass(frozen=True, eq=False)
class ProfileTrajectory:
    """Columnar profile history, initial state through terminal state."""

    t_h: np.ndarray
    i_ma: np.ndarray
    v: np.ndarray
    charge_mah: np.ndarray
    stage: np.ndarray
    termination_reason: str

    @property
    def p_w(self) -> np.ndarray:
        return self.i_ma * self.v / 1000.0

    @property
    def duration_h(self) -> float:
        return float(self.t_h[-1])

    def energy_wh(self) -> float:
        return float(np.trapezoid(self.p_w, self.t_h))

    def stage_entry_index(self, stage: Stage) -> int | None:
        hits = np.flatnonzero(self.stage == int(stage))
        return int(hits[0]) if hits.size else None

    def state(self, k: int) -> ChargeState:
        return ChargeState(Stage(int(self.stage[k])), float(self.i_ma[k]), float(self.v[k]),
                           float(self.charge_mah[k]), float(self.t_h[k]))


def profile_trajectory(params: ProfileParams, dt_h: float, backend=None) -> ProfileTrajectory:
    """Whole-session profile history computed by the selected kernel."""
    if not dt_h > 0:
        raise DomainError(f"dt must be positive, got {dt_h}")
    kernel = backend or _kernels.profile_trajectory
    max_ticks = int(math.ceil(params.session_cutoff_h / dt_h)) + 2
    t, i, v, q, s, reason = kernel(params.packed(), float(dt_h), max_ticks)
    return ProfileTrajectory(t, i, v, q, s, TERMINATION_REASONS[reason])


def calibrate_profile(base: ProfileParams | None = None, target_energy_wh: float = 5.96,
                      cc_end_fraction: float = 0.6, dt_h: float = 1.0 / 3600.0):
    """Fit the free profile shape parameters to a target session energy.

    The CC voltage slope is set so the CC stage ends at ``cc_end_fraction`` of
    capacity; the CV decay time constant is then solved so the session's
    preferred-power energy equals ``target_energy_wh``.  ``tc_duration_h`` and
    ``i_cc`` are taken from ``base``.
    """
    base = base or ProfileParams()
    # TC charge is independent of the CC slope; read it off a trial run.
    trial = profile_trajectory(base, dt_h)
    k_cc = trial.stage_entry_index(Stage.CC)
    if k_cc is None:
        raise ConfigError("profile never leaves trickle charge", "tc_duration_h")
    q_tc = trial.charge_mah[k_cc]
    q_cc_end = cc_end_fraction * base.capacity_mah
    if q_cc_end <= q_tc:
        raise ConfigError("CC end target below charge delivered in TC", "cc_end_fraction")
    slope = (base.v_cv - base.v_tc_cc) / (q_cc_end - q_tc)
    shaped = replace(base, cc_slope_v_per_mah=slope)

    def energy_error(tau):
        return profile_trajectory(replace(shaped, cv_decay_tau_h=tau), dt_h).energy_wh() - target_energy_wh

    lo, hi = 1e-3, 100.0
    if energy_error(lo) * energy_error(hi) > 0:
        raise ConfigError(f"target energy {target_energy_wh} Wh is unreachable with these parameters")
    tau = brentq(energy_error, lo, hi, xtol=1e-10)
    return replace(shaped, cv_decay_tau_h=tau)

