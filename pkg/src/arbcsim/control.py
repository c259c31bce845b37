"""End-to-end power map, its inverse, and single control ticks.

Battery power is affine in supplied power,

    P_b = a1*a2*eta * P_s + (a2*b1*eta + b2),

so the controller inverts that line exactly to find the supply power for a
requested battery power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import optics, pv
from .battery import ChargeState, ProfileParams, charge_terminated, profile_step
from .converter import ConverterParams, convert, solve_duty
from .errors import ArbcError, DomainError, StateError, SupplyLimitError

__all__ = [
    "LinkCoefficients",
    "StepRecord",
    "DEFAULT_MAX_SUPPLY_W",
    "link_coefficients",
    "forward_chain",
    "end_to_end_battery_power",
    "required_supply_power",
    "arbc_step",
    "rbc_step",
]

DEFAULT_MAX_SUPPLY_W = 1e7
ROUND_TRIP_RTOL = 1e-6


@dataclass(frozen=True)
class LinkCoefficients:
    a1: float
    b1: float
    a2: float
    b2: float
    eta_bt: float

    def __post_init__(self):
        if not 0 < self.eta_bt <= 1:
            raise DomainError(f"transmission efficiency must be in (0, 1], got {self.eta_bt}")
        if not self.a1 * self.a2 * self.eta_bt > 0:
            raise DomainError("a1*a2*eta_bt must be positive")

    @property
    def slope(self) -> float:
        return self.a1 * self.a2 * self.eta_bt

    @property
    def offset(self) -> float:
        return self.a2 * self.b1 * self.eta_bt + self.b2


def link_coefficients(wavelength_nm, temp_c, air: optics.AirCondition, radius_km,
                      fit_table: pv.PvFitTable = pv.DEFAULT_FIT_TABLE) -> LinkCoefficients:
    beam = optics.beam_spec(wavelength_nm)
    a2, b2 = pv.pv_fit_coefficients(wavelength_nm, temp_c, fit_table)
    sigma = optics.attenuation_coefficient(beam.wavelength_nm, air)
    eta = optics.transmission_efficiency(sigma, radius_km)
    return LinkCoefficients(beam.a1, beam.b1, a2, b2, eta)


@dataclass(frozen=True)
class StepRecord:
    t: float  # h
    p_s: float
    p_bt: float
    p_br: float
    p_pv: float
    p_b: float
    i_b: float  # A
    v_b: float
    duty: float = math.nan
    v_pv: float = math.nan
    i_pv: float = math.nan


def forward_chain(p_s: float, c: LinkCoefficients):
    """Stage-by-stage powers (p_bt, p_br, p_pv) for a given supply power."""
    p_bt = max(0.0, c.a1 * p_s + c.b1)
    p_br = c.eta_bt * p_bt
    p_pv = max(0.0, c.a2 * p_br + c.b2)
    return p_bt, p_br, p_pv


def end_to_end_battery_power(p_s: float, c: LinkCoefficients) -> float:
    if p_s < 0:
        raise DomainError(f"supply power must be non-negative, got {p_s}")
    return max(0.0, c.slope * p_s + c.offset)


def required_supply_power(p_b_target: float, c: LinkCoefficients,
                          max_supply_w: float = DEFAULT_MAX_SUPPLY_W) -> float:
    if not p_b_target > 0:
        raise DomainError(f"battery power target must be positive, got {p_b_target}")
    p_s = (p_b_target - c.offset) / c.slope
    if p_s > max_supply_w:
        raise SupplyLimitError(f"required supply {p_s:.6g} W exceeds bound {max_supply_w:.6g} W")
    return p_s


def _deliver(t, p_b_target, i_b, v_b, c, max_supply_w, receiver, converter):
    """Drive the chain to hand ``p_b_target`` to the battery at (i_b, v_b)."""
    if p_b_target <= 0:
        return StepRecord(t, 0.0, 0.0, 0.0, 0.0, 0.0, i_b, v_b)
    eff = converter.efficiency if converter else 1.0
    p_s = required_supply_power(p_b_target / eff, c, max_supply_w)
    p_bt, p_br, p_pv = forward_chain(p_s, c)
    p_b = eff * p_pv
    if not math.isclose(p_b, p_b_target, rel_tol=ROUND_TRIP_RTOL):
        raise ArbcError(f"chain delivered {p_b!r} W for a {p_b_target!r} W target")
    duty = v_pv = i_pv = math.nan
    if receiver is not None:
        panel, temp_c = receiver
        v_pv = pv.find_mpp(panel, p_br, temp_c).v_mpp
        i_pv = p_pv / v_pv
        conv = converter or ConverterParams()
        duty = solve_duty(v_pv, v_b, i_pv, conv)
        i_b, v_b = convert(i_pv, v_pv, i_b, v_b, eff)
    return StepRecord(t, p_s, p_bt, p_br, p_pv, p_b, i_b, v_b, duty, v_pv, i_pv)


def arbc_step(state: ChargeState, c: LinkCoefficients, dt_h: float, params: ProfileParams,
              *, max_supply_w: float = DEFAULT_MAX_SUPPLY_W, receiver=None,
              converter: ConverterParams | None = None):
    """One feedback tick: supply exactly the battery's preferred power, then advance the profile.

    ``receiver`` is an optional ``(PvPanelSpec, temp_c)`` pair; when given, the
    converter duty is solved from the panel's MPP voltage.
    """
    if charge_terminated(state):
        raise StateError("charging has terminated; no further control steps")
    record = _deliver(state.elapsed_h, state.p_pref, state.i_pref / 1000.0, state.v_pref,
                      c, max_supply_w, receiver, converter)
    return record, profile_step(state, dt_h, params)


def rbc_step(c: LinkCoefficients, fixed_p_b: float, dt_h: float, t: float, *,
             v_b: float = 4.2, max_supply_w: float = DEFAULT_MAX_SUPPLY_W,
             receiver=None, converter: ConverterParams | None = None) -> StepRecord:
    """One open-loop tick at fixed battery power (1 A at 4.2 V by default)."""
    if not fixed_p_b > 0:
        raise DomainError(f"fixed battery power must be positive, got {fixed_p_b}")
    if not dt_h > 0:
        raise DomainError(f"dt must be positive, got {dt_h}")
    return _deliver(t, fixed_p_b, fixed_p_b / v_b, v_b, c, max_supply_w, receiver, converter)
