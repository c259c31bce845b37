"""Ideal buck-boost DC-DC converter between the PV panel and the battery.

The topology inverts output polarity; the battery is wired for it, so ratios
here are magnitudes and ``OUTPUT_INVERTED`` records the sign.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError, InsufficientPowerError, UnreachableConversionError

__all__ = [
    "ConductionMode",
    "ConverterParams",
    "OUTPUT_INVERTED",
    "continuous_voltage_ratio",
    "discontinuous_voltage_ratio",
    "voltage_ratio",
    "solve_duty",
    "convert",
]

OUTPUT_INVERTED = True
POWER_TOLERANCE = 1e-3  # relative


class ConductionMode(str, enum.Enum):
    CONTINUOUS = "continuous"
    DISCONTINUOUS = "discontinuous"


@dataclass(frozen=True)
class ConverterParams:
    inductance_h: float = 100e-6
    switch_period_s: float = 10e-6
    mode: ConductionMode = ConductionMode.CONTINUOUS
    efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", ConductionMode(self.mode))
        if not self.inductance_h > 0:
            raise ConfigError(f"must be positive, got {self.inductance_h}", "inductance_h")
        if not self.switch_period_s > 0:
            raise ConfigError(f"must be positive, got {self.switch_period_s}", "switch_period_s")
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"must be in (0, 1], got {self.efficiency}", "efficiency")


def _check_duty(duty):
    if not 0 < duty < 1:
        raise DomainError(f"duty cycle must be in (0, 1), got {duty}")


def continuous_voltage_ratio(duty: float) -> float:
    _check_duty(duty)
    return duty / (1.0 - duty)


def discontinuous_voltage_ratio(duty: float, v_in: float, i_in: float, params: ConverterParams) -> float:
    _check_duty(duty)
    if v_in <= 0:
        raise DomainError(f"input voltage must be positive, got {v_in}")
    if i_in <= 0:
        raise DomainError(f"input current must be positive, got {i_in} (ratio unbounded)")
    return v_in * duty**2 * params.switch_period_s / (2.0 * params.inductance_h * i_in)


def voltage_ratio(duty, v_in, i_in, params: ConverterParams) -> float:
    if params.mode is ConductionMode.CONTINUOUS:
        return continuous_voltage_ratio(duty)
    return discontinuous_voltage_ratio(duty, v_in, i_in, params)


def solve_duty(v_in: float, v_out_target: float, i_in: float, params: ConverterParams) -> float:
    """Duty cycle that produces ``v_out_target`` from ``v_in``."""
    if v_in <= 0 or v_out_target <= 0:
        raise DomainError(f"voltages must be positive (v_in={v_in}, v_out={v_out_target})")
    if params.mode is ConductionMode.CONTINUOUS:
        r = v_out_target / v_in
        duty = r / (1.0 + r)
    else:
        if i_in <= 0:
            raise DomainError(f"input current must be positive, got {i_in}")
        duty = math.sqrt(2.0 * params.inductance_h * i_in * v_out_target
                         / (v_in**2 * params.switch_period_s))
    if not 0 < duty < 1:
        raise UnreachableConversionError(
            f"{v_in} V -> {v_out_target} V needs duty {duty:.6g} outside (0, 1)"
        )
    return duty


def convert(i_in: float, v_in: float, i_target: float, v_target: float, efficiency: float = 1.0):
    """Deliver the battery's requested (current, voltage) if the input can supply it."""
    p_in = i_in * v_in
    if not p_in > 0:
        raise DomainError(f"input power must be positive, got {p_in}")
    available = efficiency * p_in
    requested = i_target * v_target
    if requested > available * (1.0 + POWER_TOLERANCE):
        raise InsufficientPowerError(
            f"requested {requested:.6g} W exceeds available {available:.6g} W"
        )
    return i_target, v_target
