"""Transmitter and free-space link: supply power, beam power, attenuation.

Units are SI except at the configuration boundary, where wavelengths are in
nanometers and distances in kilometers.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .constants import ELECTRON_CHARGE, PLANCK_H
from .errors import DomainError

__all__ = [
    "AirKind",
    "AirCondition",
    "BeamWavelengthSpec",
    "PhysicalBeamParams",
    "BEAM_810",
    "BEAM_1550",
    "CLEAR_AIR",
    "HAZE",
    "FOG",
    "beam_spec",
    "supplied_electrical_power",
    "physical_beam_power",
    "beam_power_from_supply",
    "attenuation_coefficient",
    "transmission_efficiency",
]


@dataclass(frozen=True)
class BeamWavelengthSpec:
    """Linear fit of transmitter beam power against supplied power."""

    wavelength_nm: float
    a1: float
    b1: float

    def __post_init__(self):
        if self.wavelength_nm <= 0:
            raise DomainError(f"wavelength must be positive, got {self.wavelength_nm}")
        if self.a1 <= 0:
            raise DomainError(f"a1 must be positive, got {self.a1}")


BEAM_810 = BeamWavelengthSpec(810.0, 0.445, -0.75)
BEAM_1550 = BeamWavelengthSpec(1550.0, 0.34, -1.1)
_BEAMS = {810: BEAM_810, 1550: BEAM_1550}


def beam_spec(wavelength_nm) -> BeamWavelengthSpec:
    try:
        return _BEAMS[int(wavelength_nm)]
    except (KeyError, ValueError, TypeError):
        raise DomainError(
            f"no beam coefficients for {wavelength_nm} nm (known: 810, 1550)"
        ) from None


@dataclass(frozen=True)
class PhysicalBeamParams:
    gamma: float
    nu_hz: float
    i_threshold_a: float

    def __post_init__(self):
        if self.gamma <= 0 or self.nu_hz <= 0 or self.i_threshold_a < 0:
            raise DomainError(f"invalid beam parameters {self}")


class AirKind(str, enum.Enum):
    CLEAR = "clear"
    HAZE = "haze"
    FOG = "fog"


# Visibility range (km) accepted for each air kind.
_VISIBILITY_RANGE = {
    AirKind.CLEAR: (6.0, 50.0),
    AirKind.HAZE: (1.0, 6.0),
    AirKind.FOG: (0.0, 0.5),
}


@dataclass(frozen=True)
class AirCondition:
    kind: AirKind
    visibility_km: float

    def __post_init__(self):
        object.__setattr__(self, "kind", AirKind(self.kind))
        lo, hi = _VISIBILITY_RANGE[self.kind]
        tau = self.visibility_km
        if not (lo <= tau <= hi) or tau <= 0:
            raise DomainError(
                f"visibility {tau} km outside the {self.kind.value} range [{lo}, {hi}] km"
            )

    @property
    def size_distribution(self) -> float:
        """Scattering-particle size exponent for this regime."""
        if self.kind is AirKind.CLEAR:
            return 1.3
        if self.kind is AirKind.HAZE:
            return 0.16 * self.visibility_km + 0.34
        return 0.0


CLEAR_AIR = AirCondition(AirKind.CLEAR, 10.0)
HAZE = AirCondition(AirKind.HAZE, 3.0)
FOG = AirCondition(AirKind.FOG, 0.4)


def supplied_electrical_power(i_t: float, v_t: float) -> float:
    """Electrical power drawn by the pump, in W."""
    if i_t < 0 or v_t < 0:
        raise DomainError(f"current and voltage must be non-negative ({i_t} A, {v_t} V)")
    return i_t * v_t


def physical_beam_power(i_t: float, p: PhysicalBeamParams) -> float:
    """Beam power from the laser-diode relation, clamped at zero below threshold.

    Kept as a cross-check; the simulation chain uses the fitted form in
    :func:`beam_power_from_supply`.
    """
    if i_t < 0:
        raise DomainError(f"current must be non-negative, got {i_t}")
    photon_volts = PLANCK_H * p.nu_hz / ELECTRON_CHARGE
    return max(0.0, p.gamma * photon_volts * (i_t - p.i_threshold_a))


def beam_power_from_supply(p_s: float, spec: BeamWavelengthSpec) -> float:
    if p_s < 0:
        raise DomainError(f"supply power must be non-negative, got {p_s}")
    return max(0.0, spec.a1 * p_s + spec.b1)


def attenuation_coefficient(wavelength_nm: float, air: AirCondition) -> float:
    """Atmospheric attenuation coefficient in 1/km."""
    if wavelength_nm <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength_nm}")
    theta = air.size_distribution
    return (3.91 / air.visibility_km) * (wavelength_nm / 550.0) ** (-theta)


def transmission_efficiency(sigma: float, radius_km: float) -> float:
    if sigma < 0:
        raise DomainError(f"attenuation must be non-negative, got {sigma}")
    if radius_km < 0:
        raise DomainError(f"radius must be non-negative, got {radius_km}")
    return math.exp(-sigma * radius_km)
