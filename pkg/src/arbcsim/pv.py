"""Receiver PV panel: single-diode model, MPP search and the linear battery-power fit.

The simulation chain maps received beam power to battery power with the
temperature-indexed linear fit (:func:`battery_power_from_beam`).  The diode
model and MPP search exist to regenerate and validate those coefficients and
to give the converter an operating voltage.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .constants import BOLTZMANN_K, ELECTRON_CHARGE, ZERO_CELSIUS_K
from .errors import DegenerateInputError, DomainError, OutOfRangeError

__all__ = [
    "PvPanelSpec",
    "MppResult",
    "PvFitTable",
    "PANEL_810",
    "PANEL_1550",
    "DEFAULT_FIT_TABLE",
    "panel_spec",
    "thermal_voltage",
    "saturation_current",
    "short_circuit_current",
    "open_circuit_voltage",
    "pv_current",
    "golden_section_max",
    "find_mpp",
    "find_mpp_batch",
    "pv_fit_coefficients",
    "battery_power_from_beam",
    "load_fit_table",
    "save_fit_table",
    "regenerate_fit",
    "calibrate_aperture",
    "REGEN_BEAM_POWERS_W",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PvPanelSpec:
    """Single-diode panel parameters at a reference irradiance and temperature.

    ``bandgap_ev`` and ``xti`` set the temperature dependence of the
    saturation current.  ``aperture_cm2`` is the area over which the received
    beam power is spread when converting it to irradiance.
    """

    i_sc_ref: float
    v_oc_ref: float
    irradiance_ref: float  # W/cm^2
    ideality_n: float
    series_cells: int
    temp_ref_c: float
    bandgap_ev: float = 1.11
    xti: float = 3.0
    aperture_cm2: float = 1.0

    def __post_init__(self):
        if self.i_sc_ref <= 0 or self.v_oc_ref <= 0 or self.irradiance_ref <= 0:
            raise DomainError("i_sc_ref, v_oc_ref and irradiance_ref must be positive")
        if self.ideality_n < 1:
            raise DomainError(f"ideality factor must be >= 1, got {self.ideality_n}")
        if self.series_cells < 1:
            raise DomainError(f"series_cells must be >= 1, got {self.series_cells}")
        if self.aperture_cm2 <= 0:
            raise DomainError(f"aperture must be positive, got {self.aperture_cm2}")


# Apertures come from `calibrate_aperture` against the 25 degC fit row
# (see `arbcsim regen-pv-fit`); everything else is manufacturer panel data.
PANEL_810 = PvPanelSpec(0.16732, 1.2, 36.5, 1.5, 72, 25.0, aperture_cm2=0.551636)
PANEL_1550 = PvPanelSpec(0.305, 0.464, 2.7187, 1.1, 72, 120.0, aperture_cm2=7.41292)
_PANELS = {810: PANEL_810, 1550: PANEL_1550}


def panel_spec(wavelength_nm) -> PvPanelSpec:
    try:
        return _PANELS[int(wavelength_nm)]
    except (KeyError, ValueError, TypeError):
        raise DomainError(f"no PV panel for {wavelength_nm} nm") from None


@dataclass(frozen=True)
class MppResult:
    v_mpp: float
    i_mpp: float
    p_mpp: float


def _kelvin(temp_c: float) -> float:
    t = temp_c + ZERO_CELSIUS_K
    if t <= 0:
        raise DomainError(f"temperature {temp_c} degC is at or below absolute zero")
    return t


def thermal_voltage(ideality_n: float, temp_c: float) -> float:
    """n*k*T/q in volts."""
    return ideality_n * BOLTZMANN_K * _kelvin(temp_c) / ELECTRON_CHARGE


def saturation_current(spec: PvPanelSpec, temp_c: float | None = None) -> float:
    """Diode saturation current per cell.

    Back-solved so the cell passes through (0, I_sc) and (V_oc, 0) at the
    reference point, then scaled with the usual T^xti * exp(-Eg/nkT) law.
    """
    vm_ref = thermal_voltage(spec.ideality_n, spec.temp_ref_c)
    is_ref = spec.i_sc_ref / math.expm1(spec.v_oc_ref / vm_ref)
    if temp_c is None or temp_c == spec.temp_ref_c:
        return is_ref
    t = _kelvin(temp_c)
    t_ref = _kelvin(spec.temp_ref_c)
    n = spec.ideality_n
    eg_over_nk = spec.bandgap_ev * ELECTRON_CHARGE / (n * BOLTZMANN_K)
    return is_ref * (t / t_ref) ** (spec.xti / n) * math.exp(eg_over_nk * (1.0 / t_ref - 1.0 / t))


def short_circuit_current(spec: PvPanelSpec, p_br: float, panel_area_cm2: float | None = None) -> float:
    """Photocurrent, linear in incident irradiance."""
    if p_br < 0:
        raise DomainError(f"beam power must be non-negative, got {p_br}")
    area = spec.aperture_cm2 if panel_area_cm2 is None else panel_area_cm2
    return spec.i_sc_ref * (p_br / area) / spec.irradiance_ref


def open_circuit_voltage(spec, p_br, temp_c=None, panel_area_cm2=None) -> float:
    """Panel voltage at which the diode equation gives zero current."""
    temp = spec.temp_ref_c if temp_c is None else temp_c
    i_sc = short_circuit_current(spec, p_br, panel_area_cm2)
    i_s = saturation_current(spec, temp)
    vm = thermal_voltage(spec.ideality_n, temp)
    return spec.series_cells * vm * math.log1p(i_sc / i_s)


def pv_current(v, spec, p_br, panel_area_cm2=None, temp_c=None) -> float:
    if v < 0:
        raise DomainError(f"voltage must be non-negative, got {v}")
    temp = spec.temp_ref_c if temp_c is None else temp_c
    i_sc = short_circuit_current(spec, p_br, panel_area_cm2)
    i_s = saturation_current(spec, temp)
    vm = thermal_voltage(spec.ideality_n, temp)
    return i_sc - i_s * math.expm1(v / spec.series_cells / vm)


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 500):
    """Maximize a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def find_mpp(spec: PvPanelSpec, p_br: float, temp_c: float, tol: float = 1e-6,
             panel_area_cm2: float | None = None) -> MppResult:
    if p_br <= 0:
        raise DegenerateInputError(f"no beam power to convert (p_br={p_br})")
    i_sc = short_circuit_current(spec, p_br, panel_area_cm2)
    i_s = saturation_current(spec, temp_c)
    v_scale = spec.series_cells * thermal_voltage(spec.ideality_n, temp_c)
    v_oc = v_scale * math.log1p(i_sc / i_s)

    def power(v):
        return v * (i_sc - i_s * math.expm1(v / v_scale))

    v, p = golden_section_max(power, 0.0, v_oc, tol)
    return MppResult(v, p / v, p)


def find_mpp_batch(spec: PvPanelSpec, p_br, temp_c: float, tol: float = 1e-6,
                   panel_area_cm2: float | None = None):
    """Vectorized :func:`find_mpp` over an array of beam powers.

    Returns ``(v_mpp, i_mpp, p_mpp)`` arrays; entries with ``p_br <= 0`` are 0.
    """
    p_br = np.asarray(p_br, dtype=float)
    area = spec.aperture_cm2 if panel_area_cm2 is None else panel_area_cm2
    i_sc = spec.i_sc_ref * (np.maximum(p_br, 0.0) / area) / spec.irradiance_ref
    i_s = saturation_current(spec, temp_c)
    v_scale = spec.series_cells * thermal_voltage(spec.ideality_n, temp_c)
    v_oc = v_scale * np.log1p(i_sc / i_s)
    live = p_br > 0
    if not live.any():
        zeros = np.zeros_like(p_br)
        return zeros, zeros.copy(), zeros.copy()

    def power(v):
        return v * (i_sc - i_s * np.expm1(v / v_scale))

    a = np.zeros_like(v_oc)
    b = v_oc.copy()
    width = float(v_oc[live].max())
    n_iter = max(1, math.ceil(math.log(tol / width) / math.log(INV_PHI))) if width > tol else 0
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = power(c), power(d)
    for _ in range(n_iter):
        left = fc >= fd
        # left: keep [a, d]; right: keep [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - INV_PHI * (b - a)
        new_d = a + INV_PHI * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, power(new_c), fd)
        fd_next = np.where(left, fc, power(new_d))
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    v = np.where(live, 0.5 * (a + b), 0.0)
    p = np.where(live, power(v), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        i = np.where(live, p / np.where(live, v, 1.0), 0.0)
    return v, i, p


@dataclass(frozen=True)
class PvFitTable:
    """Linear battery-power fit coefficients keyed by (wavelength, temperature)."""

    rows: tuple  # of (wavelength_nm, temp_c, a2, b2)

    def __post_init__(self):
        rows = tuple(sorted((int(w), float(t), float(a), float(b)) for w, t, a, b in self.rows))
        for w, t, a, b in rows:
            if not 0 < a < 1:
                raise DomainError(f"a2={a} at ({w} nm, {t} degC) outside (0, 1)")
            if b >= 0:
                raise DomainError(f"b2={b} at ({w} nm, {t} degC) must be negative")
        object.__setattr__(self, "rows", rows)

    def wavelengths(self):
        return sorted({r[0] for r in self.rows})

    def for_wavelength(self, wavelength_nm):
        return [r[1:] for r in self.rows if r[0] == int(wavelength_nm)]


DEFAULT_FIT_TABLE = PvFitTable((
    (810, 0, 0.6084, -0.08382),
    (810, 5, 0.6087, -0.08506),
    (810, 10, 0.6089, -0.08628),
    (810, 15, 0.6092, -0.08749),
    (810, 20, 0.6094, -0.08868),
    (810, 25, 0.6096, -0.08987),
    (810, 30, 0.6098, -0.09102),
    (810, 35, 0.6100, -0.09217),
    (810, 40, 0.6102, -0.09331),
    (810, 45, 0.6103, -0.09443),
    (810, 50, 0.6105, -0.09557),
    (1550, 0, 0.6043, -0.1275),
    (1550, 5, 0.5964, -0.1294),
    (1550, 10, 0.5885, -0.1317),
    (1550, 15, 0.5806, -0.1338),
    (1550, 20, 0.5727, -0.1358),
    (1550, 25, 0.5649, -0.1382),
    (1550, 30, 0.5569, -0.1398),
    (1550, 35, 0.5491, -0.1424),
    (1550, 40, 0.5412, -0.1440),
    (1550, 45, 0.5334, -0.1464),
    (1550, 50, 0.5255, -0.1483),
))

FIT_CSV_HEADER = ("wavelength_nm", "temp_c", "a2", "b2")


def load_fit_table(path) -> PvFitTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != FIT_CSV_HEADER:
            raise DomainError(f"{path}: expected header {','.join(FIT_CSV_HEADER)}")
        rows = [(int(float(r["wavelength_nm"])), float(r["temp_c"]), float(r["a2"]), float(r["b2"]))
                for r in reader]
    return PvFitTable(tuple(rows))


def save_fit_table(table: PvFitTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIT_CSV_HEADER)
        for wl, t, a2, b2 in table.rows:
            w.writerow([wl, f"{t:g}", f"{a2:.6g}", f"{b2:.6g}"])


def pv_fit_coefficients(wavelength_nm, temp_c: float, table: PvFitTable = DEFAULT_FIT_TABLE):
    """(a2, b2) at ``temp_c``, interpolated linearly between tabulated rows."""
    rows = table.for_wavelength(wavelength_nm)
    if not rows:
        raise DomainError(f"no fit coefficients for {wavelength_nm} nm")
    temps = [r[0] for r in rows]
    if not temps[0] <= temp_c <= temps[-1]:
        raise OutOfRangeError(
            f"temperature {temp_c} degC outside tabulated range [{temps[0]}, {temps[-1]}]"
        )
    for (t0, a0, b0), (t1, a1, b1) in zip(rows, rows[1:]):
        if temp_c == t0:
            return a0, b0
        if t0 < temp_c < t1:
            w = (temp_c - t0) / (t1 - t0)
            return a0 + w * (a1 - a0), b0 + w * (b1 - b0)
    return rows[-1][1], rows[-1][2]


def battery_power_from_beam(p_br: float, a2: float, b2: float) -> float:
    if p_br < 0:
        raise DomainError(f"beam power must be non-negative, got {p_br}")
    return max(0.0, a2 * p_br + b2)


# Received beam powers sampled when regenerating the linear fit.
REGEN_BEAM_POWERS_W = tuple(np.linspace(1.0, 10.0, 19))


def regenerate_fit(spec: PvPanelSpec, temps_c: Iterable[float],
                   beam_powers: Sequence[float] = REGEN_BEAM_POWERS_W):
    """Fit battery power (= MPP power) against beam power at each temperature.

    Returns a list of ``(temp_c, a2, b2)``.
    """
    p = np.asarray(beam_powers, dtype=float)
    out = []
    for t in temps_c:
        _, _, p_mpp = find_mpp_batch(spec, p, t, tol=1e-9)
        a2, b2 = np.polyfit(p, p_mpp, 1)
        out.append((float(t), float(a2), float(b2)))
    return out


def calibrate_aperture(spec: PvPanelSpec, target_a2: float, temp_c: float,
                       beam_powers: Sequence[float] = REGEN_BEAM_POWERS_W) -> PvPanelSpec:
    """Return ``spec`` with the aperture that makes the fitted slope hit ``target_a2``."""

    def slope_error(log_area):
        trial = replace(spec, aperture_cm2=math.exp(log_area))
        return regenerate_fit(trial, [temp_c], beam_powers)[0][1] - target_a2

    log_area = brentq(slope_error, math.log(1e-3), math.log(1e4), xtol=1e-12)
    return replace(spec, aperture_cm2=math.exp(log_area))

