"""Session engine, energy accounting, RBC/ARBC comparison and parameter sweeps."""
from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import control, optics, pv
from .battery import ProfileParams, profile_init, profile_trajectory
from .constants import RBC_BATTERY_POWER_W, RBC_DURATION_H
from .converter import ConductionMode, ConverterParams
from .errors import ArbcError, ComparisonError, ConfigError, DomainError, SupplyLimitError

__all__ = [
    "Mode",
    "Scenario",
    "StepSeries",
    "SessionReport",
    "SavingsReport",
    "SweepGrid",
    "SweepRow",
    "SweepTable",
    "run_session",
    "compare_sessions",
    "sweep",
    "savings_surface",
    "default_grid",
]

ROUND_TRIP_RTOL = control.ROUND_TRIP_RTOL


class Mode(str, enum.Enum):
    RBC = "RBC"
    ARBC = "ARBC"


@dataclass(frozen=True)
class Scenario:
    wavelength_nm: int = 810
    temp_c: float = 0.0
    air: optics.AirCondition = optics.CLEAR_AIR
    radius_km: float = 0.1
    mode: Mode = Mode.ARBC
    dt_s: float = 1.0
    rbc_fixed_power_w: float = RBC_BATTERY_POWER_W
    rbc_duration_h: float = RBC_DURATION_H
    profile: ProfileParams = field(default_factory=ProfileParams)
    converter: ConverterParams = field(default_factory=ConverterParams)
    feedback_delay_ticks: int = 0
    max_supply_w: float = control.DEFAULT_MAX_SUPPLY_W

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.wavelength_nm not in (810, 1550):
            raise ConfigError(f"must be 810 or 1550, got {self.wavelength_nm}", "wavelength_nm")
        if not 0 <= self.temp_c <= 50:
            raise ConfigError(f"must be within [0, 50] degC, got {self.temp_c}", "temp_c")
        if not self.radius_km >= 0:
            raise ConfigError(f"must be non-negative, got {self.radius_km}", "radius_km")
        if not self.dt_s > 0:
            raise ConfigError(f"must be positive, got {self.dt_s}", "dt_s")
        if not self.rbc_fixed_power_w > 0:
            raise ConfigError(f"must be positive, got {self.rbc_fixed_power_w}", "rbc_fixed_power_w")
        if not self.rbc_duration_h > 0:
            raise ConfigError(f"must be positive, got {self.rbc_duration_h}", "rbc_duration_h")
        if not (isinstance(self.feedback_delay_ticks, int) and self.feedback_delay_ticks >= 0):
            raise ConfigError("must be a non-negative integer", "feedback_delay_ticks")
        if not self.max_supply_w > 0:
            raise ConfigError(f"must be positive, got {self.max_supply_w}", "max_supply_w")

    @property
    def dt_h(self) -> float:
        return self.dt_s / 3600.0

    def link(self) -> control.LinkCoefficients:
        return control.link_coefficients(self.wavelength_nm, self.temp_c, self.air, self.radius_km)

    def axes(self) -> dict:
        return {
            "wavelength_nm": self.wavelength_nm,
            "temp_c": self.temp_c,
            "air": self.air.kind.value,
            "visibility_km": self.air.visibility_km,
            "radius_km": self.radius_km,
            "mode": self.mode.value,
        }


@dataclass(frozen=True, eq=False)
class StepSeries:
    """Per-tick power chain, one array per :class:`~arbcsim.control.StepRecord` field."""

    t: np.ndarray
    p_s: np.ndarray
    p_bt: np.ndarray
    p_br: np.ndarray
    p_pv: np.ndarray
    p_b: np.ndarray
    i_b: np.ndarray
    v_b: np.ndarray
    duty: np.ndarray
    v_pv: np.ndarray
    i_pv: np.ndarray

    COLUMNS = ("t", "p_s", "p_bt", "p_br", "p_pv", "p_b", "i_b", "v_b", "duty", "v_pv", "i_pv")

    def __len__(self):
        return len(self.t)

    def records(self):
        cols = [getattr(self, c) for c in self.COLUMNS]
        return [control.StepRecord(*map(float, row)) for row in zip(*cols)]

    @classmethod
    def from_records(cls, records):
        cols = {c: np.array([getattr(r, c) for r in records], dtype=float) for c in cls.COLUMNS}
        return cls(**cols)

    def equals(self, other) -> bool:
        return all(np.array_equal(getattr(self, c), getattr(other, c), equal_nan=True)
                   for c in self.COLUMNS)


@dataclass(frozen=True, eq=False)
class SessionReport:
    scenario: Scenario
    series: StepSeries
    battery_energy_wh: float
    supplied_energy_wh: float
    duration_h: float
    termination_reason: str

    @property
    def records(self):
        return self.series.records()

    def equals(self, other) -> bool:
        return (self.scenario == other.scenario
                and self.series.equals(other.series)
                and (self.battery_energy_wh, self.supplied_energy_wh, self.duration_h,
                     self.termination_reason)
                == (other.battery_energy_wh, other.supplied_energy_wh, other.duration_h,
                    other.termination_reason))


@dataclass(frozen=True)
class SavingsReport:
    battery_energy_saved_pct: float
    supplied_energy_saved_pct: float
    absolute_saved_wh: float
    supplied_saved_wh: float


# -- session engine ---------------------------------------------------------

@lru_cache(maxsize=32)
def _cached_trajectory(profile: ProfileParams, dt_h: float):
    return profile_trajectory(profile, dt_h)


def _duty_cycles(v_in, v_out, i_in, conv: ConverterParams):
    with np.errstate(divide="ignore", invalid="ignore"):
        if conv.mode is ConductionMode.CONTINUOUS:
            r = v_out / v_in
            duty = r / (1.0 + r)
        else:
            duty = np.sqrt(2.0 * conv.inductance_h * i_in * v_out / (v_in**2 * conv.switch_period_s))
    duty = np.where(v_in > 0, duty, np.nan)
    bad = np.flatnonzero((duty <= 0) | (duty >= 1))
    if bad.size:
        k = int(bad[0])
        raise ArbcError(f"tick {k}: converter needs duty {duty[k]:.6g} outside (0, 1)")
    return duty


def _chain_series(s: Scenario, t, p_target, i_b, v_b) -> StepSeries:
    """Vectorized control chain: supply power for each tick's battery target."""
    c = s.link()
    eff = s.converter.efficiency
    delay = s.feedback_delay_ticks
    if delay:
        requested = np.concatenate([np.full(min(delay, len(p_target)), p_target[0]), p_target[:-delay]])
        requested = requested[:len(p_target)]
    else:
        requested = p_target
    need_pv = requested / eff
    live = need_pv > 0
    p_s = np.where(live, (need_pv - c.offset) / c.slope, 0.0)
    over = np.flatnonzero(p_s > s.max_supply_w)
    if over.size:
        k = int(over[0])
        raise SupplyLimitError(
            f"required supply {p_s[k]:.6g} W exceeds bound {s.max_supply_w:.6g} W", tick=k
        )
    p_bt = np.where(live, np.maximum(0.0, c.a1 * p_s + c.b1), 0.0)
    p_br = c.eta_bt * p_bt
    p_pv = np.where(live, np.maximum(0.0, c.a2 * p_br + c.b2), 0.0)
    p_b = eff * p_pv
    if not np.allclose(p_b, requested, rtol=ROUND_TRIP_RTOL, atol=0.0):
        k = int(np.argmax(np.abs(p_b - requested)))
        raise ArbcError(f"tick {k}: chain delivered {p_b[k]!r} W for a {requested[k]!r} W target")

    panel = pv.panel_spec(s.wavelength_nm)
    v_pv, _, _ = pv.find_mpp_batch(panel, p_br, s.temp_c)
    with np.errstate(divide="ignore", invalid="ignore"):
        i_pv = np.where(v_pv > 0, p_pv / v_pv, np.nan)
    v_pv = np.where(v_pv > 0, v_pv, np.nan)
    duty = _duty_cycles(v_pv, v_b, i_pv, s.converter)
    return StepSeries(t, p_s, p_bt, p_br, p_pv, p_b, i_b, v_b, duty, v_pv, i_pv)


def _rbc_times(duration_h, dt_h):
    n = int(math.floor(duration_h / dt_h + 1e-9))
    t = np.arange(n + 1) * dt_h
    if duration_h - t[-1] > 1e-12:
        t = np.append(t, duration_h)
    else:
        t[-1] = duration_h
    return t


def _report(s, series, reason):
    return SessionReport(
        scenario=s,
        series=series,
        battery_energy_wh=float(np.trapezoid(series.p_b, series.t)),
        supplied_energy_wh=float(np.trapezoid(series.p_s, series.t)),
        duration_h=float(series.t[-1]),
        termination_reason=reason,
    )


def _run_vectorized(s: Scenario) -> SessionReport:
    if s.mode is Mode.ARBC:
        traj = _cached_trajectory(s.profile, s.dt_h)
        series = _chain_series(s, traj.t_h, traj.p_w, traj.i_ma / 1000.0, traj.v)
        return _report(s, series, traj.termination_reason)
    t = _rbc_times(s.rbc_duration_h, s.dt_h)
    v = s.profile.v_cv
    p = np.full(t.shape, s.rbc_fixed_power_w)
    series = _chain_series(s, t, p, p / v, np.full(t.shape, v))
    return _report(s, series, "rbc_duration")


def _run_stepwise(s: Scenario) -> SessionReport:
    """Tick-by-tick loop over :func:`control.arbc_step` / :func:`control.rbc_step`."""
    c = s.link()
    receiver = (pv.panel_spec(s.wavelength_nm), s.temp_c)
    kw = dict(max_supply_w=s.max_supply_w, receiver=receiver, converter=s.converter)
    records = []
    if s.mode is Mode.ARBC:
        if s.feedback_delay_ticks:
            raise ConfigError("stepwise engine does not model feedback delay", "feedback_delay_ticks")
        state = profile_init(s.profile)
        while True:
            try:
                rec, nxt = control.arbc_step(state, c, s.dt_h, s.profile, **kw)
            except SupplyLimitError as exc:
                raise SupplyLimitError(str(exc), tick=len(records)) from None
            records.append(rec)
            state = nxt
            if state.stage.name == "TERMINATED":
                break
        # The terminal state holds the last setpoint; sample it to close the integral.
        records.append(control._deliver(state.elapsed_h, state.p_pref, state.i_pref / 1000.0,
                                        state.v_pref, c, s.max_supply_w, receiver, s.converter))
        reason = state.termination_reason
    else:
        for k, t in enumerate(_rbc_times(s.rbc_duration_h, s.dt_h)):
            try:
                records.append(control.rbc_step(c, s.rbc_fixed_power_w, s.dt_h, float(t),
                                                v_b=s.profile.v_cv, **kw))
            except SupplyLimitError as exc:
                raise SupplyLimitError(str(exc), tick=k) from None
        reason = "rbc_duration"
    return _report(s, StepSeries.from_records(records), reason)


def run_session(s: Scenario, engine: str = "vectorized") -> SessionReport:
    """Run one charging session from profile start to termination.

    ``engine="stepwise"`` walks the per-tick control functions and is the
    slow reference for the default vectorized engine.
    """
    if engine == "vectorized":
        return _run_vectorized(s)
    if engine == "stepwise":
        return _run_stepwise(s)
    raise ValueError(f"unknown engine {engine!r}")


def _saved_pct(rbc, arbc):
    return 100.0 * (rbc - arbc) / rbc if rbc else 0.0


def compare_sessions(rbc: SessionReport, arbc: SessionReport) -> SavingsReport:
    modes_ok = rbc.scenario.mode is Mode.RBC and arbc.scenario.mode is Mode.ARBC
    if not modes_ok and rbc.scenario != arbc.scenario:
        raise ComparisonError("expected an RBC report and an ARBC report")
    if replace(rbc.scenario, mode=Mode.ARBC) != replace(arbc.scenario, mode=Mode.ARBC):
        raise ComparisonError("scenarios differ in more than the charging mode")
    return SavingsReport(
        battery_energy_saved_pct=_saved_pct(rbc.battery_energy_wh, arbc.battery_energy_wh),
        supplied_energy_saved_pct=_saved_pct(rbc.supplied_energy_wh, arbc.supplied_energy_wh),
        absolute_saved_wh=rbc.battery_energy_wh - arbc.battery_energy_wh,
        supplied_saved_wh=rbc.supplied_energy_wh - arbc.supplied_energy_wh,
    )


# -- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    wavelengths: tuple = (810, 1550)
    temps_c: tuple = (0.0, 25.0, 50.0)
    airs: tuple = (optics.CLEAR_AIR, optics.HAZE, optics.FOG)
    radii_km: tuple = (0.1, 0.5, 1.0)
    modes: tuple = (Mode.RBC, Mode.ARBC)

    def __post_init__(self):
        for name in ("wavelengths", "temps_c", "airs", "radii_km", "modes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "modes", tuple(Mode(m) for m in self.modes))

    def cells(self):
        return itertools.product(self.wavelengths, self.temps_c, self.airs, self.radii_km, self.modes)

    def __len__(self):
        return (len(self.wavelengths) * len(self.temps_c) * len(self.airs)
                * len(self.radii_km) * len(self.modes))


def default_grid() -> SweepGrid:
    """Both wavelengths, 0/25/50 degC, three airs, 0.1/0.5/1 km, both modes (108 cells)."""
    return SweepGrid()


@dataclass(frozen=True)
class SweepRow:
    wavelength_nm: int
    temp_c: float
    air: str
    visibility_km: float
    radius_km: float
    mode: str
    battery_energy_wh: float = math.nan
    supplied_energy_wh: float = math.nan
    duration_h: float = math.nan
    termination: str = ""
    saved_pct: float = math.nan
    error: str = ""

    @property
    def key(self):
        return (self.wavelength_nm, self.temp_c, self.air, self.visibility_km, self.radius_km, self.mode)


@dataclass(frozen=True, eq=False)
class SweepTable:
    rows: tuple
    curves: dict = field(default_factory=dict)

    def lookup(self, wavelength_nm, temp_c, air, radius_km, mode):
        air_kind = air.kind.value if isinstance(air, optics.AirCondition) else str(air)
        mode = Mode(mode).value
        for r in self.rows:
            if (r.wavelength_nm, r.temp_c, r.air, r.radius_km, r.mode) == (
                    wavelength_nm, float(temp_c), air_kind, float(radius_km), mode):
                return r
        raise KeyError((wavelength_nm, temp_c, air_kind, radius_km, mode))


def _run_cell(args):
    scenario, keep_series = args
    axes = scenario.axes()
    axes["temp_c"] = float(axes["temp_c"])
    axes["radius_km"] = float(axes["radius_km"])
    try:
        rep = run_session(scenario)
    except (ArbcError, DomainError) as exc:
        return SweepRow(**axes, error=f"{type(exc).__name__}: {exc}"), None
    row = SweepRow(**axes, battery_energy_wh=rep.battery_energy_wh,
                   supplied_energy_wh=rep.supplied_energy_wh, duration_h=rep.duration_h,
                   termination=rep.termination_reason or "")
    curve = (rep.series.t, rep.series.p_s) if keep_series else None
    return row, curve


def sweep(grid: SweepGrid, base: Scenario | None = None, *, workers: int = 1,
          keep_series: bool = False) -> SweepTable:
    """Evaluate every grid cell; rows come back in grid order.

    Cells that fail keep their axes and carry the error text.  ``saved_pct``
    is filled for ARBC rows whose RBC twin is in the grid.
    """
    if len(grid) == 0:
        raise ConfigError("sweep grid is empty", "sweep")
    base = base or Scenario()
    jobs = []
    for wl, temp, air, radius, mode in grid.cells():
        try:
            s = replace(base, wavelength_nm=wl, temp_c=temp, air=air, radius_km=radius, mode=mode)
        except ConfigError as exc:
            raise ConfigError(str(exc), "sweep") from None
        jobs.append((s, keep_series))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]

    rows = [r for r, _ in results]
    by_key = {r.key: r for r in rows}
    filled = []
    for r in rows:
        if r.mode == Mode.ARBC.value and not r.error:
            twin = by_key.get(r.key[:-1] + (Mode.RBC.value,))
            if twin is not None and not twin.error:
                r = replace(r, saved_pct=_saved_pct(twin.supplied_energy_wh, r.supplied_energy_wh))
        filled.append(r)
    curves = {r.key: curve for r, (_, curve) in zip(rows, results) if curve is not None}
    return SweepTable(tuple(filled), curves)


def savings_surface(table: SweepTable):
    """Saved supplied-energy percentage against radius, per (wavelength, temp, air)."""
    out = {}
    for r in table.rows:
        if r.mode == Mode.ARBC.value and not math.isnan(r.saved_pct):
            out.setdefault((r.wavelength_nm, r.temp_c, r.air), []).append((r.radius_km, r.saved_pct))
    return {k: sorted(v) for k, v in out.items()}
