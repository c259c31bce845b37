import math
from dataclasses import replace

import numpy as np
import pytest

from arbcsim import optics, report, simkit
from arbcsim.errors import ComparisonError, ConfigError, SupplyLimitError
from arbcsim.simkit import Mode, Scenario, SweepGrid


@pytest.fixture(scope="module")
def pair():
    s = Scenario()
    return simkit.run_session(replace(s, mode=Mode.RBC)), simkit.run_session(s)


def test_session_energies(pair):
    rbc, arbc = pair
    assert rbc.battery_energy_wh == pytest.approx(15.20, rel=1e-6)
    assert rbc.duration_h == pytest.approx(15.20 / 4.2)
    assert arbc.battery_energy_wh == pytest.approx(5.96, rel=1e-3)
    assert arbc.termination_reason == "session_cutoff"
    assert rbc.termination_reason == "rbc_duration"


def test_supplied_power_tracks_battery_power(pair):
    _, arbc = pair
    ser = arbc.series
    live = ser.p_b > 0
    c = arbc.scenario.link()
    np.testing.assert_allclose(ser.p_b[live], c.slope * ser.p_s[live] + c.offset, rtol=1e-9)
    assert np.all(ser.p_s[~live] == 0)
    assert np.all((ser.duty[live] > 0) & (ser.duty[live] < 1))


def test_compare_sessions(pair):
    rbc, arbc = pair
    sav = simkit.compare_sessions(rbc, arbc)
    assert sav.battery_energy_saved_pct == pytest.approx(100 * (15.20 - 5.96) / 15.20, abs=0.1)
    assert sav.absolute_saved_wh == pytest.approx(rbc.battery_energy_wh - arbc.battery_energy_wh)
    assert 52 <= sav.supplied_energy_saved_pct <= 61
    assert simkit.compare_sessions(rbc, rbc).supplied_energy_saved_pct == 0.0


def test_compare_rejects_mismatch(pair):
    rbc, arbc = pair
    other = simkit.run_session(replace(arbc.scenario, radius_km=0.5))
    with pytest.raises(ComparisonError):
        simkit.compare_sessions(rbc, other)
    with pytest.raises(ComparisonError):
        simkit.compare_sessions(arbc, rbc)


def test_deterministic(pair):
    _, arbc = pair
    simkit._cached_trajectory.cache_clear()
    again = simkit.run_session(Scenario())
    assert again.equals(arbc)


@pytest.mark.parametrize("mode", list(Mode))
def test_dt_halving_converges(mode):
    s = Scenario(mode=mode, dt_s=2.0)
    coarse = simkit.run_session(s).supplied_energy_wh
    fine = simkit.run_session(replace(s, dt_s=1.0)).supplied_energy_wh
    assert abs(coarse - fine) / fine < 1e-3


@pytest.mark.parametrize("mode", list(Mode))
def test_stepwise_engine_matches_vectorized(mode):
    s = Scenario(mode=mode, dt_s=60.0, wavelength_nm=1550, temp_c=25, air=optics.HAZE, radius_km=0.5)
    fast = simkit.run_session(s)
    slow = simkit.run_session(s, engine="stepwise")
    assert len(fast.series) == len(slow.series)
    for col in ("t", "p_s", "p_b", "duty", "v_pv"):
        np.testing.assert_allclose(getattr(slow.series, col), getattr(fast.series, col),
                                   rtol=1e-6, atol=1e-12)
    assert slow.supplied_energy_wh == pytest.approx(fast.supplied_energy_wh, rel=1e-9)
    assert slow.termination_reason == fast.termination_reason


def test_unknown_engine():
    with pytest.raises(ValueError):
        simkit.run_session(Scenario(), engine="magic")


def test_feedback_delay_shifts_supply():
    s = Scenario(dt_s=60.0)
    base = simkit.run_session(s).series
    late = simkit.run_session(replace(s, feedback_delay_ticks=2)).series
    np.testing.assert_array_equal(late.p_s[2:], base.p_s[:-2])
    with pytest.raises(ConfigError):
        simkit.run_session(replace(s, feedback_delay_ticks=2), engine="stepwise")


def test_supply_limit_reports_tick():
    with pytest.raises(SupplyLimitError) as info:
        simkit.run_session(Scenario(max_supply_w=12.0, dt_s=60.0))
    assert info.value.tick > 0
    assert str(info.value).startswith(f"tick {info.value.tick}:")


@pytest.mark.parametrize("kw, key", [
    ({"wavelength_nm": 1064}, "wavelength_nm"), ({"temp_c": 60}, "temp_c"),
    ({"radius_km": -1}, "radius_km"), ({"dt_s": 0}, "dt_s"), ({"feedback_delay_ticks": -1}, "feedback_delay_ticks"),
])
def test_scenario_validation(kw, key):
    with pytest.raises(ConfigError) as info:
        Scenario(**kw)
    assert info.value.key == key


def test_supplied_energy_orderings():
    def supplied(**kw):
        return simkit.run_session(Scenario(dt_s=60.0, **kw)).supplied_energy_wh
    assert supplied(radius_km=0.1) < supplied(radius_km=0.5) < supplied(radius_km=1.0)
    assert supplied(air=optics.CLEAR_AIR) < supplied(air=optics.HAZE) < supplied(air=optics.FOG)
    assert supplied(wavelength_nm=1550, temp_c=0) < supplied(wavelength_nm=1550, temp_c=50)
    assert supplied(mode=Mode.ARBC) < supplied(mode=Mode.RBC)


def test_table_v_grid_shape():
    grid = simkit.default_grid()
    assert len(grid) == 108
    assert len(list(grid.cells())) == 108


def test_sweep_records_errors_and_savings():
    grid = SweepGrid(wavelengths=(810,), temps_c=(0,), airs=(optics.FOG,), radii_km=(0.1, 80.0),
                     modes=(Mode.RBC, Mode.ARBC))
    table = simkit.sweep(grid, Scenario(dt_s=60.0))
    assert [r.mode for r in table.rows] == ["RBC", "ARBC", "RBC", "ARBC"]
    ok = table.lookup(810, 0, "fog", 0.1, "ARBC")
    assert not ok.error and 0 < ok.saved_pct < 100
    bad = table.lookup(810, 0, optics.FOG, 80.0, Mode.ARBC)
    assert bad.error.startswith("DomainError") and math.isnan(bad.supplied_energy_wh)
    assert math.isnan(bad.saved_pct)
    with pytest.raises(KeyError):
        table.lookup(1550, 0, "fog", 0.1, "ARBC")


def test_sweep_workers_identical():
    grid = SweepGrid(wavelengths=(810, 1550), temps_c=(25,), airs=(optics.HAZE,), radii_km=(0.5,),
                     modes=(Mode.RBC, Mode.ARBC))
    base = Scenario(dt_s=60.0)
    serial = simkit.sweep(grid, base)
    parallel = simkit.sweep(grid, base, workers=2)
    assert report.sweep_to_csv(serial) == report.sweep_to_csv(parallel)


def test_sweep_keeps_curves_and_surface():
    grid = SweepGrid(wavelengths=(810,), temps_c=(0,), airs=(optics.CLEAR_AIR,), radii_km=(0.1, 1.0),
                     modes=(Mode.RBC, Mode.ARBC))
    table = simkit.sweep(grid, Scenario(dt_s=60.0), keep_series=True)
    assert len(table.curves) == 4
    surface = simkit.savings_surface(table)
    assert list(surface) == [(810, 0.0, "clear")]
    assert [r for r, _ in surface[(810, 0.0, "clear")]] == [0.1, 1.0]


def test_empty_grid_rejected():
    with pytest.raises(ConfigError):
        simkit.sweep(SweepGrid(wavelengths=()))
