"""YAML scenario / sweep configuration.

Top-level keys are scenario fields; optional ``profile``, ``converter`` and
``sweep`` sections hold nested settings.  Unknown keys are rejected and every
error names its key path::

    wavelength_nm: 1550
    temp_c: 25
    air: haze                # or {kind: haze, visibility_km: 2.5}
    radius_km: 0.5
    mode: ARBC
    dt_s: 1
    profile:
      i_cc: 700
    converter:
      mode: continuous
    sweep:
      wavelengths: [810, 1550]
      temps_c: [0, 25, 50]
      airs: [clear, haze, fog]
      radii_km: [0.1, 0.5, 1.0]
      modes: [RBC, ARBC]
      workers: 1
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import yaml

from . import optics
from .battery import ProfileParams
from .converter import ConverterParams
from .errors import ArbcError, ConfigError
from .simkit import Mode, Scenario, SweepGrid

__all__ = ["LoadedConfig", "load_config", "parse_config", "parse_air", "profile_to_yaml"]

_SCENARIO_KEYS = {
    "wavelength_nm", "temp_c", "air", "radius_km", "mode", "dt_s",
    "rbc_fixed_power_w", "rbc_duration_h", "feedback_delay_ticks", "max_supply_w",
}
_SWEEP_KEYS = {"wavelengths", "temps_c", "airs", "radii_km", "modes", "workers"}
_CANONICAL_AIR = {"clear": optics.CLEAR_AIR, "haze": optics.HAZE, "fog": optics.FOG}


@dataclass(frozen=True)
class LoadedConfig:
    scenario: Scenario
    grid: SweepGrid | None = None
    workers: int = 1


def parse_air(value, key="air") -> optics.AirCondition:
    if isinstance(value, str):
        try:
            return _CANONICAL_AIR[value.lower()]
        except KeyError:
            raise ConfigError(f"unknown air kind {value!r} (clear, haze, fog)", key) from None
    if isinstance(value, dict):
        unknown = set(value) - {"kind", "visibility_km"}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", key)
        if "kind" not in value:
            raise ConfigError("missing 'kind'", key)
        kind = _CANONICAL_AIR.get(str(value["kind"]).lower())
        if kind is None:
            raise ConfigError(f"unknown air kind {value['kind']!r}", f"{key}.kind")
        tau = value.get("visibility_km", kind.visibility_km)
        try:
            return optics.AirCondition(kind.kind, _number(tau, f"{key}.visibility_km"))
        except ArbcError as exc:
            raise ConfigError(str(exc), f"{key}.visibility_km") from None
    raise ConfigError(f"expected a kind name or mapping, got {value!r}", key)


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key)
    return value


def _section(cls, data, key):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", key)
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", key)
    try:
        return cls(**data)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], f"{key}.{exc.key}" if exc.key else key) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), key) from None


def parse_config(data) -> LoadedConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    unknown = set(data) - _SCENARIO_KEYS - {"profile", "converter", "sweep"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")

    kwargs = {k: data[k] for k in _SCENARIO_KEYS if k in data}
    if "air" in kwargs:
        kwargs["air"] = parse_air(kwargs["air"])
    if "mode" in kwargs:
        try:
            kwargs["mode"] = Mode(str(kwargs["mode"]).upper())
        except ValueError:
            raise ConfigError(f"expected RBC or ARBC, got {kwargs['mode']!r}", "mode") from None
    for k in ("temp_c", "radius_km", "dt_s", "rbc_fixed_power_w", "rbc_duration_h", "max_supply_w"):
        if k in kwargs:
            _number(kwargs[k], k)
    kwargs["profile"] = _section(ProfileParams, data.get("profile"), "profile")
    kwargs["converter"] = _section(ConverterParams, data.get("converter"), "converter")
    scenario = Scenario(**kwargs)

    sweep = data.get("sweep")
    if sweep is None:
        return LoadedConfig(scenario)
    if not isinstance(sweep, dict):
        raise ConfigError("expected a mapping", "sweep")
    unknown = set(sweep) - _SWEEP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "sweep")
    grid_kw = {}
    for k in ("wavelengths", "temps_c", "radii_km", "airs", "modes"):
        if k not in sweep:
            continue
        values = sweep[k]
        if not isinstance(values, list) or not values:
            raise ConfigError("expected a non-empty list", f"sweep.{k}")
        if k == "airs":
            values = [parse_air(v, f"sweep.airs[{i}]") for i, v in enumerate(values)]
        elif k == "modes":
            try:
                values = [Mode(str(v).upper()) for v in values]
            except ValueError as exc:
                raise ConfigError(str(exc), "sweep.modes") from None
        else:
            values = [_number(v, f"sweep.{k}[{i}]") for i, v in enumerate(values)]
            bad = [v for v in values if k == "wavelengths" and v not in (810, 1550)]
            bad += [v for v in values if k == "temps_c" and not 0 <= v <= 50]
            bad += [v for v in values if k == "radii_km" and v < 0]
            if bad:
                raise ConfigError(f"invalid values {bad}", f"sweep.{k}")
        grid_kw[k] = tuple(values)
    workers = sweep.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError("expected a positive integer", "sweep.workers")
    return LoadedConfig(scenario, SweepGrid(**grid_kw), workers)


def load_config(path) -> LoadedConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    return parse_config(data)


def profile_to_yaml(params: ProfileParams) -> str:
    body = {f.name: float(getattr(params, f.name)) for f in fields(params)}
    return yaml.safe_dump({"profile": body}, sort_keys=False)


def with_overrides(cfg: LoadedConfig, *, mode=None, dt_s=None) -> LoadedConfig:
    s = cfg.scenario
    if mode is not None:
        s = replace(s, mode=Mode(mode.upper()))
    if dt_s is not None:
        if not dt_s > 0:
            raise ConfigError(f"must be positive, got {dt_s}", "--dt")
        s = replace(s, dt_s=dt_s)
    return replace(cfg, scenario=s)
