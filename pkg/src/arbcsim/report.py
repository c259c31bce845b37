"""CSV / JSON emission for session, comparison and sweep reports.

Floats are written with 6 significant digits; missing values are empty CSV
cells and JSON ``null``.  Output is byte-identical for identical reports.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import asdict, fields
from pathlib import Path

from .simkit import SavingsReport, SessionReport, StepSeries, SweepRow, SweepTable

__all__ = [
    "SWEEP_COLUMNS",
    "SAVINGS_COLUMNS",
    "JSON_SCHEMA_VERSION",
    "fmt",
    "sweep_to_csv",
    "sweep_to_json",
    "sweep_from_json",
    "session_row",
    "series_to_csv",
    "savings_to_csv",
    "savings_to_json",
    "emit_report",
]

JSON_SCHEMA_VERSION = 1
SWEEP_COLUMNS = tuple(f.name for f in fields(SweepRow))
SAVINGS_COLUMNS = tuple(f.name for f in fields(SavingsReport))
_FLOAT_FIELDS = {"temp_c", "visibility_km", "radius_km", "battery_energy_wh",
                 "supplied_energy_wh", "duration_h", "saved_pct"}


def fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else f"{x:.6g}"
    return str(x)


def _json_float(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return float(f"{x:.6g}")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def session_row(report: SessionReport) -> SweepRow:
    axes = report.scenario.axes()
    axes["temp_c"] = float(axes["temp_c"])
    axes["radius_km"] = float(axes["radius_km"])
    return SweepRow(**axes, battery_energy_wh=report.battery_energy_wh,
                    supplied_energy_wh=report.supplied_energy_wh,
                    duration_h=report.duration_h, termination=report.termination_reason or "")


def sweep_to_csv(table: SweepTable) -> str:
    return _csv(SWEEP_COLUMNS, ([getattr(r, c) for c in SWEEP_COLUMNS] for r in table.rows))


def sweep_to_json(table: SweepTable) -> str:
    """Results nested wavelength -> temperature -> air -> radius -> mode."""
    nested = {}
    for r in table.rows:
        leaf = {
            "visibility_km": _json_float(r.visibility_km),
            "battery_energy_wh": _json_float(r.battery_energy_wh),
            "supplied_energy_wh": _json_float(r.supplied_energy_wh),
            "duration_h": _json_float(r.duration_h),
            "termination": r.termination,
            "saved_pct": _json_float(r.saved_pct),
            "error": r.error,
        }
        (nested.setdefault(str(r.wavelength_nm), {})
               .setdefault(fmt(r.temp_c), {})
               .setdefault(r.air, {})
               .setdefault(fmt(r.radius_km), {}))[r.mode] = leaf
    doc = {"schema": "arbcsim.sweep", "schema_version": JSON_SCHEMA_VERSION, "results": nested}
    return json.dumps(doc, indent=2) + "\n"


def sweep_from_json(text: str) -> SweepTable:
    doc = json.loads(text)
    if doc.get("schema") != "arbcsim.sweep" or doc.get("schema_version") != JSON_SCHEMA_VERSION:
        raise ValueError("not an arbcsim sweep document of a supported version")
    rows = []
    for wl, by_t in doc["results"].items():
        for temp, by_air in by_t.items():
            for air, by_r in by_air.items():
                for radius, by_mode in by_r.items():
                    for mode, leaf in by_mode.items():
                        vals = {k: (math.nan if v is None and k in _FLOAT_FIELDS else v)
                                for k, v in leaf.items()}
                        rows.append(SweepRow(int(wl), float(temp), air, radius_km=float(radius),
                                             mode=mode, **vals))
    return SweepTable(tuple(rows))


def series_to_csv(series: StepSeries) -> str:
    cols = [getattr(series, c) for c in series.COLUMNS]
    return _csv(series.COLUMNS, ([float(v) for v in row] for row in zip(*cols)))


def savings_to_csv(savings: SavingsReport) -> str:
    return _csv(SAVINGS_COLUMNS, [[getattr(savings, c) for c in SAVINGS_COLUMNS]])


def savings_to_json(savings: SavingsReport) -> str:
    body = {k: _json_float(v) for k, v in asdict(savings).items()}
    doc = {"schema": "arbcsim.savings", "schema_version": JSON_SCHEMA_VERSION, **body}
    return json.dumps(doc, indent=2) + "\n"


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    p = Path(path)
    try:
        fh = p.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc.strerror}") from exc
    with fh:
        yield fh


def emit_report(report, fmt_name: str = "csv", path=None) -> None:
    """Write a sweep table, session report or savings report to ``path`` (stdout if None)."""
    if fmt_name not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt_name!r}")
    if isinstance(report, SessionReport):
        report = SweepTable((session_row(report),))
    if isinstance(report, SweepTable):
        text = sweep_to_csv(report) if fmt_name == "csv" else sweep_to_json(report)
    elif isinstance(report, SavingsReport):
        text = savings_to_csv(report) if fmt_name == "csv" else savings_to_json(report)
    else:
        raise TypeError(f"cannot emit {type(report).__name__}")
    with _open_out(path) as fh:
        fh.write(text)
