import json

import pytest
import yaml

from arbcsim import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_defaults(capsys, tmp_path):
    series = tmp_path / "series.csv"
    code, out, _ = run(capsys, "run", "--dt", "60", "--series", str(series))
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert row[:6] == ["810", "0", "clear", "10", "0.1", "ARBC"]
    assert float(row[6]) == pytest.approx(5.96, rel=0.01)
    assert series.read_text().startswith("t,p_s,")


def test_run_mode_override_json(capsys):
    code, out, _ = run(capsys, "run", "--mode", "rbc", "--dt", "60", "--format", "json")
    assert code == 0
    leaf = json.loads(out)["results"]["810"]["0"]["clear"]["0.1"]["RBC"]
    assert leaf["battery_energy_wh"] == pytest.approx(15.2)


def test_compare(capsys):
    code, out, _ = run(capsys, "compare", "--dt", "60")
    assert code == 0
    header, row = out.splitlines()
    assert header.startswith("battery_energy_saved_pct,supplied_energy_saved_pct")
    assert 60 < float(row.split(",")[0]) < 62


def test_sweep_from_config(capsys, tmp_path):
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text(yaml.safe_dump({"dt_s": 60, "sweep": {"wavelengths": [1550], "temps_c": [0, 50],
                                                          "airs": ["haze"], "radii_km": [0.5]}}))
    curves = tmp_path / "curves"
    out_csv = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--config", str(cfg), "--out", str(out_csv),
                     "--curves-dir", str(curves))
    assert code == 0
    assert len(out_csv.read_text().splitlines()) == 1 + 4
    assert len(list(curves.glob("ps_1550nm_*.csv"))) == 4


def test_sweep_output_byte_identical(capsys, tmp_path):
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text("dt_s: 60\nsweep: {temps_c: [25], radii_km: [1.0]}\n")
    outs = []
    for name in ("a.csv", "b.csv"):
        assert run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / name))[0] == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_calibrate_profile(capsys):
    code, out, _ = run(capsys, "calibrate-profile", "--dt", "60")
    assert code == 0
    body = yaml.safe_load(out)["profile"]
    assert body["i_cc"] == 700 and 1.0 < body["cv_decay_tau_h"] < 3.0


def test_regen_pv_fit(capsys, tmp_path):
    code, out, _ = run(capsys, "regen-pv-fit")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "wavelength_nm,temp_c,a2_regen,a2_table,a2_dev_pct,b2_regen,b2_table"
    assert len(lines) == 23
    assert all(abs(float(l.split(",")[4])) < 5 for l in lines[1:])
    path = tmp_path / "fit.csv"
    code, out, err = run(capsys, "regen-pv-fit", "--out", str(path))
    assert code == 0 and out == "" and err.count("\n") == 23
    assert path.read_text().startswith("wavelength_nm,temp_c,a2,b2\n")


@pytest.mark.parametrize("doc", ["air: {kind: haze, visibility_km: 7}\n", "radius_km: -1\n",
                                 "unknown_key: 1\n", "air: [oops\n"])
def test_bad_config_exit_2(capsys, tmp_path, doc):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(doc)
    code, out, err = run(capsys, "run", "--config", str(cfg))
    assert code == 2
    assert out == "" and "config error" in err


def test_usage_errors_exit_2(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "run", "--format", "xml")[0] == 2
    assert run(capsys, "run", "--dt", "0")[0] == 2
    assert run(capsys, "run", "--config", "/nonexistent.yaml")[0] == 2
    assert run(capsys, "--help")[0] == 0


def test_runtime_error_exit_3(capsys, tmp_path):
    cfg = tmp_path / "limit.yaml"
    cfg.write_text("max_supply_w: 5\ndt_s: 60\n")
    code, _, err = run(capsys, "run", "--config", str(cfg))
    assert code == 3 and "exceeds bound" in err
    code, _, err = run(capsys, "run", "--dt", "60", "--out", str(tmp_path / "no" / "dir.csv"))
    assert code == 3 and "cannot write" in err
