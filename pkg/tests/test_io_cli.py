import json
from pathlib import Path

import numpy as np
import pytest

from twpa import __version__, io
from twpa.cli import run
from twpa.config import load_config
from twpa.demo import write_demo
from twpa.errors import ConfigError, SchemaError
from twpa.line import LineLayout, line_sparameters

FAST = ["--line.n_supercells", "60", "--nonlinear.calibration_n_supercells", "60", "--nonlinear.signal_points", "5"]


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    return write_demo(tmp_path_factory.mktemp("demo"))


def _kv(path):
    return dict(line.split(" = ", 1) for line in Path(path).read_text().splitlines())


def test_fmt():
    assert io.fmt(1234.5) == "1.23450000e+03"
    assert io.fmt(-0.0) == "0.00000000e+00"
    assert io.fmt(3) == "3"
    assert io.fmt(True) == "true"


def test_read_table_errors(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("")
    with pytest.raises(SchemaError):
        io.read_film_samples(p)
    p.write_text("thickness_nm,sheet_resistance_ohm_sq,tc_k\n10,86,12.5\n20,abc,13\n")
    with pytest.raises(SchemaError) as exc:
        io.read_film_samples(p)
    msg = str(exc.value)
    assert "row 3" in msg and "sheet_resistance_ohm_sq" in msg and "a.csv" in msg
    p.write_text("t,v\n1,2\n")
    with pytest.raises(SchemaError, match="expected header"):
        io.read_noise_scan(p)


def test_phase_scan_units(tmp_path):
    p = io.write_table(tmp_path / "p.csv", io.PHASE_SCAN_HEADER, [(0.2, 1e-3), (0.4, 4e-3), (0.6, 9e-3)])
    scan = io.read_phase_scan(p)
    np.testing.assert_allclose(scan.dc_currents, [2e-4, 4e-4, 6e-4])


def test_touchstone_round_trip(tmp_path):
    f = np.linspace(1e9, 6e9, 11)
    s = line_sparameters(LineLayout(n_supercells=20), f)
    p = io.write_touchstone(tmp_path / "x.s2p", f, *s)
    assert "# GHz S RI R 50" in p.read_text()
    f2, S, z0 = io.read_touchstone(p)
    assert z0 == 50.0
    np.testing.assert_allclose(f2, f, rtol=1e-8)
    np.testing.assert_allclose(S[:, 1, 0], s[1], rtol=1e-7, atol=1e-8)
    np.testing.assert_allclose(S[:, 0, 0], s[0], rtol=1e-7, atol=1e-8)


def test_config_overrides_and_errors(demo):
    cfg = load_config(demo / "twpa.ini", {"line.n_supercells": "1000"})
    assert cfg.integer("line", "n_supercells") == 1000
    assert cfg.path("film", "samples") == demo / "film_samples.csv"
    with pytest.raises(ConfigError):
        load_config(demo / "twpa.ini", {"line.bogus": "1"})
    with pytest.raises(ConfigError):
        load_config(demo / "missing.ini")
    bad = demo / "bad.ini"
    bad.write_text("[noise]\nquanta_convention = nope\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_film_fit_demo(demo, tmp_path):
    assert run(["film-fit", "--config", str(demo / "twpa.ini"), "--out", str(tmp_path)]) == 0
    rep = _kv(tmp_path / "film" / "film_report.txt")
    assert float(rep["deposition_rate_nm_per_min"]) == pytest.approx(5.2, rel=1e-12)
    samples = io.read_table(tmp_path / "film" / "film_samples.csv",
                            ("thickness_nm", "rs_ohm_sq", "rs_model", "tc_k", "tc_model", "l0_ph_sq", "l0_model"))
    for data, model in ((1, 2), (3, 4), (5, 6)):
        scale = np.abs(samples[:, data]).max()
        rms = np.sqrt(np.mean((samples[:, data] - samples[:, model]) ** 2))
        assert rms < 1e-3 * scale
    run_json = json.loads((tmp_path / "film" / "run.json").read_text())
    assert run_json["command"] == "film-fit"
    assert set(run_json["input_digests"]) == {"film_samples.csv", "deposition.csv"}


def test_design_default(tmp_path):
    assert run(["design", "--out", str(tmp_path)]) == 0
    rep = _kv(tmp_path / "design" / "design_report.txt")
    assert rep["gap_count"] == "1"
    assert 7e9 <= float(rep["gap_1_lo_hz"]) <= 8e9
    assert rep["total_cells"] == "34518"
    _, S, _ = io.read_touchstone(tmp_path / "design" / "line.s2p")
    assert S.shape[1:] == (2, 2)


def test_design_no_loading(tmp_path):
    assert run(["design", "--out", str(tmp_path), "--line.z_loaded_ohm", "50"]) == 0
    rep = _kv(tmp_path / "design" / "design_report.txt")
    assert rep["gaps"] == "no gap found below 10 GHz"


def test_gain_zero_pump(tmp_path):
    assert run(["gain", "--out", str(tmp_path), "--nonlinear.pump_ratio", "0", *FAST]) == 0
    data = io.read_table(tmp_path / "gain" / "gain.csv", io.GAIN_HEADER)
    np.testing.assert_allclose(data[:, 1], 0.0, atol=1e-9)


def test_gain_pump_in_gap(tmp_path, capsys):
    rc = run(["gain", "--out", str(tmp_path), "--nonlinear.pump_frequency_ghz", "7.7", *FAST])
    assert rc == 2
    err = capsys.readouterr().err
    assert "stopband" in err and "GHz" in err


def test_noise_fit_demo(demo, tmp_path):
    assert run(["noise-fit", "--config", str(demo / "twpa.ini"), "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "noise" / "noise_result.json").read_text())
    assert float(rec["t_n_k"]) == pytest.approx(0.5, rel=1e-6)
    assert float(rec["n_quanta"]) == pytest.approx(2.60, abs=0.01)
    assert {"t_sys_k", "slope", "intercept", "frequency_hz", "f1", "f2", "t_hemt_k"} <= rec.keys()


def test_noise_fit_negative_slope(tmp_path, capsys):
    p = io.write_table(tmp_path / "scan.csv", io.NOISE_SCAN_HEADER, [(0.3, 5), (1.0, 4), (2.0, 3)])
    assert run(["noise-fit", "--scan", str(p), "--out", str(tmp_path)]) == 3
    assert "slope" in capsys.readouterr().err


def test_schema_error_exit_code(tmp_path, capsys):
    p = tmp_path / "scan.csv"
    p.write_text("t_source_k,v_n_squared\n0.3,1\n1.0,x\n2.0,3\n")
    assert run(["noise-fit", "--scan", str(p), "--out", str(tmp_path)]) == 2
    assert "row 3" in capsys.readouterr().err


def test_report_missing(tmp_path):
    assert run(["report", "--out", str(tmp_path)]) == 2


def test_output_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TWPA_OUT", str(tmp_path / "env"))
    monkeypatch.chdir(tmp_path)
    assert run(["design", "--line.sweep_points", "11"]) == 0
    assert (tmp_path / "env" / "design" / "design_report.txt").is_file()


def test_report_deterministic(demo, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run(["report", "--rebuild", "--config", str(demo / "twpa.ini"), "--out", str(out), *FAST]) == 0
        outs.append(out)
    text = (outs[0] / "report.md").read_text()
    assert text.count("\n## ") == 4
    assert __version__ in text and "config_digest" in text
    for rel in ("report.md", "film/film_samples.csv", "design/line.s2p", "gain/gain.csv", "noise/noise_report.txt"):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()


def test_init_demo(tmp_path):
    assert run(["init-demo", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "twpa.ini").is_file()


def test_theta0_correction_hook(demo, tmp_path):
    base = ["gain", "--config", str(demo / "twpa.ini"), "--nonlinear.pump_ratio", "0", *FAST]
    assert run([*base, "--out", str(tmp_path / "a")]) == 0
    assert run([*base, "--out", str(tmp_path / "b"), "--nonlinear.theta0_correction", "0.1"]) == 0
    a = float(_kv(tmp_path / "a" / "gain" / "gain_report.txt")["scaling_current_a"])
    b = float(_kv(tmp_path / "b" / "gain" / "gain_report.txt")["scaling_current_a"])
    assert a == pytest.approx(5.3e-3, rel=1e-9)
    assert b > a
