import csv
import json

import pytest

from surfstokes.cli import CSV_COLUMNS, StudyConfig, main, parse_levels, parse_surface, run_study


def test_parse_helpers():
    assert parse_levels("1..5") == (1, 5)
    assert parse_levels("3") == (3, 3)
    with pytest.raises(ValueError):
        parse_levels("4..2")
    s = parse_surface("ellipsoid:1.1,1.2,1.3")
    assert s.kind == "ellipsoid" and s.semi_axes == (1.1, 1.2, 1.3)
    assert parse_surface("sphere").semi_axes == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        parse_surface("ellipsoid:1,2")
    with pytest.raises(ValueError):
        parse_surface("torus:1,2")


def test_single_level_study_has_empty_rates(tmp_path, capsys):
    out = tmp_path / "one"
    assert main(["study", "--levels", "2..2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out.with_suffix(".csv"))))
    assert len(rows) == 1
    assert list(rows[0]) == CSV_COLUMNS
    assert rows[0]["rate_energy"] == rows[0]["rate_l2_vel"] == rows[0]["rate_l2_pres"] == ""
    assert float(rows[0]["seconds"]) > 0
    payload = json.loads(out.with_suffix(".json").read_text())
    assert payload["rows"][0]["level"] == 2
    assert payload["rows"][0]["e_energy"] == float(rows[0]["e_energy"])
    assert capsys.readouterr().out.startswith("level,h,")


def test_csv_bitwise_stable(tmp_path):
    paths = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["study", "--levels", "1..2", "--no-timings", "--out", str(out)]) == 0
        paths.append(out.with_suffix(".csv"))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_projected_load_keeps_energy_rate():
    _, rows = run_study(StudyConfig(levels=(1, 3), fh_mode="projected"))
    assert 0.85 <= rows[-1]["rate_energy"] <= 1.3


def test_check_conformity(capsys):
    assert main(["check", "--suite", "conformity", "--level", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["conformity"]["pass"]
    assert report["conformity"]["max_relative_normal_jump"] <= 1e-12


def test_check_infsup(tmp_path):
    out = tmp_path / "infsup.json"
    assert main(["check", "--suite", "infsup", "--levels", "1..2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())["infsup"]
    assert len(report["beta"]) == 2 and min(report["beta"]) > 0


def test_check_geometry_on_sphere(capsys):
    assert main(["check", "--suite", "geometry", "--surface", "sphere:1", "--levels", "1..3"]) == 0
    report = json.loads(capsys.readouterr().out)["geometry"]
    assert report["sphere_closed_form_pass"]
    assert report["sphere_closed_form_max_error"] <= 1e-10


def test_export_mesh(tmp_path):
    out = tmp_path / "m.off"
    assert main(["export-mesh", "--surface", "sphere:2", "--level", "1", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1] == "42 80 0"


def test_errors_give_nonzero_exit(capsys):
    assert main(["study", "--surface", "cube:1", "--levels", "1..1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ValueError"
    assert main(["export-mesh", "--level", "12", "--out", "/dev/null"]) == 2
    with pytest.raises(SystemExit):
        main(["study", "--levels", "3..1"])


def test_thread_limit_env(monkeypatch):
    monkeypatch.setenv("SURFSTOKES_NUM_THREADS", "1")
    assert main(["study", "--levels", "0..0", "--no-timings"]) == 0
