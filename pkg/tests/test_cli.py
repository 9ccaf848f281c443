"""Command-line interface: subcommands, exit codes, config files, reports."""

import json

import pytest

from ellipsax.cli import main


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    rc = main(["simulate", "--axes", "3,2,1", "--squared",
               "--point", "umbilic", "--t-max", "4", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ("t,x_1,x_2,x_3,xi_1,xi_2,xi_3,"
                        "constraint_residual,speed_residual")
    assert len(lines) > 10
    text = capsys.readouterr().out
    assert "status ok" in text


def test_simulate_semi_axes_default_convention(capsys):
    # --axes without --squared takes semi-axes: (3,2,1) -> alphas (9,4,1)
    rc = main(["simulate", "--axes", "3,2,1", "--point", "3,0,0",
               "--direction", "0,1,0", "--t-max", "1"])
    assert rc == 0
    assert "status ok" in capsys.readouterr().out


def test_umbilic_json_report(tmp_path):
    out = tmp_path / "umb.json"
    rc = main(["umbilic", "--axes", "3,2,1", "--squared", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    assert doc["tool"] == "ellipsax"
    assert doc["command"] == "umbilic"
    assert "version" in doc and "backend" in doc
    assert doc["config"]["axes"] == "3,2,1"
    assert doc["config"]["squared"] is True
    assert len(doc["results"]["umbilic_points"]) == 4
    assert max(doc["results"]["defects"]) < 1e-12


def test_focal_scan_report_deterministic(tmp_path, capsys):
    args = ["focal-scan", "--axes", "3,2,1", "--squared", "--point",
            "umbilic", "--directions", "6", "--t-max", "12"]
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    assert main(args + ["--out", str(p1)]) == 0
    assert main(args + ["--out", str(p2)]) == 0
    assert p1.read_bytes() == p2.read_bytes()
    doc = json.loads(p1.read_text())
    assert doc["results"]["verdict"] == "self-focal-evidence"
    assert "self-focal-evidence" in capsys.readouterr().out


def test_return_map_runs(capsys):
    rc = main(["return-map", "--axes", "3,2,1", "--squared",
               "--directions", "4", "--t-max", "12"])
    assert rc == 0
    assert "sampled 4 directions" in capsys.readouterr().out


def test_lax_verify_pass_and_fail(tmp_path, capsys):
    base = ["lax-verify", "--axes", "4,3,2,1", "--squared",
            "--seed", "8", "--t-max", "10", "--samples", "6"]
    assert main(base) == 0
    capsys.readouterr()
    # an unattainable drift tolerance turns the same run into exit 3
    assert main(base + ["--drift-tol", "1e-17"]) == 3
    err = capsys.readouterr().err
    assert "FAIL" in err


def test_rosochatius_experiment_csv(tmp_path, capsys):
    out = tmp_path / "exp.csv"
    rc = main(["rosochatius", "--axes", "3,2,1", "--squared",
               "--j-grid", "0,0.2", "--directions", "4",
               "--t-max", "25", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "j,direction_index,return_time,miss_distance,halted_flag"
    assert len(lines) == 1 + 2 * 4
    text = capsys.readouterr().out
    assert "j = 0.0000" in text


def test_j_grid_colon_form(capsys):
    rc = main(["rosochatius", "--axes", "3,2,1", "--squared",
               "--j-grid", "0:0.2:2", "--directions", "2", "--t-max", "25"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "j = 0.0000" in out and "j = 0.2000" in out


def test_usage_errors_exit_2(capsys):
    assert main(["simulate", "--axes", "3,2", "--squared"]) == 2
    assert main(["simulate", "--axes", "3,2,1", "--squared",
                 "--point", "1,2"]) == 2
    assert main(["rosochatius", "--axes", "3,2,1", "--squared",
                 "--j-grid", "0:1"]) == 2
    assert main(["umbilic", "--axes", "bogus"]) == 2
    capsys.readouterr()


def test_unknown_command_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_config_file_defaults_and_override(tmp_path, capsys):
    cfg = tmp_path / "scan.cfg"
    cfg.write_text(
        "# scan defaults\n"
        "axes = 3,2,1\n"
        "squared = true\n"
        "directions = 6\n"
        "t-max = 12\n"
    )
    rc = main(["focal-scan", "--config", str(cfg), "--point", "umbilic"])
    assert rc == 0
    assert "6/6 returns" in capsys.readouterr().out
    # explicit flag wins over the config value
    rc = main(["focal-scan", "--config", str(cfg), "--point", "umbilic",
               "--directions", "4"])
    assert rc == 0
    assert "4/4 returns" in capsys.readouterr().out


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("directions 6\n")
    assert main(["focal-scan", "--config", str(bad)]) == 2
    assert main(["focal-scan", "--config", str(tmp_path / "missing.cfg")]) == 2
    capsys.readouterr()


def test_suite_only_selection(capsys):
    rc = main(["suite", "--only", "interlacing"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "[PASS] 10 interlacing" in out
    assert "1/1 criteria passed" in out


def test_suite_report_file(tmp_path, capsys):
    out = tmp_path / "suite.json"
    rc = main(["suite", "--only", "10,interlacing", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["command"] == "suite"
    assert doc["results"][0]["id"] == 10
    assert doc["results"][0]["passed"] is True
    capsys.readouterr()
