from __future__ import annotations

import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fracmixed.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, RESIDUAL_FLOOR, load_config, main

LINEAR = {"lambda": "0.5", "a1": "1", "a2": "1", "a3": "0", "phi1": "x", "phi2": "1 + y"}
CONSTANT = {"lambda": "0.5", "a1": "2", "a2": "1", "a3": "3", "phi1": "1", "phi2": "1"}


def write_config(tmp_path: Path, problem: dict, disc: dict | None = None, output: dict | None = None, name="run.ini"):
    lines = ["[problem]"] + [f"{k} = {v}" for k, v in problem.items()]
    lines += ["", "[discretization]"] + [f"{k} = {v}" for k, v in (disc or {"h": "1/16"}).items()]
    if output:
        lines += ["", "[output]"] + [f"{k} = {v}" for k, v in output.items()]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def read_diagnostics(path: Path) -> dict[str, float]:
    out = {}
    section = None
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            section = line[2:]
        elif section == "diagnostics" and " = " in line:
            k, v = line.split(" = ")
            out[k] = float(v)
    return out


def test_solve_writes_field_and_report(tmp_path, capsys):
    cfg = write_config(tmp_path, CONSTANT, output={"stride": "2"})
    assert main(["solve", str(cfg)]) == EXIT_OK
    with open(tmp_path / "field.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "u", "domain"]
    u = np.array([float(r[2]) for r in rows[1:]])
    assert np.max(np.abs(u - 1.0)) <= 1e-6
    assert {r[3] for r in rows[1:]} == {"omega0", "omega1", "omega2", "omega3"}
    diag = read_diagnostics(tmp_path / "diagnostics.txt")
    assert max(diag.values()) <= 1e-6
    assert "wrote" in capsys.readouterr().out


def test_config_is_echoed(tmp_path):
    cfg = write_config(tmp_path, LINEAR, {"h": "1/16", "gamma_factor": "off"})
    assert main(["verify", str(cfg)]) == EXIT_OK
    text = (tmp_path / "diagnostics.txt").read_text()
    assert "# effective configuration" in text
    assert "h = 0.0625" in text and "gamma_factor = False" in text
    assert "transmission_points = auto" in text and "solver_tol = 1e-10" in text
    assert "phi2 = 1 + y" in text


def test_echo_round_trips(tmp_path):
    cfg = load_config(write_config(tmp_path, LINEAR, {"h": "1/16", "transmission_points": "64"}))
    from fracmixed.cli import effective_config

    again = tmp_path / "again.ini"
    again.write_text("\n".join(effective_config(cfg)) + "\n")
    assert load_config(again).disc == cfg.disc


def test_verify_prints_conditions(tmp_path, capsys):
    assert main(["verify", str(write_config(tmp_path, LINEAR))]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out] == ["pde", "nonlocal", "char_CB", "char_BE", "transmission"]


def test_env_overrides_output_paths(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, CONSTANT)
    monkeypatch.setenv("FRACMIXED_FIELD", str(tmp_path / "elsewhere" / "u.csv"))
    monkeypatch.setenv("FRACMIXED_DIAGNOSTICS", str(tmp_path / "elsewhere" / "d.txt"))
    assert main(["solve", str(cfg)]) == EXIT_OK
    assert (tmp_path / "elsewhere" / "u.csv").exists()
    assert (tmp_path / "elsewhere" / "d.txt").exists()
    assert not (tmp_path / "field.csv").exists()


def test_table_data(tmp_path):
    x = np.linspace(0.5, 1.0, 11)
    np.savetxt(tmp_path / "phi1.csv", np.column_stack([x, x, np.ones_like(x)]), delimiter=",", header="x,value,deriv")
    cfg = write_config(tmp_path, {**LINEAR, "phi1": "file:phi1.csv"})
    assert main(["solve", str(cfg)]) == EXIT_OK


@pytest.mark.parametrize(
    ("change", "needle"),
    [
        ({"a1": "t - 0.1"}, "DegenerateCoefficients"),
        ({"lambda": "1.5"}, "lambda"),
        ({"a1": "t +"}, "ExprSyntaxError"),
        ({"phi2": "2 + y"}, "corner"),
        ({"a3": "foo(t)"}, "UnknownIdentifier"),
        ({"kind": "other"}, "kind"),
    ],
)
def test_validation_exit_code(tmp_path, capsys, change, needle):
    cfg = write_config(tmp_path, {**LINEAR, **change})
    assert main(["solve", str(cfg)]) == EXIT_VALIDATION
    assert needle in capsys.readouterr().err


@pytest.mark.parametrize(
    "disc", [{"h": "0.3"}, {"h": "1/16", "bogus": "1"}, {"h": "1/16", "n_images": "many"}]
)
def test_bad_discretization(tmp_path, disc):
    assert main(["solve", str(write_config(tmp_path, LINEAR, disc))]) == EXIT_VALIDATION


def test_missing_config(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "nope.ini")]) == EXIT_VALIDATION
    assert "cannot read config" in capsys.readouterr().err


def test_numerical_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, LINEAR, {"h": "1/16", "det_tol": "1e9"})
    assert main(["solve", str(cfg)]) == EXIT_NUMERICAL
    assert "SingularStep" in capsys.readouterr().err


def test_converge_linear_data(tmp_path, capsys):
    cfg = write_config(tmp_path, LINEAR, {"h": "1/16"})
    assert main(["converge", str(cfg), "--levels", "3"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    header = out[0].split(",")
    orders = [line.split(",") for line in out if "->" in line]
    assert len(orders) == 2
    for row in orders:
        for key, value in zip(header[1:], row[1:]):
            assert value == "floor" or float(value) >= 0.9, key


def test_converge_constant_data_reports_floor(tmp_path, capsys):
    cfg = write_config(tmp_path, CONSTANT, {"h": "1/16"})
    assert main(["converge", str(cfg), "--levels", "2"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    header = out[0].split(",")
    row = [line for line in out if "->" in line][0].split(",")
    assert dict(zip(header, row))["transmission"] == "floor"
    assert dict(zip(header, row))["nonlocal"] == "floor"
    assert RESIDUAL_FLOOR == 1e-6


def test_converge_manufactured_mode(tmp_path, capsys):
    cfg = write_config(tmp_path, {"lambda": "0.5", "kind": "manufactured"}, {"h": "1/64"})
    assert main(["converge", str(cfg), "--levels", "3"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    orders = [float(line.split(",")[1]) for line in out if "->" in line]
    assert all(o >= 1.4 for o in orders)
    assert main(["solve", str(cfg)]) == EXIT_VALIDATION


def test_converge_needs_two_levels(tmp_path):
    assert main(["converge", str(write_config(tmp_path, LINEAR)), "--levels", "1"]) == EXIT_VALIDATION


def test_oracle_command(tmp_path, capsys):
    cfg = write_config(tmp_path, {**LINEAR, "lambda": "1"}, {"h": "1/32"})
    assert main(["oracle", str(cfg)]) == EXIT_OK
    vals = dict(line.split(" = ") for line in capsys.readouterr().out.splitlines())
    assert float(vals["fd_vs_closed_form"]) <= 1e-2
    assert float(vals["representation_vs_fd"]) <= 1e-2


def test_deterministic_output(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, {**LINEAR, "a3": "sin(t)", "a1": "2 + t"})
    outputs = []
    for k in range(2):
        monkeypatch.setenv("FRACMIXED_FIELD", str(tmp_path / f"f{k}.csv"))
        monkeypatch.setenv("FRACMIXED_DIAGNOSTICS", str(tmp_path / f"d{k}.txt"))
        assert main(["solve", str(cfg)]) == EXIT_OK
        outputs.append(((tmp_path / f"f{k}.csv").read_bytes(), read_diagnostics(tmp_path / f"d{k}.txt")))
    assert outputs[0] == outputs[1]


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, CONSTANT)
    res = subprocess.run([sys.executable, "-m", "fracmixed", "verify", str(cfg)], capture_output=True, text=True)
    assert res.returncode == 0 and "transmission" in res.stdout
    res = subprocess.run([sys.executable, "-m", "fracmixed", "solve", str(tmp_path / "x.ini")], capture_output=True)
    assert res.returncode == 2
