import json

import numpy as np
import pytest

from gravflow import cli
from gravflow.core import Grid, State
from gravflow.snapshots import write_snapshot


def _run(*args):
    return cli.main([str(a) for a in args])


def _write(path, text):
    path.write_text(text)
    return path


def test_trivial_simulation(tmp_path):
    out = tmp_path / "triv"
    assert _run("simulate", "--preset", "trivial", "--out", out) == cli.EXIT_OK
    rows = [line.split(",") for line in (out / "diagnostics.csv").read_text().splitlines()[1:]]
    assert len(rows) == 11
    cols = list(zip(*rows))
    for c in cols[1:9]:
        assert len(set(c)) == 1
    assert json.loads((out / "report.json").read_text())["converged"]
    assert json.loads((out / "audit.json").read_text())["violations"] == []
    assert sorted(p.name for p in out.glob("snap_*.bin")) == ["snap_000000.bin", "snap_000010.bin"]


@pytest.mark.slow
def test_hotspot_simulation_burns_fuel(tmp_path):
    out = tmp_path / "hot"
    assert _run("simulate", "--preset", "hotspot", "--out", out) == cli.EXIT_OK
    header, *rows = (out / "diagnostics.csv").read_text().splitlines()
    col = header.split(",").index("int_rhoZ")
    fuel = [float(r.split(",")[col]) for r in rows]
    assert len(fuel) == 201 and all(b < a for a, b in zip(fuel, fuel[1:]))


def test_same_config_same_bytes(tmp_path):
    for name in ("a", "b"):
        assert _run("simulate", "--preset", "vacuum-blob", "--out", tmp_path / name) == cli.EXIT_OK
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()


@pytest.mark.parametrize("dt", ["0.0", "-0.01"])
def test_nonpositive_dt_is_a_usage_error(tmp_path, dt):
    cfg = _write(tmp_path / "c.toml", f"[run]\nT = 0.1\ndt = {dt}\n")
    out = tmp_path / "never"
    assert _run("simulate", "--config", cfg, "--out", out) == cli.EXIT_USAGE
    assert not out.exists()


@pytest.mark.parametrize("text", ["[run]\nT = 0.1\ndt = 0.03\n", "[params]\nmu = -1.0\n", "[run]\nbogus = 1\n",
                                  "this is [not toml", "[grid]\nextents = [8, 8]\n"])
def test_bad_configs_are_usage_errors(tmp_path, text):
    cfg = _write(tmp_path / "c.toml", text)
    assert _run("simulate", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_USAGE
    assert not (tmp_path / "o").exists()


def test_missing_config_and_unknown_preset(tmp_path):
    assert _run("simulate", "--config", tmp_path / "nope.toml") == cli.EXIT_USAGE
    assert _run("simulate", "--preset", "nope") == cli.EXIT_USAGE
    assert _run("frobnicate") == cli.EXIT_USAGE


def test_nonconvergence_exit_code(tmp_path):
    cfg = _write(tmp_path / "c.toml", 'preset = "vacuum-blob"\n[run]\nmax_iter = 1\n')
    assert _run("simulate", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_NOT_CONVERGED


def test_watchdog_exit_code(tmp_path):
    cfg = _write(tmp_path / "c.toml", "[watchdog]\nphi = 0.5\n")
    out = tmp_path / "o"
    assert _run("simulate", "--config", cfg, "--out", out) == cli.EXIT_WATCHDOG
    assert "phi:threshold" in (out / "diagnostics.csv").read_text()


def _ic_snapshot(tmp_path, rho, u):
    g = Grid((32,))
    z = g.zeros()
    path = tmp_path / "ic.bin"
    write_snapshot(path, State(0.0, rho, z, u, z, z), g)
    return path, g


def _check(tmp_path, rho, u):
    path, _ = _ic_snapshot(tmp_path, rho, u)
    cfg = _write(tmp_path / "c.toml", f'[run]\nic_snapshot = "{path}"\n[grid]\nextents = [32]\n')
    out = tmp_path / "ic"
    code = _run("check-ic", "--config", cfg, "--out", out)
    return code, json.loads((out / "compatibility.json").read_text())


def test_check_ic_compatible(tmp_path):
    code, rep = _check(tmp_path, np.full(33, 1.5), np.zeros((1, 33)))
    assert code == cli.EXIT_OK and rep["verdict"] == "compatible"


def test_check_ic_vacuous(tmp_path):
    code, rep = _check(tmp_path, np.zeros(33), np.zeros((1, 33)))
    assert code == cli.EXIT_OK and rep["verdict"] == "vacuous"


def test_check_ic_incompatible(tmp_path):
    x = np.linspace(0, 1, 33)
    code, rep = _check(tmp_path, np.where(x > 0.5, 1.0, 0.0), np.sin(np.pi * x)[None])
    assert code == cli.EXIT_INCOMPATIBLE and rep["verdict"] == "incompatible"


def test_snapshot_grid_mismatch_rejected(tmp_path):
    path, _ = _ic_snapshot(tmp_path, np.ones(33), np.zeros((1, 33)))
    cfg = _write(tmp_path / "c.toml", f'[run]\nic_snapshot = "{path}"\n[grid]\nextents = [16]\n')
    assert _run("check-ic", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_USAGE


def test_study_needs_three_levels(tmp_path):
    assert _run("study", "--levels", "2", "--out", tmp_path / "s") == cli.EXIT_USAGE
    assert not (tmp_path / "s").exists()


def test_study_table(tmp_path, capsys):
    assert _run("study", "--levels", "3", "--out", tmp_path / "s") == cli.EXIT_OK
    lines = (tmp_path / "s" / "study.csv").read_text().splitlines()
    assert lines[0] == "study,level,n,dt,error,order,failed"
    studies = {line.split(",")[0] for line in lines[1:]}
    assert {"transport", "representation", "poisson", "temperature-space", "momentum-time"} <= studies
    for line in lines[1:]:
        name, level, _, _, _, order, failed = line.split(",")
        assert failed == ""
        if name in ("transport", "representation") and level != "0":
            assert float(order) >= 1.8
        if name == "poisson":
            assert float(line.split(",")[4]) <= 1e-6
    assert "transport" in capsys.readouterr().out


def test_continue_delta(tmp_path):
    out = tmp_path / "d"
    assert _run("continue-delta", "--preset", "vacuum-blob", "--out", out) == cli.EXIT_OK
    lines = (out / "continuation.csv").read_text().splitlines()
    dist = [float(line.split(",")[-1]) for line in lines[2:]]
    assert len(dist) == 2 and dist[0] > dist[1]
