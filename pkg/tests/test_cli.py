import csv

import numpy as np
import pytest

from ksbesov import harness
from ksbesov.cli import main
from ksbesov.evolution import ConfigurationWarning
from ksbesov.spectral import GridSpec, Trajectory


@pytest.fixture(scope="module")
def snapshot(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "run.ksb"
    # N = 128 at L = 40 needs a step below the default 0.1
    with pytest.warns(ConfigurationWarning, match="dt reduced"):
        assert main(["simulate", "--L", "40", "--t-burn", "20", "--t-avg", "40", "--seed", "2", "--out", str(p)]) == 0
    return p


def rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_simulate_writes_snapshot(snapshot):
    traj = harness.load_trajectory(snapshot)
    assert traj.grid == GridSpec(40.0, harness.resolution_for(40.0))
    assert traj.t0 == 20.0 and traj.dt_rec == 1.0 and traj.n_frames == 41


def test_simulate_config_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "a.ksb"
    cfg.write_text(f"L = 30\nN = 64\nt-burn = 0\nt_avg = 2\ndt-rec = 0.5\nout = {out}\n")
    with pytest.warns(ConfigurationWarning):
        assert main(["simulate", "--config", str(cfg), "--N", "128"]) == 0
    traj = harness.load_trajectory(out)
    assert traj.grid.N == 128 and traj.n_frames == 5


@pytest.mark.parametrize("argv", [
    ["simulate", "--L", "64", "--dt", "0.5", "--t-burn", "0", "--t-avg", "1", "--out", "x.ksb"],
    ["simulate", "--L", "30", "--dt-rec", "0.15", "--t-burn", "0", "--t-avg", "1", "--out", "x.ksb"],
    ["simulate", "--L", "30"],
    ["verify", "khm", "--divisions", "64"],
    ["verify", "interaction", "--dealias", "off"],
    ["sweep", "--L", "50", "--out", "x.csv", "--t-burn", "100", "--t-avg", "100"],
])
def test_bad_options_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_corrupt_snapshot(tmp_path, capsys):
    p = tmp_path / "bad.ksb"
    p.write_bytes(b"NOPE" + bytes(40))
    assert main(["norms", str(p)]) == 2
    assert "offset 0" in capsys.readouterr().err


def test_norms(snapshot, tmp_path):
    out = tmp_path / "n.csv"
    assert main(["norms", str(snapshot), "--out", str(out)]) == 0
    got = {r["norm"]: r for r in rows(out)}
    assert set(got) == {"b_third_3_inf", "b_third_3_3", "b_two_2_2", "b_half_2_2"}
    assert got["b_two_2_2"]["method"] == "lp" and got["b_third_3_inf"]["method"] == "fd"
    assert float(got["b_third_3_inf"]["value"]) <= float(got["b_third_3_3"]["value"])
    assert main(["norms", str(snapshot), "--method", "lp", "--out", str(out)]) == 0
    assert {r["method"] for r in rows(out)} == {"lp"}


def test_norms_fd_rejects_s_two(snapshot, capsys):
    assert main(["norms", str(snapshot), "--method", "fd"]) == 2
    assert "0 < s < 1" in capsys.readouterr().err


def test_spectrum_and_structure(snapshot, tmp_path, capsys):
    out = tmp_path / "sp.csv"
    assert main(["spectrum", str(snapshot), "--out", str(out)]) == 0
    sp = rows(out)
    traj = harness.load_trajectory(snapshot)
    assert len(sp) == traj.grid.N // 2 - 1
    assert "plateau" in capsys.readouterr().err
    assert main(["structure", str(snapshot), "--points", "12", "--out", str(out)]) == 0
    st = rows(out)
    hs = np.array([float(r["h"]) for r in st])
    assert len(st) == 12 and hs[0] == pytest.approx(traj.grid.dx) and hs[-1] == pytest.approx(20.0)
    assert all(float(r["increment_cube_over_h"]) > 0 for r in st)


def test_structure_to_stdout(tmp_path, capsys):
    g = GridSpec(20.0, 32)
    p = tmp_path / "s.ksb"
    harness.save_trajectory(Trajectory(g, 0.0, 1.0, np.tile(np.sin(2 * np.pi * g.x / g.L), (3, 1))), p)
    assert main(["structure", str(p), "--points", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "h,increment_cube_over_h" and len(lines) == 4


@pytest.mark.parametrize("suite", ["interaction", "duality", "three-scale"])
def test_verify_passes(suite, tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["verify", suite, "--csv", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert len(rows(out)) >= 2


def test_verify_failure_exit(capsys):
    # a coarse manufactured grid misses the identity tolerance
    assert main(["verify", "kinetic", "--N", "16", "--dt", "0.1"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_sweep(tmp_path, capsys):
    out = tmp_path / "s.csv"
    cfg = tmp_path / "s.cfg"
    cfg.write_text("L = 50, 60\nseeds = 1\nt_burn = 10\nt_avg = 50\n")
    assert main(["sweep", "--config", str(cfg), "--L", "50", "--workers", "1", "--out", str(out)]) == 0
    (r,) = rows(out)
    assert r["L"] == "50.0" and r["seed"] == "0" and r["status"] == "ok"
    assert list(r) == harness.CSV_FIELDS
    assert (tmp_path / "s.csv.timing.csv").exists()
    assert "wrote 1 rows" in capsys.readouterr().out
