import csv
import json

import numpy as np
import pytest

from vectorplet.cli import check_algebra, cmd_check_algebra, main
from vectorplet.clifford import Vectorplet, dirac_representation


class _Args:
    verbose = False


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_algebra_passes(capsys):
    assert main(["check-algebra"]) == 0
    out = capsys.readouterr().out
    assert "check-algebra: PASS" in out and "FAIL" not in out
    assert all(res < 1e-12 for _, res in check_algebra())


def test_check_algebra_verbose_table(capsys):
    assert main(["check-algebra", "-v"]) == 0
    out = capsys.readouterr().out.splitlines()
    i = next(k for k, line in enumerate(out) if line.startswith("anticommutator residuals"))
    rows = out[i + 1:i + 5]
    assert all(len(r.split()) == 4 for r in rows)


def test_corrupted_representation_fails(capsys):
    comps = dirac_representation().components.copy()
    comps[2] = 1.01 * comps[2]
    assert cmd_check_algebra(_Args(), rep=Vectorplet(comps)) == 1
    assert "check-algebra: FAIL" in capsys.readouterr().out


def test_vacuum_run_audits_are_zero(tmp_path, capsys):
    cfg = _write(tmp_path, "scenario = vacuum\nsteps = 20\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--snapshot-every", "5"]) == 0
    rows = list(csv.DictReader(open(out / "audit.csv")))
    assert rows
    for r in rows:
        for k, v in r.items():
            if k != "time" and v != "":
                assert float(v) == 0.0
    assert json.loads((out / "summary.json").read_text())["max_abs_audit"] == 0.0
    snaps = sorted(out.glob("snap_*.vps"))
    assert len(snaps) == 5
    audit_out = tmp_path / "audit"
    assert main(["audit", *map(str, snaps), "--out", str(audit_out)]) == 0
    rows = list(csv.DictReader(open(audit_out / "audit.csv")))
    assert len(rows) == 5 and all(float(r["max_divT"] or 0) == 0 for r in rows)


def test_flat_packet_run_short(tmp_path):
    cfg = _write(tmp_path, "scenario = flat_dirac_packet\nnx = 128\nsteps = 200\nsigma = 6\n")
    out = tmp_path / "out"
    assert main(["--out", str(out), "run", cfg]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["charge_drift"] < 1e-6 and summary["constraint"] < 1e-12
    assert (out / "action.csv").exists()


def test_run_is_deterministic(tmp_path):
    cfg = _write(tmp_path, "scenario = flat_dirac_packet\nnx = 64\nsteps = 20\nsigma = 4\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", cfg, "--out", str(d), "--snapshot-every", "10", "--seed", "7"]) == 0
    for name in ("audit.csv", "action.csv", "snap_000010.vps", "snap_000020.vps"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_audit_rejects_mismatched_grids(tmp_path, capsys):
    c1 = _write(tmp_path, "scenario = vacuum\nnx = 32\nsteps = 2\n", "a.cfg")
    c2 = _write(tmp_path, "scenario = vacuum\nnx = 64\nsteps = 2\n", "b.cfg")
    main(["run", c1, "--out", str(tmp_path / "a"), "--snapshot-every", "1"])
    main(["run", c2, "--out", str(tmp_path / "b"), "--snapshot-every", "1"])
    snaps = [tmp_path / "a" / "snap_000000.vps", tmp_path / "a" / "snap_000001.vps",
             tmp_path / "b" / "snap_000002.vps"]
    capsys.readouterr()
    assert main(["audit", *map(str, snaps), "--out", str(tmp_path / "c")]) == 2
    assert "differs" in capsys.readouterr().err


def test_audit_needs_three_snapshots(tmp_path, capsys):
    c = _write(tmp_path, "scenario = vacuum\nnx = 32\nsteps = 1\n")
    main(["run", c, "--out", str(tmp_path / "a"), "--snapshot-every", "1"])
    snaps = sorted((tmp_path / "a").glob("snap_*.vps"))
    assert main(["audit", *map(str, snaps), "--out", str(tmp_path / "c")]) == 2
    assert "at least 3" in capsys.readouterr().err


def test_evolved_audit_divergence_small(tmp_path):
    c = _write(tmp_path, "scenario = flat_dirac_packet\nnx = 64\nsteps = 4\nsigma = 4\ndt = 0.05\n")
    main(["run", c, "--out", str(tmp_path / "a"), "--snapshot-every", "1"])
    snaps = sorted((tmp_path / "a").glob("snap_*.vps"))
    main(["audit", *map(str, snaps), "--out", str(tmp_path / "c")])
    rows = list(csv.DictReader(open(tmp_path / "c" / "audit.csv")))
    divs = [float(r["max_divj"]) for r in rows if r["max_divj"]]
    assert len(divs) == 3 and max(divs) < 1e-4


def test_config_error_reports_line(tmp_path, capsys):
    c = _write(tmp_path, "nx = 64\nbogus = 1\n")
    assert main(["run", c, "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_short_weakfield_run_writes_trajectory(tmp_path):
    c = _write(tmp_path, "scenario = weakfield_packet\nnx = 256\nsteps = 100\nsigma = 8\n")
    assert main(["run", c, "--out", str(tmp_path / "w"), "--threads", "1"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "w" / "trajectory.csv")))
    assert len(rows) >= 2
    assert float(rows[0]["deviation"]) < 1e-9
    assert all(np.isfinite(float(r["alpha"])) for r in rows)


def test_relax_command(tmp_path):
    c = _write(tmp_path, "scenario = higgs_relax\n")
    assert main(["relax", c, "--out", str(tmp_path / "r")]) == 0
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert summary["converged"] and summary["inverse_error"] < 1e-5
    assert (tmp_path / "r" / "lambda_relaxed.vps").exists()
    assert (tmp_path / "r" / "relaxation.csv").exists()


def test_boost_and_einstein_scenarios(tmp_path):
    assert main(["run", _write(tmp_path, "scenario = boost_degeneracy\n"), "--out", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["max_error"] < 1e-12
    c = _write(tmp_path, "scenario = einstein_residual\n", "e.cfg")
    assert main(["run", c, "--out", str(tmp_path / "e")]) == 0
    s = json.loads((tmp_path / "e" / "summary.json").read_text())
    assert s["flat_identity_bitwise"] and s["min_ratio"] >= 3.5


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
