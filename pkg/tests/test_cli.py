import os

import pytest

from gaussframe import io
from gaussframe.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main

SMALL = """[frame]
dim = 1
k_max = 3
R = 1.0

[solve]
times = 0.25
nodes_per_unit = 4
grid_points = 41
"""


def _cfg(tmp_path, text=SMALL, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(tmp_path, *argv, out="out"):
    d = tmp_path / out
    return main([*argv, "--out", str(d)]), d


def test_lattice(tmp_path, capsys):
    code, d = _run(tmp_path, "lattice", "--config", _cfg(tmp_path))
    assert code == EXIT_OK
    assert "atoms" in capsys.readouterr().out
    lat = io.read_lattice(d / "lattice.csv")
    assert lat.k_max == 3
    rep = io.read_report(d / "lattice_report.txt")
    assert int(rep["frame_size"]) == len(io.read_coeffs(d / "index.csv").values)


def test_verify_single_check(tmp_path, capsys):
    cfg = _cfg(tmp_path, SMALL.replace("k_max = 3", "k_max = 5"))
    code, d = _run(tmp_path, "verify", "--config", cfg, "--checks", "theta")
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "PASS" in out and "FAIL" not in out
    assert io.read_report(d / "verify_report.txt")["check.theta_sums"] == "pass"


def test_verify_out_of_band_frame(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[frame]\nk_max = 1\nR = 1\n")
    code, _ = _run(tmp_path, "verify", "--config", cfg, "--checks", "none")
    out = capsys.readouterr().out
    assert code == EXIT_FAIL
    assert "OutOfBand" in out


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[frame]\ndim = 1\nC_eps = 5\n")
    code, _ = _run(tmp_path, "verify", "--config", cfg)
    err = capsys.readouterr().err
    assert code == EXIT_CONFIG
    assert "run.ini:3" in err and "C_eps < 4" in err


def test_unknown_check(tmp_path):
    code, _ = _run(tmp_path, "verify", "--checks", "bogus")
    assert code == EXIT_CONFIG


def test_missing_config(tmp_path):
    code, _ = _run(tmp_path, "lattice", "--config", str(tmp_path / "nope.ini"))
    assert code == EXIT_CONFIG


def test_solve_zero_data(tmp_path):
    prob = tmp_path / "zero.csv"
    prob.write_text("role,t,re,im,y1,eta1,w\n")
    code, d = _run(tmp_path, "solve", "--config", _cfg(tmp_path), "--problem", str(prob))
    assert code == EXIT_OK
    rows = (d / "snapshot_t0.25.csv").read_text().splitlines()
    assert rows[0] == "x1,re,im" and len(rows) == 42
    assert all(float(r.split(",")[1]) == 0 and float(r.split(",")[2]) == 0 for r in rows[1:])


def test_solve_malformed_problem(tmp_path, capsys):
    prob = tmp_path / "bad.csv"
    prob.write_text("role,t,re,im,y1,eta1,w\nf,0,1,0,0,4\n")
    code, _ = _run(tmp_path, "solve", "--config", _cfg(tmp_path), "--problem", str(prob))
    assert code == EXIT_CONFIG
    assert "bad.csv:2" in capsys.readouterr().err


def test_solve_is_deterministic(tmp_path):
    prob = tmp_path / "p.csv"
    prob.write_text("role,t,re,im,y1,eta1,w\nf,0,1,0,0,3,4\n")
    cfg = _cfg(tmp_path)
    outs = []
    for tag in ("a", "b"):
        code, d = _run(tmp_path, "solve", "--config", cfg, "--problem", str(prob), out=tag)
        assert code == EXIT_OK
        outs.append(d)
    names = sorted(os.listdir(outs[0]))
    assert "error_vs_kmax.csv" in names and "snapshot_t0.25.csv" in names
    for n in names:
        assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes(), n


def test_assemble_propagate_report(tmp_path, capsys):
    cfg = _cfg(tmp_path, SMALL.replace("[solve]", "[field]\nname = periodic\namp = 0.1\n\n[solve]"))
    code, d = _run(tmp_path, "assemble", "--config", cfg, "--kind", "E")
    assert code == EXIT_OK
    assert (d / "operator_E_t0.csv").exists() and (d / "schur_E_t0.25.csv").exists()
    code, d = _run(tmp_path, "propagate", "--config", cfg, "--steps", "3")
    assert code == EXIT_OK
    head = (d / "rays_plus.csv").read_text().splitlines()
    assert head[0] == "ray,t,x1,xi1"
    code, d = _run(tmp_path, "report", "--config", cfg)
    assert code == EXIT_OK
    assert "[assemble_report.txt]" in (d / "summary.txt").read_text()


def test_report_empty_dir(tmp_path):
    code, _ = _run(tmp_path, "report")
    assert code == EXIT_CONFIG


@pytest.mark.parametrize("argv", [["--help"], []])
def test_usage(argv):
    with pytest.raises(SystemExit):
        main(argv)
