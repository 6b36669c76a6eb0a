import numpy as np
import pytest

from gaussframe import atoms, gram, io, lattice as lt
from gaussframe.errors import ConfigError


def test_lattice_round_trip(tmp_path):
    lat = lt.build_frequency_lattice(2, 4)
    p = tmp_path / "lat.csv"
    io.write_lattice(p, lat)
    back = io.read_lattice(p)
    assert back.dim == 2 and back.k_max == 4
    for k in range(5):
        assert np.array_equal(back.level(k), lat.level(k))


def test_coeff_round_trip(tmp_path, rng):
    lat = lt.build_frequency_lattice(1, 3)
    frame = atoms.Frame(lat, lt.LatticeConfig(R=1.0, k_max=3))
    c = atoms.CoeffSequence(frame.index, rng.standard_normal(len(frame)) + 1j * rng.standard_normal(len(frame)))
    p = tmp_path / "c.csv"
    io.write_coeffs(p, c)
    back = io.read_coeffs(p)
    assert back.index == frame.index
    assert np.array_equal(back.values, c.values)
    assert p.read_text().splitlines()[0] == "k,i,alpha1,re,im"


def test_mixture_round_trip(tmp_path, rng):
    f = atoms.random_inband_mixture(rng, 2, 2, 16, terms=4)
    p = tmp_path / "m.csv"
    io.write_mixture(p, f)
    g = io.read_mixture(p)
    for a, b in zip(f.gaussians(), g.gaussians()):
        assert np.array_equal(a, b)


def test_problem_file(tmp_path):
    p = tmp_path / "prob.csv"
    p.write_text("role,t,re,im,y1,eta1,w\n"
                 "# position data\n"
                 "f,0,1,0,0,28,49\n"
                 "h,0,0,0.5,0.1,20,30\n"
                 "F,0.5,1,0,0,10,4\n"
                 "F,0,2,0,0,10,4\n")
    f, h, F, ts = io.read_problem(p, dim=1)
    assert len(f) == 1 and len(h) == 1 and h.amp[0] == 0.5j
    assert list(ts) == [0.0, 0.5] and F[0].amp[0] == 2.0
    q = tmp_path / "again.csv"
    io.write_problem(q, f, h, F, ts)
    f2, h2, F2, ts2 = io.read_problem(q)
    assert np.array_equal(f2.freq, f.freq) and np.array_equal(ts2, ts) and len(F2) == 2


@pytest.mark.parametrize("body,line", [
    ("role,t,re,im,y1,eta1,w\nf,0,1,0,0,28\n", 2),
    ("role,t,re,im,y1,eta1,w\nf,0,1,0,0,28,49\ng,0,1,0,0,28,49\n", 3),
    ("role,t,re,im,y1,eta1,w\nf,0,1,0,zero,28,49\n", 2),
    ("role,t,re,im,y1,eta1,w\n\nf,0,1,0,0,28,-1\n", 3),
    ("t,role,re,im,y1,eta1,w\n", 1),
])
def test_problem_parse_errors(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(ConfigError) as err:
        io.read_problem(p)
    assert err.value.line == line
    assert f":{line}:" in str(err.value)


def test_problem_dimension_mismatch(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("role,t,re,im,y1,eta1,w\nf,0,1,0,0,28,49\n")
    with pytest.raises(ConfigError):
        io.read_problem(p, dim=2)


def test_operator_and_schur_dump(tmp_path):
    lat = lt.build_frequency_lattice(1, 2)
    frame = atoms.Frame(lat, lt.LatticeConfig(R=0.8, k_max=2))
    op = gram.assemble("E", frame, 0.0)
    p = tmp_path / "op.csv"
    io.write_operator(p, op, frame.index)
    lines = p.read_text().splitlines()
    assert lines[0] == "k,i,alpha1,k2,i2,alpha2_1,re,im"
    assert len(lines) == op.nnz + 1
    rows = gram.schur_by_level(op, frame.k)
    io.write_schur(tmp_path / "s.csv", rows.keys(), rows.values())
    assert (tmp_path / "s.csv").read_text().startswith("k,max_row_sum\n0,")


def test_floats_round_trip_exactly(tmp_path):
    v = np.array([[0.1 + 1e-17, np.pi]])
    io.write_snapshot(tmp_path / "s.csv", v[:, :1], np.array([np.e + 1j / 3]))
    row = (tmp_path / "s.csv").read_text().splitlines()[1].split(",")
    assert float(row[0]) == v[0, 0] and float(row[1]) == np.e and float(row[2]) == 1 / 3


def test_report_round_trip(tmp_path):
    io.write_report(tmp_path / "r.txt", {"b": [1.5, 2.0], "a": True, "c": None})
    text = (tmp_path / "r.txt").read_text()
    assert text.splitlines()[0] == "a = true"
    assert io.read_report(tmp_path / "r.txt")["b"] == "1.5, 2"


def test_missing_file():
    with pytest.raises(ConfigError):
        io.read_mixture("/nonexistent/file.csv")
