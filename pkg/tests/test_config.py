import pytest

from gaussframe.config import DEFAULT, RunConfig, load_config, parse_config
from gaussframe.errors import ConfigError


def test_defaults_valid():
    cfg = parse_config("")
    assert cfg.dim == 1 and cfg.C_eps == 0.5 and cfg.ray_sign == "paper"
    assert cfg.make_field().name == "identity"


def test_full_config():
    cfg = parse_config("""
[frame]
dim = 2
k_max = 4
R = 1.5

[field]
name = periodic
amp = 0.2
wavevector = 1.0, 0.5
T = 2

[tolerances]
ray_tol = 1e-9

[solve]
times = 0.25, 0.5

[run]
ray_sign = standard
seed = 7
""")
    assert cfg.dim == 2 and cfg.k_max == 4 and cfg.T == 2.0 and cfg.times == (0.25, 0.5)
    assert cfg.field_params == {"amp": 0.2, "wavevector": [1.0, 0.5]}
    assert cfg.make_field().dim == 2
    assert cfg.ray_tol == 1e-9 and cfg.seed == 7 and cfg.ray_sign == "standard"


def test_constant_matrix():
    cfg = parse_config("[frame]\ndim = 2\n[field]\nname = constant\nmatrix = 2 0 0 1\n")
    assert cfg.make_field().is_constant


@pytest.mark.parametrize("text,line,needle", [
    ("[frame]\nC_eps = 5\n", 2, "C_eps < 4"),
    ("[frame]\n\neps = 0\n", 3, "eps"),
    ("[frame]\ndim = 3\n", 2, "dim"),
    ("[frame]\nk_max = two\n", 2, "k_max"),
    ("[frame]\nbogus = 1\n", 2, "bogus"),
    ("[nope]\nx = 1\n", 1, "nope"),
    ("[field]\nname = swirl\n", 2, "swirl"),
    ("[run]\nray_sign = sideways\n", 2, "ray_sign"),
    ("[field]\nT = 1\n[solve]\ntimes = 2\n", 4, "times"),
    ("[frame]\ndim 1\n", 2, ""),
])
def test_errors_carry_line(text, line, needle):
    with pytest.raises(ConfigError) as err:
        parse_config(text, source="run.ini")
    assert err.value.line == line
    assert needle in str(err.value)


def test_overrides_validate():
    cfg = DEFAULT.with_overrides(out="x", ray_sign=None)
    assert cfg.out == "x" and cfg.ray_sign == "paper"
    with pytest.raises(ConfigError):
        DEFAULT.with_overrides(ray_sign="bad")


def test_load_missing():
    with pytest.raises(ConfigError):
        load_config("/no/such/file.ini")


def test_lattice_config():
    lc = RunConfig(k_max=3, R=1.0).lattice_config()
    assert lc.k_max == 3 and lc.R == 1.0
