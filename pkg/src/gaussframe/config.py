"""Run configuration: an INI file with sections frame, field, tolerances, solve, run.

Example::

    [frame]
    dim = 1
    k_max = 6
    R = 2.5

    [field]
    name = periodic
    amp = 0.1

All keys are optional; unknown keys are rejected with their line number.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .coeff_field import make_field
from .errors import ConfigError, GaussFrameError
from .lattice import LatticeConfig
from .rays import CONVENTIONS

_INT, _FLOAT, _STR, _FLOATS = "int", "float", "str", "floats"

SCHEMA = {
    "frame": {"dim": _INT, "k_max": _INT, "k_min": _INT, "eps": _FLOAT, "C_eps": _FLOAT, "R": _FLOAT},
    "field": {"name": _STR, "T": _FLOAT, "amp": _FLOAT, "rate": _FLOAT, "wavevector": _FLOATS,
              "matrix": _FLOATS},
    "tolerances": {"ray_tol": _FLOAT, "prune": _FLOAT, "volterra_tol": _FLOAT},
    "solve": {"problem": _STR, "times": _FLOATS, "nodes_per_unit": _INT, "max_terms": _INT,
              "grid_points": _INT, "grid_halfwidth": _FLOAT},
    "run": {"out": _STR, "ray_sign": _STR, "seed": _INT, "threads": _INT},
}


@dataclass(frozen=True)
class RunConfig:
    dim: int = 1
    k_max: int = 6
    k_min: int = 0
    eps: float = 0.25
    C_eps: float = 0.5
    R: float = 2.5
    T: float = 1.0
    field_name: str = "identity"
    field_params: dict = field(default_factory=dict)
    ray_tol: float = 1e-10
    prune: float = 1e-12
    volterra_tol: float = 1e-10
    problem: Optional[str] = None
    times: tuple = (0.5,)
    nodes_per_unit: int = 8
    max_terms: int = 40
    grid_points: int = 401
    grid_halfwidth: float = 2.0
    out: str = "out"
    ray_sign: str = "paper"
    seed: int = 0
    threads: int = 0
    source: Optional[str] = None

    def lattice_config(self):
        return LatticeConfig(eps=self.eps, C_eps=self.C_eps, R=self.R, k_max=self.k_max, k_min=self.k_min)

    def make_field(self):
        return make_field(self.field_name, self.dim, T=self.T, **self.field_params)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


def _key_lines(text):
    """``(section, key) -> line`` and ``section -> line`` from the raw file."""
    where, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where.setdefault(section, lineno)
            continue
        key = re.split(r"[=:]", line, 1)[0].strip()
        where[(section, key)] = lineno
    return where


def _convert(kind, raw):
    if kind == _INT:
        return int(raw)
    if kind == _FLOAT:
        return float(raw)
    if kind == _FLOATS:
        return tuple(float(v) for v in re.split(r"[,\s]+", raw.strip()) if v)
    return raw.strip()


# where each checked attribute lives, for error line numbers
_ATTR_KEY = {"dim": ("frame", "dim"), "k_max": ("frame", "k_max"), "k_min": ("frame", "k_min"),
             "eps": ("frame", "eps"), "C_eps": ("frame", "C_eps"), "R": ("frame", "R"),
             "T": ("field", "T"), "ray_sign": ("run", "ray_sign"), "times": ("solve", "times"),
             "field": ("field", "name")}


def validate(cfg: RunConfig, lines=None):
    """Raise :class:`ConfigError` on the first violated precondition."""
    lines = lines or {}

    def fail(attr, msg):
        raise ConfigError(msg, line=lines.get(_ATTR_KEY.get(attr)), path=cfg.source)

    if cfg.dim not in (1, 2):
        fail("dim", f"dim={cfg.dim}: only n = 1 or 2 is supported")
    if not cfg.C_eps < 4:
        fail("C_eps", f"C_eps={cfg.C_eps:g} violates the spatial-step constraint C_eps < 4 "
                      "required for the discrete/continuous energy comparison")
    if not cfg.C_eps > 0:
        fail("C_eps", "C_eps must be positive")
    if not cfg.eps > 0:
        fail("eps", f"eps={cfg.eps:g} must be > 0")
    if not cfg.T > 0:
        fail("T", f"T={cfg.T:g} must be > 0")
    if cfg.k_max < 1 or not 0 <= cfg.k_min <= cfg.k_max:
        fail("k_max", "need k_max >= 1 and 0 <= k_min <= k_max")
    if cfg.R < 0:
        fail("R", "R must be >= 0")
    if cfg.ray_sign not in CONVENTIONS:
        fail("ray_sign", f"ray_sign must be one of {sorted(CONVENTIONS)}")
    if any(not 0 <= t <= cfg.T for t in cfg.times):
        fail("times", f"solve times must lie in [0, T={cfg.T:g}]")
    try:
        cfg.make_field()
    except (GaussFrameError, TypeError, KeyError) as exc:
        fail("field", f"bad field specification: {exc}")


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    return parse_config(text, source=str(path))


def parse_config(text, source=None) -> RunConfig:
    lines = _key_lines(text)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(str(exc).splitlines()[0], line=line, path=source) from None
    kw, fparams = {"source": source}, {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", line=lines.get(sec), path=source)
        for key, raw in cp.items(sec):
            kind = SCHEMA[sec].get(key)
            if kind is None:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", line=lines.get((sec, key)), path=source)
            try:
                val = _convert(kind, raw)
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}",
                                  line=lines.get((sec, key)), path=source) from None
            if sec == "field" and key == "name":
                kw["field_name"] = val
            elif sec == "field" and key != "T":
                fparams[key] = val
            else:
                kw[key] = val
    if "matrix" in fparams:
        n = kw.get("dim", 1)
        m = fparams["matrix"]
        if len(m) != n * n:
            raise ConfigError(f"matrix needs {n * n} entries", line=lines.get(("field", "matrix")), path=source)
        fparams["matrix"] = [list(m[i * n:(i + 1) * n]) for i in range(n)]
    if "wavevector" in fparams:
        fparams["wavevector"] = list(fparams["wavevector"])
    kw["field_params"] = fparams
    cfg = RunConfig(**kw)
    validate(cfg, lines)
    return cfg


DEFAULT = RunConfig()
