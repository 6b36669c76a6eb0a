"""CSV readers and writers.

Every writer uses ``%.17g`` so floats round-trip exactly and repeated runs
produce byte-identical files.  Files start with a single header row.
"""

from __future__ import annotations

import csv
import os
from typing import Iterable, List

import numpy as np

from .atoms import CoeffSequence, GaussianMixture
from .errors import ConfigError
from .lattice import FrameIndexSet, FrequencyLattice

FMT = ".17g"


def _f(v):
    return format(float(v), FMT)


def _axes(prefix, n):
    return [f"{prefix}{d + 1}" for d in range(n)]


def _write(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read(path):
    """Rows of a headed CSV with their 1-based line numbers; ``#`` lines skipped."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot open: {exc.strerror}", path=path) from None
    with fh:
        out = []
        header = None
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            row = [c.strip() for c in row]
            if header is None:
                header = row
                continue
            out.append((lineno, row))
    if header is None:
        raise ConfigError("empty file", path=path)
    return header, out


def _floats(row, lineno, path, start=0):
    try:
        return [float(c) for c in row[start:]]
    except ValueError as exc:
        raise ConfigError(f"not a number ({exc})", line=lineno, path=path) from None


# -- lattice -------------------------------------------------------------------------


def write_lattice(path, lattice: FrequencyLattice):
    rows = []
    for k in range(lattice.k_max + 1):
        for i, w in enumerate(lattice.level(k)):
            rows.append([k, i, *map(_f, w)])
    _write(path, ["k", "i", *_axes("omega", lattice.dim)], rows)


def read_lattice(path) -> FrequencyLattice:
    header, rows = _read(path)
    n = len(header) - 2
    if n < 1:
        raise ConfigError("lattice file needs columns k, i, omega...", line=1, path=path)
    levels = {}
    for lineno, row in rows:
        if len(row) != n + 2:
            raise ConfigError(f"expected {n + 2} columns, got {len(row)}", line=lineno, path=path)
        k, i = int(row[0]), int(row[1])
        lvl = levels.setdefault(k, [])
        if i != len(lvl):
            raise ConfigError(f"level {k} rows out of order at i={i}", line=lineno, path=path)
        lvl.append(_floats(row, lineno, path, 2))
    k_max = max(levels)
    if sorted(levels) != list(range(k_max + 1)):
        raise ConfigError("lattice levels must be 0..k_max without gaps", path=path)
    omegas = tuple(np.asarray(levels[k], float).reshape(-1, n) for k in range(k_max + 1))
    return FrequencyLattice(dim=n, k_max=k_max, omegas=omegas)


# -- coefficient sequences -------------------------------------------------------------


def write_coeffs(path, c: CoeffSequence):
    idx = c.index
    rows = [[int(idx.k[j]), int(idx.i[j]), *map(int, idx.alpha[j]), _f(v.real), _f(v.imag)]
            for j, v in enumerate(c.values)]
    _write(path, ["k", "i", *_axes("alpha", idx.dim), "re", "im"], rows)


def read_coeffs(path, sobolev_m=0.0) -> CoeffSequence:
    header, rows = _read(path)
    n = len(header) - 4
    k, i, al, vals = [], [], [], []
    for lineno, row in rows:
        if len(row) != n + 4:
            raise ConfigError(f"expected {n + 4} columns, got {len(row)}", line=lineno, path=path)
        try:
            ints = [int(v) for v in row[: n + 2]]
        except ValueError:
            raise ConfigError("index columns must be integers", line=lineno, path=path) from None
        re, im = _floats(row, lineno, path, n + 2)
        k.append(ints[0])
        i.append(ints[1])
        al.append(ints[2:])
        vals.append(complex(re, im))
    return CoeffSequence(FrameIndexSet(n, k, i, np.reshape(al, (-1, n))), vals, sobolev_m)


# -- mixtures ------------------------------------------------------------------------


def mixture_rows(f: GaussianMixture):
    return [[_f(a.real), _f(a.imag), *map(_f, y), *map(_f, e), _f(w)]
            for a, y, e, w in zip(f.amp, f.center, f.freq, f.width)]


def mixture_header(n):
    return ["re", "im", *_axes("y", n), *_axes("eta", n), "w"]


def write_mixture(path, f: GaussianMixture):
    _write(path, mixture_header(f.dim), mixture_rows(f))


def _mixture_from(vals, n):
    a = np.array([complex(v[0], v[1]) for v in vals])
    arr = np.asarray(vals, float).reshape(-1, 3 + 2 * n)
    return GaussianMixture(a, arr[:, 2:2 + n], arr[:, 2 + n:2 + 2 * n], arr[:, -1])


def _check_width(w, lineno, path):
    if not w > 0:
        raise ConfigError(f"width must be positive, got {w}", line=lineno, path=path)


def read_mixture(path) -> GaussianMixture:
    header, rows = _read(path)
    n, rem = divmod(len(header) - 3, 2)
    if rem or n < 1:
        raise ConfigError("mixture header must be re, im, y..., eta..., w", line=1, path=path)
    vals = []
    for lineno, row in rows:
        if len(row) != 3 + 2 * n:
            raise ConfigError(f"expected {3 + 2 * n} columns, got {len(row)}", line=lineno, path=path)
        v = _floats(row, lineno, path)
        _check_width(v[-1], lineno, path)
        vals.append(v)
    return _mixture_from(vals, n) if vals else GaussianMixture.zero(n)


# -- problem files ----------------------------------------------------------------------

ROLES = ("f", "h", "F")


def read_problem(path, dim=None):
    """Parse ``role, t, re, im, y..., eta..., w`` rows.

    ``role`` is ``f`` (position data), ``h`` (velocity data) or ``F``
    (forcing sampled at time ``t``; ignored for ``f`` and ``h``).

    Returns
    -------
    f, h : GaussianMixture
    F : list of GaussianMixture or None
    F_times : ndarray or None
    """
    header, rows = _read(path)
    if header[:2] != ["role", "t"]:
        raise ConfigError("problem header must start with role, t", line=1, path=path)
    n, rem = divmod(len(header) - 5, 2)
    if rem or n < 1:
        raise ConfigError("problem header must be role, t, re, im, y..., eta..., w", line=1, path=path)
    if dim is not None and n != dim:
        raise ConfigError(f"problem is {n}-dimensional but the run uses n={dim}", line=1, path=path)
    buckets = {"f": [], "h": []}
    forcing = {}
    for lineno, row in rows:
        if len(row) != 5 + 2 * n:
            raise ConfigError(f"expected {5 + 2 * n} columns, got {len(row)}", line=lineno, path=path)
        role = row[0]
        if role not in ROLES:
            raise ConfigError(f"unknown role {role!r}; use one of {', '.join(ROLES)}", line=lineno, path=path)
        v = _floats(row, lineno, path, 1)
        _check_width(v[-1], lineno, path)
        if role == "F":
            forcing.setdefault(v[0], []).append(v[1:])
        else:
            buckets[role].append(v[1:])
    f, h = (_mixture_from(buckets[r], n) if buckets[r] else GaussianMixture.zero(n) for r in ("f", "h"))
    if not forcing:
        return f, h, None, None
    ts = np.array(sorted(forcing))
    return f, h, [_mixture_from(forcing[t], n) for t in ts], ts


def write_problem(path, f, h, F=None, F_times=None):
    n = f.dim
    rows = [["f", _f(0.0), *r] for r in mixture_rows(f)]
    rows += [["h", _f(0.0), *r] for r in mixture_rows(h)]
    for t, Ft in zip(F_times if F is not None else [], F or []):
        rows += [["F", _f(t), *r] for r in mixture_rows(Ft)]
    _write(path, ["role", "t", *mixture_header(n)], rows)


# -- operators, Schur reports, rays, snapshots ------------------------------------------------


def write_operator(path, op, index: FrameIndexSet):
    m = op.matrix.tocoo()
    order = np.lexsort((m.col, m.row))
    n = index.dim
    rows = []
    for r, c, v in zip(m.row[order], m.col[order], m.data[order]):
        rows.append([int(index.k[r]), int(index.i[r]), *map(int, index.alpha[r]),
                     int(index.k[c]), int(index.i[c]), *map(int, index.alpha[c]), _f(v.real), _f(v.imag)])
    head = ["k", "i", *_axes("alpha", n), "k2", "i2", *_axes("alpha2_", n), "re", "im"]
    _write(path, head, rows)


def write_schur(path, ks: Iterable[int], row_sums: Iterable[float], label="max_row_sum"):
    _write(path, ["k", label], [[int(k), _f(s)] for k, s in zip(ks, row_sums)])


def write_rays(path, times, xs, xis):
    """One row per (ray, time); ``xs``/``xis`` have shape ``(T, N, n)``."""
    xs, xis = np.asarray(xs), np.asarray(xis)
    n = xs.shape[-1]
    rows = []
    for r in range(xs.shape[1]):
        for j, t in enumerate(times):
            rows.append([r, _f(t), *map(_f, xs[j, r]), *map(_f, xis[j, r])])
    _write(path, ["ray", "t", *_axes("x", n), *_axes("xi", n)], rows)


def write_snapshot(path, grid, values):
    """``grid`` of shape ``(P, n)``, ``values`` complex of shape ``(P,)``."""
    grid = np.asarray(grid, float).reshape(len(values), -1)
    rows = [[*map(_f, g), _f(v.real), _f(v.imag)] for g, v in zip(grid, values)]
    _write(path, [*_axes("x", grid.shape[1]), "re", "im"], rows)


def write_report(path, items: dict):
    """``key = value`` lines, keys sorted, lists comma separated."""
    lines: List[str] = []
    for key in sorted(items):
        v = items[key]
        if isinstance(v, (list, tuple, np.ndarray)):
            v = ", ".join(_fmt(x) for x in v)
        else:
            v = _fmt(v)
        lines.append(f"{key} = {v}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_report(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return _f(v)
    if v is None:
        return "none"
    return str(v)
