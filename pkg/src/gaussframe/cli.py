"""``gaussframe`` command-line driver.

Subcommands map onto the library pipelines::

    gaussframe lattice   --config run.ini --out out/
    gaussframe verify    --config run.ini [--checks theta,rays]
    gaussframe propagate --config run.ini [--steps 11]
    gaussframe assemble  --config run.ini [--kind E]
    gaussframe solve     --config run.ini [--problem data.csv]
    gaussframe report    --out out/

Exit status: 0 success, 1 a check failed or a computation raised, 2 bad
configuration or unreadable input.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

import numpy as np

from . import _jit, atoms, gram, io, lattice as lt, parametrix as pm, rays, verify
from .config import DEFAULT, load_config
from .errors import ConfigError, GaussFrameError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common(p):
    p.add_argument("--config", metavar="PATH", help="INI run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides [run] out)")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads for the numba kernels")
    p.add_argument("--ray-sign", choices=sorted(rays.CONVENTIONS), help="ray direction convention")
    p.add_argument("--seed", type=int, metavar="N", help="seed for randomized verification draws")


def build_parser():
    parser = argparse.ArgumentParser(prog="gaussframe", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("lattice", help="build the frequency lattice and index set")
    _common(p)
    p = sub.add_parser("verify", help="run the verification suites")
    _common(p)
    p.add_argument("--checks", default="all",
                   help="comma list from: " + ", ".join(verify.CHECK_NAMES) + " (or all, none)")
    p = sub.add_parser("propagate", help="trace the rays of every frame atom")
    _common(p)
    p.add_argument("--steps", type=int, default=11, help="output times on [0, T]")
    p.add_argument("--branch", choices=["+", "-"], default="+")
    p = sub.add_parser("assemble", help="assemble B_E / B_T and their Schur row sums")
    _common(p)
    p.add_argument("--kind", choices=["E", "T"], default=None, help="operator (default both)")
    p = sub.add_parser("solve", help="solve a Cauchy problem")
    _common(p)
    p.add_argument("--problem", metavar="PATH", help="problem CSV (overrides [solve] problem)")
    p = sub.add_parser("report", help="collect the reports in an output directory")
    _common(p)
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else DEFAULT
    over = {"out": args.out, "ray_sign": args.ray_sign, "seed": args.seed, "threads": args.threads}
    if getattr(args, "problem", None):
        over["problem"] = args.problem
    return cfg.with_overrides(**over)


def _frame(cfg):
    lat = lt.build_frequency_lattice(cfg.dim, cfg.k_max)
    return lat, atoms.Frame(lat, cfg.lattice_config())


def _tag(t):
    return format(float(t), "g")


def _run_items(cfg):
    return {"config": cfg.source or "<defaults>", "dim": cfg.dim, "k_max": cfg.k_max,
            "k_min": cfg.k_min, "eps": cfg.eps, "C_eps": cfg.C_eps, "R": cfg.R, "T": cfg.T,
            "field": cfg.make_field().describe(), "ray_sign": cfg.ray_sign}


# -- commands ----------------------------------------------------------------------------


def cmd_lattice(cfg, args):
    lat, frame = _frame(cfg)
    io.write_lattice(os.path.join(cfg.out, "lattice.csv"), lat)
    io.write_coeffs(os.path.join(cfg.out, "index.csv"),
                    atoms.CoeffSequence(frame.index, np.zeros(len(frame))))
    items = _run_items(cfg)
    items["level_sizes"] = lat.counts()
    items["packing_bounds"] = [lt.packing_bound(cfg.dim, k) for k in range(cfg.k_max + 1)]
    items["min_separation"] = [lt.min_separation(lat, k) for k in range(cfg.k_max + 1)]
    items["covering_radius"] = [lt.covering_radius(lat, k, seed=cfg.seed) for k in range(cfg.k_max + 1)]
    items["frame_size"] = len(frame)
    io.write_report(os.path.join(cfg.out, "lattice_report.txt"), items)
    print(f"lattice: {sum(lat.counts())} directions, {len(frame)} atoms -> {cfg.out}")
    return EXIT_OK


def cmd_verify(cfg, args):
    if args.checks == "all":
        names = list(verify.CHECK_NAMES)
    elif args.checks == "none":
        names = []
    else:
        names = [c.strip() for c in args.checks.split(",") if c.strip()]
        bad = [c for c in names if c not in verify.CHECK_NAMES]
        if bad:
            raise ConfigError(f"unknown checks {bad}; choose from {list(verify.CHECK_NAMES)}")
    try:
        _, frame = _frame(cfg)
        results = [verify.check_config_frame(frame, seed=cfg.seed)]
    except GaussFrameError as exc:
        results = [verify.CheckResult("frame_ratio_config", False, error=f"{type(exc).__name__}: {exc}")]
    results += verify.run_checks(names, seed=cfg.seed, convention=cfg.ray_sign)
    rows = []
    for r in results:
        print(r.line())
        rows.append([r.name, "pass" if r.passed else "fail", "error", r.error])
        rows += [[r.name, "pass" if r.passed else "fail", k, verify._fmt(v)] for k, v in r.measured.items()]
    io._write(os.path.join(cfg.out, "verify.csv"), ["check", "status", "quantity", "value"], rows)
    items = _run_items(cfg)
    items.update({f"check.{r.name}": "pass" if r.passed else "fail" for r in results})
    items["seed"] = cfg.seed
    io.write_report(os.path.join(cfg.out, "verify_report.txt"), items)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_propagate(cfg, args):
    _, frame = _frame(cfg)
    field = cfg.make_field()
    times = np.linspace(0.0, cfg.T, max(args.steps, 2))
    xs, xis, _, _ = rays.evolve_batch(field, frame.x, frame.xi, times, args.branch, cfg.ray_tol,
                                      cfg.ray_sign)
    io.write_rays(os.path.join(cfg.out, f"rays_{'plus' if args.branch == '+' else 'minus'}.csv"),
                  times, xs, xis)
    print(f"propagate: {len(frame)} rays x {len(times)} times -> {cfg.out}")
    return EXIT_OK


def cmd_assemble(cfg, args):
    _, frame = _frame(cfg)
    field = cfg.make_field()
    kinds = [args.kind] if args.kind else ["E", "T"]
    times = sorted({0.0, *cfg.times})
    items = _run_items(cfg)
    for t in times:
        beams = (gram.propagate(frame, field, [t], "+", cfg.ray_tol, cfg.ray_sign)[0]
                 if t else gram.static_beams(frame))
        for kind in kinds:
            op = gram.assemble(kind, frame, t, threshold=cfg.prune, beams=beams)
            stem = f"{kind}_t{_tag(t)}"
            io.write_operator(os.path.join(cfg.out, f"operator_{stem}.csv"), op, frame.index)
            by_level = gram.schur_by_level(op, frame.k)
            io.write_schur(os.path.join(cfg.out, f"schur_{stem}.csv"), by_level.keys(), by_level.values())
            row, col = gram.schur_bounds(op)
            items[f"{stem}.nnz"] = op.nnz
            items[f"{stem}.max_row_sum"] = row
            items[f"{stem}.max_col_sum"] = col
            print(f"assemble {stem}: nnz={op.nnz} max_row_sum={row:.6g}")
    io.write_report(os.path.join(cfg.out, "assemble_report.txt"), items)
    return EXIT_OK


def _grid(cfg):
    n = cfg.dim
    m = cfg.grid_points if n == 1 else min(cfg.grid_points, 101)
    g = np.linspace(-cfg.grid_halfwidth, cfg.grid_halfwidth, m)
    return np.stack(np.meshgrid(*([g] * n), indexing="ij"), -1).reshape(-1, n)


def _is_unit_wave(field):
    if not field.is_constant or field.dim != 1:
        return False
    return bool(np.allclose(field.matrix(0.0, np.zeros((1, 1))), 1.0, rtol=0, atol=1e-15))


def _solve_once(cfg, frame, problem, times, residual_time=None):
    return pm.volterra_solve(problem, frame, nodes_per_unit=cfg.nodes_per_unit, tol=cfg.volterra_tol,
                             max_terms=cfg.max_terms, convention=cfg.ray_sign, threshold=cfg.prune,
                             times=times, residual_time=residual_time, ray_tol=cfg.ray_tol)


def cmd_solve(cfg, args):
    if not cfg.problem:
        raise ConfigError("no problem file: pass --problem or set [solve] problem")
    f, h, F, F_times = io.read_problem(cfg.problem, dim=cfg.dim)
    field = cfg.make_field()
    lat, frame = _frame(cfg)
    for g in (f, h, *(F or [])):
        atoms.check_in_band(g, frame)
    t_end = max(cfg.times)
    problem = pm.CauchyProblem(f, h, field, t_end, F, F_times)
    times = np.unique(np.concatenate([pm.master_times(t_end, cfg.nodes_per_unit), [0.0, *cfg.times]]))
    sol = _solve_once(cfg, frame, problem, times, residual_time=t_end)
    grid = _grid(cfg)
    items = _run_items(cfg)
    items["problem"] = cfg.problem
    rep = sol.report.as_dict()
    rep.pop("elapsed_s", None)  # keep the report reproducible
    items.update({f"solve.{k}": v for k, v in rep.items() if k != "times"})
    for t in cfg.times:
        u = sol.at(sol.index_of(t))
        io.write_snapshot(os.path.join(cfg.out, f"snapshot_t{_tag(t)}.csv"), grid, u(grid))
    if _is_unit_wave(field) and len(f) and not len(h) and not F:
        for t in cfg.times:
            items[f"dalembert_err.t{_tag(t)}"] = pm.dalembert_error(sol, f, t)
        ks, errs = [], []
        lat_big = lt.build_frequency_lattice(cfg.dim, cfg.k_max)
        for k in range(max(1, cfg.k_max - 2), cfg.k_max + 1):
            fr = atoms.Frame(lat_big, lt.LatticeConfig(eps=cfg.eps, C_eps=cfg.C_eps, R=cfg.R, k_max=k,
                                                       k_min=min(cfg.k_min, k)))
            try:
                s = _solve_once(cfg, fr, pm.CauchyProblem(f, h, field, t_end), np.array([0.0, t_end]))
                errs.append(pm.dalembert_error(s, f, t_end))
            except GaussFrameError:
                errs.append(float("nan"))
            ks.append(k)
        io.write_schur(os.path.join(cfg.out, "error_vs_kmax.csv"), ks, errs, label="dalembert_rel_l2")
        items["error_vs_kmax"] = [f"k={k}:{e:.6g}" for k, e in zip(ks, errs)]
    io.write_report(os.path.join(cfg.out, "solve_report.txt"), items)
    print(f"solve: {len(frame)} atoms, {len(sol.report.term_norms)} series terms, "
          f"residual_rel={sol.report.residual_rel:.3g} -> {cfg.out}")
    return EXIT_OK


def cmd_report(cfg, args):
    paths = sorted(glob.glob(os.path.join(cfg.out, "*_report.txt")))
    if not paths:
        raise ConfigError(f"no *_report.txt files in {cfg.out}")
    failed = False
    lines = []
    for path in paths:
        items = io.read_report(path)
        lines.append(f"[{os.path.basename(path)}]")
        for k, v in items.items():
            lines.append(f"{k} = {v}")
            failed |= k.startswith("check.") and v == "fail"
        lines.append("")
    text = "\n".join(lines)
    with open(os.path.join(cfg.out, "summary.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"lattice": cmd_lattice, "verify": cmd_verify, "propagate": cmd_propagate,
            "assemble": cmd_assemble, "solve": cmd_solve, "report": cmd_report}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        if cfg.threads:
            _jit.set_threads(cfg.threads)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GaussFrameError as exc:
        print(f"error in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
