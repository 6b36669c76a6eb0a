"""Verification suites shared by the acceptance tests and ``gaussframe verify``.

Each ``check_*`` returns a :class:`CheckResult` with the measured constants and
a pass flag computed against a fixed tolerance.  Nothing here prints.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import IntegrationWarning

from . import atoms, gram, lattice as lt, parametrix as pm, rays, theta
from .coeff_field import identity, periodic
from .errors import GaussFrameError
from .gaussian_calc import (GaussianIntegralParams, gauss_first_moment, gauss_fourier,
                            gauss_second_moment, oracle_first_moment, oracle_fourier,
                            oracle_second_moment, quad_fourier_1d)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = dc_field(default_factory=dict)
    elapsed: float = 0.0
    error: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        items = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        tail = f" [{self.error}]" if self.error else ""
        return f"{status} {self.name} ({self.elapsed:.1f}s): {items}{tail}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(name, fn, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        passed, measured = fn(*args, **kwargs)
        res = CheckResult(name, bool(passed), measured)
    except GaussFrameError as exc:
        res = CheckResult(name, False, {}, error=f"{type(exc).__name__}: {exc}")
    res.elapsed = time.perf_counter() - t0
    return res


def slope(xs, ys):
    """Least-squares slope of ``log2(ys)`` against ``xs``."""
    return float(np.polyfit(np.asarray(xs, float), np.log2(np.asarray(ys, float)), 1)[0])


# -- 1. Gaussian calculus -------------------------------------------------------------------


def _gauss_calc(draws, seed):
    rng = np.random.default_rng(seed)
    worst = {1: 0.0, 2: 0.0}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for n in (1, 2):
            for _ in range(draws):
                p = GaussianIntegralParams(rng.uniform(0.3, 20.0), rng.uniform(-8, 8, n),
                                           rng.uniform(-2, 2, n))
                for closed, oracle in ((gauss_fourier, oracle_fourier),
                                       (gauss_first_moment, oracle_first_moment),
                                       (gauss_second_moment, oracle_second_moment)):
                    v = np.atleast_1d(closed(p))
                    o, mass = oracle(p)
                    o, mass = np.atleast_1d(o), np.atleast_1d(mass)
                    err = np.max(np.abs(v - o) / np.maximum(np.abs(o), mass))
                    worst[n] = max(worst[n], float(err))
    ok = worst[1] <= 1e-10 and worst[2] <= 1e-8
    return ok, {"max_rel_err_n1": worst[1], "max_rel_err_n2": worst[2], "draws": draws}


def check_gaussian_calculus(draws=100, seed=0):
    return _timed("gaussian_calculus", _gauss_calc, draws, seed)


# -- 2. theta sums ----------------------------------------------------------------------------


def _theta(offsets, seed):
    sup_ratio = 0.0
    wratios = {1: [], 2: []}
    for n in (1, 2):
        for lam in (1.0, 4.0, 16.0, 64.0):
            s = theta.sup_over_offsets(lam, n, offsets, seed)
            sup_ratio = max(sup_ratio, s / theta.upper_bound(lam, n))
            w = theta.sup_over_offsets(lam, n, offsets, seed, weighted=True)
            wratios[n].append(w / lam ** (n / 2))
    # weighted sums stay within the unweighted bound's constant and do not drift with lambda
    w_ok = all(max(r) <= (2 * math.pi) ** (n / 2) and max(r) / min(r) <= 2.0
               for n, r in wratios.items())
    ok = sup_ratio <= 1.0 and w_ok
    return ok, {"max_sum_over_bound": sup_ratio, "weighted_ratio_n1": wratios[1],
                "weighted_ratio_n2": wratios[2]}


def check_theta(offsets=100, seed=0):
    return _timed("theta_sums", _theta, offsets, seed)


# -- 3. partition of unity ------------------------------------------------------------------------


def _partition(k_max, samples):
    lat = lt.build_frequency_lattice(1, k_max)
    out, ok = {}, True
    for m in (0, 1):
        lo, hi = atoms.partition_constants(lat, m, samples, k_max)
        _, hi_prev = atoms.partition_constants(lat, m, samples, k_max - 1)
        drift = abs(hi - hi_prev) / hi
        ok &= lo >= math.exp(-1) and drift <= 0.10
        out[f"C1_m{m}"] = lo
        out[f"C2_m{m}"] = hi
        out[f"C2_drift_m{m}"] = drift
    return ok, out


def check_partition(k_max=8, samples=500):
    return _timed("partition_of_unity", _partition, k_max, samples)


# -- 4. frame bounds ---------------------------------------------------------------------------------


def frame_suite(rng, count, n, lo, hi):
    return [atoms.random_inband_mixture(rng, n, lo, hi, terms=3, spread=(2.0, 4.0), centre=1.0)
            for _ in range(count)]


def _frame_bounds(count, seed, k_max, R, C_eps, eps, lo, hi):
    lat = lt.build_frequency_lattice(1, k_max)
    frame = atoms.Frame(lat, lt.LatticeConfig(eps=eps, C_eps=C_eps, R=R, k_max=k_max))
    suite = frame_suite(np.random.default_rng(seed), count, 1, lo, hi)
    out, ok = {"atoms": len(frame)}, True
    for m in (0, 1):
        r = [atoms.frame_ratio(f, frame, m) for f in suite]
        c1, c2 = min(r), max(r)
        ok &= c1 > 0 and c2 / c1 < 100
        out[f"C1_m{m}"], out[f"C2_m{m}"] = c1, c2
    gaps = [atoms.discretization_gap(f, frame) for f in suite]
    worst = max(g / b for g, b in gaps)
    ok &= worst < 1.0
    out["discretization_gap_over_bound"] = worst
    return ok, out


def check_frame_bounds(count=50, seed=0, k_max=7, R=8.0, C_eps=0.5, eps=0.25, lo=2.0, hi=16.0):
    return _timed("frame_bounds", _frame_bounds, count, seed, k_max, R, C_eps, eps, lo, hi)


def _config_frame(frame, count, seed, lo, hi):
    suite = frame_suite(np.random.default_rng(seed), count, frame.dim, lo, hi)
    r = [atoms.frame_ratio(f, frame, 0.0) for f in suite]
    c1, c2 = min(r), max(r)
    return c1 > 0 and c2 / c1 < 100, {"atoms": len(frame), "C1": c1, "C2": c2, "C2_over_C1": c2 / c1}


def check_config_frame(frame, count=20, seed=0, lo=2.0, hi=16.0):
    """Frame ratios of a run's own frame on test packets with ``|eta|`` in ``[lo, hi]``.

    A frame too coarse for the test band fails with ``OutOfBand``.
    """
    return _timed("frame_ratio_config", _config_frame, frame, count, seed, lo, hi)


# -- 5. ray flow -----------------------------------------------------------------------------------


def _rays(count, seed, tol, field):
    rng = np.random.default_rng(seed)
    n = field.dim
    x0 = rng.uniform(-1, 1, (count, n))
    d = rng.standard_normal((count, n))
    xi0 = d / np.linalg.norm(d, axis=1, keepdims=True) * rng.uniform(1, 64, count)[:, None]
    out = {}
    # homogeneity: (x, lam xi) flows to (X, lam Xi)
    lam = 7.0
    xa, pa, _, _ = rays.evolve_batch(field, x0, xi0, [0.0, 1.0], "+", tol)
    xb, pb, _, _ = rays.evolve_batch(field, x0, lam * xi0, [0.0, 1.0], "+", tol)
    scale_err = max(np.abs(xa[-1] - xb[-1]).max(),
                    (np.linalg.norm(lam * pa[-1] - pb[-1], axis=1) / np.linalg.norm(pb[-1], axis=1)).max())
    # inverse composition U(0,t) U(t,0)
    back_x, back_p, _, _ = rays.evolve_batch(field, xa[-1], pa[-1], [1.0, 0.0], "+", tol)
    inv_err = max(np.abs(back_x[-1] - x0).max(),
                  (np.linalg.norm(back_p[-1] - xi0, axis=1) / np.linalg.norm(xi0, axis=1)).max())
    # envelope and finite speed over |t| <= 1
    _, _, C = rays.flow_constant(field, 1.0, 2.0)
    env_ok, speed_ok = True, True
    worst_env, worst_speed = 0.0, 0.0
    for tt in (np.linspace(0.0, 1.0, 9), np.linspace(0.0, -1.0, 9)):
        xs, ps, _, _ = rays.evolve_batch(field, x0, xi0, tt, "+", tol)
        for j, t in enumerate(tt[1:], start=1):
            ratio = np.linalg.norm(ps[j], axis=1) / np.linalg.norm(xi0, axis=1)
            lim = math.exp(C * abs(t)) * (1 + 1e-9)
            worst_env = max(worst_env, float(np.max(np.maximum(ratio, 1 / ratio))) / lim)
            env_ok &= bool(np.all(np.maximum(ratio, 1 / ratio) <= lim))
            disp = float(np.linalg.norm(xs[j] - x0, axis=1).max())
            bound = field.ellipticity_C * math.sqrt(n) * abs(t)
            worst_speed = max(worst_speed, disp / bound)
            speed_ok &= disp <= bound
    ok = scale_err <= 1e-8 and inv_err <= 10 * tol and env_ok and speed_ok
    out.update(scaling_err=float(scale_err), inverse_err=float(inv_err), gronwall_rate=C,
               envelope_use=worst_env, speed_use=worst_speed)
    return ok, out


def check_rays(count=100, seed=0, tol=1e-10, field=None):
    field = field or periodic(2, amp=0.2, wavevector=[1.0, 0.5], T=1.0)
    return _timed("ray_flow", _rays, count, seed, tol, field)


# -- 6. Gram closed forms -----------------------------------------------------------------------------


def quad_pair(a1, a2, weight_t=False):
    """Quadrature of ``int conj(phi_1) phi_2`` (optionally times ``|xi_2|^2 |x - x_2|^2``), n = 1."""
    r1, r2 = a1.rho, a2.rho
    x1, x2 = float(a1.x[0]), float(a2.x[0])
    c = r1 + r2
    m = (r1 * x1 + r2 * x2) / c
    L = 11.0 / math.sqrt(c)
    pref = a1.norm_const * a2.norm_const

    def env(x):
        v = pref * math.exp(-r1 * (x - x1) ** 2 - r2 * (x - x2) ** 2)
        return v * r2 * r2 * (x - x2) ** 2 if weight_t else v

    phase0 = float(a1.xi[0] * x1 - a2.xi[0] * x2)
    return quad_fourier_1d(env, float(a2.xi[0] - a1.xi[0]), m - L, m + L, phase0)


def _gram_forms(pairs, seed):
    rng = np.random.default_rng(seed)
    lat = lt.build_frequency_lattice(1, 6)
    frame = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=1.0, k_max=5))
    G = gram.assemble("E", frame, 0.0)
    worst_e = worst_t = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        rows, cols = G.matrix.nonzero()
        pick = rng.choice(len(rows), pairs, replace=False)
        for p in pick:
            a1, a2 = frame.atom(rows[p]), frame.atom(cols[p])
            e = gram.b_E_entry(a1, a2)
            qe, me = quad_pair(a1, a2)
            t = gram.b_T_entry(a1, a2)
            qt, mt = quad_pair(a1, a2, True)
            worst_e = max(worst_e, abs(e - qe) / max(abs(qe), me))
            worst_t = max(worst_t, abs(t - qt) / max(abs(qt), mt))
    D = G.dense()
    herm = float(np.abs(D - D.conj().T).max())
    quad = []
    for _ in range(20):
        v = rng.standard_normal(len(frame)) + 1j * rng.standard_normal(len(frame))
        quad.append(float(np.vdot(v, D @ v).real / np.vdot(v, v).real))
    ok = worst_e <= 1e-8 and worst_t <= 1e-8 and herm <= 1e-12 and min(quad) > 0
    return ok, {"bE_err": worst_e, "bT_err": worst_t, "hermitian_err": herm,
                "min_rayleigh": min(quad), "atoms": len(frame)}


def check_gram_forms(pairs=200, seed=0):
    return _timed("gram_closed_forms", _gram_forms, pairs, seed)


# -- 7. Schur / order bounds ---------------------------------------------------------------------------


def schur_table(field, t, ks, R=1.0, C_eps=0.5, eps=0.25, convention="paper"):
    lat = lt.build_frequency_lattice(field.dim, max(ks) + 1)
    E, T = [], []
    for k in ks:
        frame = atoms.Frame(lat, lt.LatticeConfig(eps=eps, C_eps=C_eps, R=R, k_max=k))
        beams = gram.propagate(frame, field, [t], "+", 1e-10, convention)[0] if t else gram.static_beams(frame)
        E.append(gram.schur_bounds(gram.assemble("E", frame, t, beams=beams))[0])
        T.append(gram.schur_bounds(gram.assemble("T", frame, t, beams=beams))[0])
    return E, T


def _schur(ks, times):
    out, ok = {}, True
    for field in (identity(1, 1.0), periodic(1, amp=0.1, T=1.0)):
        for t in times:
            E, T = schur_table(field, t, ks)
            se, st = slope(ks, E), slope(ks, T)
            ok &= -0.3 <= se <= 0.3 and 0.7 <= st <= 1.3
            out[f"{field.name}_t{t:g}_E_slope"] = se
            out[f"{field.name}_t{t:g}_T_slope"] = st
    return ok, out


def check_schur(ks=(4, 5, 6, 7, 8), times=(0.0, 0.5)):
    return _timed("schur_order_bounds", _schur, list(ks), list(times))


# -- 8. parametrix initial conditions ---------------------------------------------------------------------


def _initial(kmins, seed):
    rng = np.random.default_rng(seed)
    field = periodic(1, amp=0.1, T=1.0)
    lat = lt.build_frequency_lattice(1, max(kmins) + 1)
    out, ok = {}, True
    frame = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=1.0, k_max=5))
    tb = pm.two_branch(frame, field, 0.0, 0.0)
    S = pm.s_operator(frame, tb)
    C = pm.c_operator(frame, tb)
    G = gram.assemble("E", frame, 0.0)
    v = rng.standard_normal(len(frame)) + 1j * rng.standard_normal(len(frame))
    s_max = float(np.abs(S.matrix.data).max(initial=0.0))
    c_diff = float(np.linalg.norm(C.matrix @ v - G.matrix @ v))
    ok &= s_max == 0.0 and S.nnz == 0 and c_diff == 0.0
    dS, dC = [], []
    for k in kmins:
        fr = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=0.3, k_max=k, k_min=k))
        ids = np.arange(min(len(fr), 40))
        c = rng.standard_normal(len(ids)) + 1j * rng.standard_normal(len(ids))
        dS.append(pm.dS_deviation(fr, field, ids, c))
        dC.append(pm.dC_deviation(fr, field, ids, c))
    sS = slope(kmins, dS)
    ok &= sS < 0
    # the two branches mirror each other at t = s, so d_t C vanishes identically
    ok &= max(dC) <= 1e-10
    out.update(S00_max=s_max, C00_minus_gram=c_diff, dS_dev=dS, dS_slope=sS, dC_dev_max=max(dC))
    return ok, out


def check_initial_conditions(kmins=(2, 3, 4, 5, 6, 7), seed=0):
    return _timed("parametrix_initial_conditions", _initial, list(kmins), seed)


# -- 9. end-to-end solve -----------------------------------------------------------------------------


PACKET = dict(amp=1.0, centre=0.0, freq=28.0, width=49.0)


def _solve(k_maxes, t_eval, convention):
    field = identity(1, 1.0)
    lat = lt.build_frequency_lattice(1, max(k_maxes) + 1)
    f = atoms.GaussianMixture([PACKET["amp"]], [[PACKET["centre"]]], [[PACKET["freq"]]], [PACKET["width"]])
    zero = atoms.GaussianMixture.zero(1)
    errs = []
    for k in k_maxes:
        frame = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=2.5, k_max=k))
        sol = pm.volterra_solve(pm.CauchyProblem(f, zero, field, t_eval), frame,
                                times=np.array([0.0, t_eval]), convention=convention)
        errs.append(pm.dalembert_error(sol, f, t_eval))
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    # zero data
    zsol = pm.volterra_solve(pm.CauchyProblem(zero, zero, field, t_eval), frame,
                             times=np.array([0.0, t_eval]), convention=convention)
    zero_max = max(float(np.abs(u.values).max(initial=0.0)) for u in zsol.u + zsol.G)
    # the series is identically zero for exact beams; measure its decay on a variable field
    vfield = periodic(1, amp=0.1, T=1.0)
    vframe = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=2.0, k_max=3))
    g = atoms.GaussianMixture([1.0], [[0.0]], [[6.0]], [4.0])
    vsol = pm.volterra_solve(pm.CauchyProblem(g, zero, vfield, 0.5), vframe, convention=convention)
    ratios = vsol.report.ratios
    ok = monotone and errs[-1] < 0.05 and zero_max == 0.0 and ratios and max(ratios) < 0.9
    return ok, {"dalembert_err": errs, "zero_output_max": zero_max,
                "series_terms": len(vsol.report.term_norms), "max_term_ratio": max(ratios) if ratios else float("nan")}


def check_solve(k_maxes=(4, 5, 6), t_eval=0.5, convention="paper"):
    return _timed("end_to_end_solve", _solve, list(k_maxes), t_eval, convention)


ALL_CHECKS = (
    check_gaussian_calculus,
    check_theta,
    check_partition,
    check_frame_bounds,
    check_rays,
    check_gram_forms,
    check_schur,
    check_initial_conditions,
    check_solve,
)

CHECK_NAMES = {
    "gaussian_calculus": check_gaussian_calculus,
    "theta": check_theta,
    "partition": check_partition,
    "frame_bounds": check_frame_bounds,
    "rays": check_rays,
    "gram": check_gram_forms,
    "schur": check_schur,
    "initial_conditions": check_initial_conditions,
    "solve": check_solve,
}
_SEEDED = {"gaussian_calculus", "theta", "frame_bounds", "rays", "gram", "initial_conditions"}


def run_checks(names=None, seed=0, convention="paper"):
    """Run the named suites (all when ``names`` is None) in a fixed order."""
    names = list(CHECK_NAMES) if names is None else list(names)
    out = []
    for name in names:
        fn = CHECK_NAMES[name]
        if name in _SEEDED:
            out.append(fn(seed=seed))
        elif name == "solve":
            out.append(fn(convention=convention))
        else:
            out.append(fn())
    return out
