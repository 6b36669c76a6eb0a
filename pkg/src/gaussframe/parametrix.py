"""Two-branch parametrix and the Volterra solve of the Cauchy problem.

For ``T = d_t^2 - sum a_ij d_i d_j`` with data ``u(0) = f``, ``u_t(0) = h``,
``Tu = F``::

    C(t,s) phi = (phi^+(t,s) + phi^-(t,s)) / 2
    S(t,s) phi = (phi^+(t,s) - phi^-(t,s)) / (2 i sigma q0)

where ``phi^+-`` are atoms launched at time ``s`` along the two branches,
``q0 = q(s, x_g, xi_g)`` and ``sigma`` is the ray-sign convention.  The
factor ``1/(i sigma)`` makes ``d_t S(s,s) = I`` to leading order.  The solution is
``u = C(t,0) f + S(t,0) h + int_0^t S(t,s) G(s) ds`` with
``G + int_0^t TS(t,s) G(s) ds = F - T(C(t,0) f + S(t,0) h)``.
Everything is carried in synthesis coefficients over the static frame.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import gram
from .atoms import CoeffSequence, GaussianMixture, analyze
from .coeff_field import symbol_q
from .errors import DivisionDegeneracy, DomainError, IndexMismatch, NonContraction
from .rays import CONVENTIONS, evolve_batch

Q0_MIN = 1e-12
NOISE_FLOOR = 1e-12
# Tikhonov weight of the frame inversion, relative to max diag(G).  Roundoff in a
# right-hand side is amplified by ~1/mu; 1e-6 keeps the solve linear to 1e-10
# while the representation bias stays far below the discretization error.
MU_REL = 1e-6


# -- two-branch atoms ------------------------------------------------------------------------


@dataclass
class TwoBranchAtoms:
    """Frame atoms launched at ``s`` and propagated to ``t`` along both branches."""

    t: float
    s: float
    plus: gram.Beams
    minus: gram.Beams
    q0: np.ndarray
    convention: str = "paper"

    @property
    def sigma(self):
        return CONVENTIONS[self.convention]


def two_branch(frame, field, t, s=0.0, tol=1e-10, convention="paper"):
    q0 = symbol_q(field, s, frame.x, frame.xi)
    if np.any(q0 < Q0_MIN):
        raise DivisionDegeneracy("q(s, x, xi) vanished for a frame atom")
    if t == s:
        b = gram.static_beams(frame, t)
        return TwoBranchAtoms(t, s, b, b, q0, convention)
    plus = gram.propagate(frame, field, [t], "+", tol, convention, t0=s)[0]
    minus = gram.propagate(frame, field, [t], "-", tol, convention, t0=s)[0]
    return TwoBranchAtoms(t, s, plus, minus, q0, convention)


# -- single entries ----------------------------------------------------------------------------


def bC_entry(frame, tb, j, jp):
    """``<phi_j, C(t,s) phi_jp>``."""
    a = frame.atom(j)
    ep = gram.b_E_entry(a, gram.propagated_atom(frame.atom(jp), tb.plus.x[jp], tb.plus.xi[jp]))
    em = gram.b_E_entry(a, gram.propagated_atom(frame.atom(jp), tb.minus.x[jp], tb.minus.xi[jp]))
    return 0.5 * (ep + em)


def bS_entry(frame, tb, j, jp):
    """``<phi_j, S(t,s) phi_jp>``; zero at ``t = s``."""
    if tb.t == tb.s:
        return 0j
    q0 = tb.q0[jp]
    if q0 < Q0_MIN:
        raise DivisionDegeneracy(f"q0={q0:g}")
    a = frame.atom(j)
    ep = gram.b_E_entry(a, gram.propagated_atom(frame.atom(jp), tb.plus.x[jp], tb.plus.xi[jp]))
    em = gram.b_E_entry(a, gram.propagated_atom(frame.atom(jp), tb.minus.x[jp], tb.minus.xi[jp]))
    return (ep - em) / (2j * tb.sigma * q0)


# -- sparse operators -------------------------------------------------------------------------


def _pairs(frame, beams, scale, kind, t, threshold):
    amp, x, xi, rho = beams.gaussians()
    return gram.assemble_pairs(frame.gaussians(), (amp * scale, x, xi, rho), kind, t, threshold,
                               index=frame.index)


def c_operator(frame, tb, threshold=gram.DEFAULT_THRESHOLD):
    if tb.t == tb.s:
        return _pairs(frame, tb.plus, 1.0, "E", tb.t, threshold)
    half = np.full(len(frame), 0.5)
    op_p = _pairs(frame, tb.plus, half, "E", tb.t, threshold)
    op_m = _pairs(frame, tb.minus, half, "E", tb.t, threshold)
    return gram.combine([op_p, op_m], [1.0, 1.0], "C")


def s_operator(frame, tb, threshold=gram.DEFAULT_THRESHOLD):
    if tb.t == tb.s:
        n = len(frame)
        z = np.zeros(n)
        return gram.SparseOperator(tb.t, sp.csr_matrix((n, n), dtype=complex), threshold, "S",
                                   z, z.copy(), z.copy(), z.copy(), -1, frame.index)
    w = 1.0 / (2 * tb.q0)
    op_p = _pairs(frame, tb.plus, w, "E", tb.t, threshold)
    op_m = _pairs(frame, tb.minus, w, "E", tb.t, threshold)
    c = 1.0 / (1j * tb.sigma)
    out = gram.combine([op_p, op_m], [c, -c], "S")
    out.order_weight = -1
    return out


def tc_operator(frame, field, tb, threshold=gram.DEFAULT_THRESHOLD):
    """``<phi_g, T C(t,s) phi_g'>`` with the exact beam polynomial."""
    ops = []
    for beams, br in ((tb.plus, "+"), (tb.minus, "-")):
        P = gram.beam_polynomial(field, beams, br, tb.convention)
        ops.append(gram.assemble_poly(frame, beams, P, np.full(len(frame), 0.5), tb.t, threshold))
    return gram.combine(ops, [1.0, 1.0], "TC")


def ts_operator(frame, field, tb, threshold=gram.DEFAULT_THRESHOLD):
    """``<phi_g, T S(t,s) phi_g'>`` with the exact beam polynomial."""
    ops = []
    w = 1.0 / (2 * tb.q0)
    for beams, br in ((tb.plus, "+"), (tb.minus, "-")):
        P = gram.beam_polynomial(field, beams, br, tb.convention)
        ops.append(gram.assemble_poly(frame, beams, P, w, tb.t, threshold))
    c = 1.0 / (1j * tb.sigma)
    return gram.combine(ops, [c, -c], "TS")


def apply_operator(op, c: CoeffSequence) -> CoeffSequence:
    """Matrix-vector product over a shared index set."""
    if op.index is not None and c.index is not op.index and c.index != op.index:
        raise IndexMismatch("operator and coefficients use different index sets")
    if op.shape[1] != len(c):
        raise IndexMismatch(f"operator has {op.shape[1]} columns, sequence has {len(c)}")
    return CoeffSequence(c.index, op.matrix @ c.values, c.sobolev_m)


# -- projection onto the frame span ----------------------------------------------------------


class FrameProjector:
    """Least-squares synthesis coefficients: ``d = (G + mu I)^{-1} <phi, f>``."""

    def __init__(self, frame, threshold=gram.DEFAULT_THRESHOLD, mu_rel=MU_REL):
        self.frame = frame
        self.gram = gram.assemble("E", frame, 0.0, threshold=threshold)
        G = self.gram.matrix
        self.mu = mu_rel * float(np.abs(G.diagonal()).max(initial=1.0))
        self._lu = splu(sp.csc_matrix(G + self.mu * sp.identity(G.shape[0], format="csc")))

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=complex))

    def coefficients(self, f: GaussianMixture):
        return self.solve(analyze(f, self.frame).values)

    def norm(self, d):
        """``|| sum d phi ||`` through the Gram matrix."""
        return math.sqrt(max(float(np.vdot(d, self.gram.matrix @ d).real), 0.0))

    def synthesize(self, d):
        keep = np.flatnonzero(d != 0)
        fr = self.frame
        return GaussianMixture(d[keep] * fr.norm[keep], fr.x[keep], fr.xi[keep], fr.rho[keep])

    def error(self, d, g: GaussianMixture):
        """``|| sum d phi - g ||`` in closed form."""
        b = analyze(g, self.frame).values
        e2 = np.vdot(d, self.gram.matrix @ d).real - 2 * np.vdot(d, b).real + g.norm2()
        return math.sqrt(max(float(e2), 0.0))


# -- Cauchy problem ----------------------------------------------------------------------------


@dataclass
class CauchyProblem:
    f: GaussianMixture
    h: GaussianMixture
    field: object
    T: float
    F: Optional[List[GaussianMixture]] = None
    F_times: Optional[np.ndarray] = None

    def forcing(self, t):
        """Linear interpolation of the sampled forcing (``None`` when absent)."""
        if not self.F:
            return None
        ts = np.asarray(self.F_times, float)
        if len(ts) == 1:
            return self.F[0]
        j = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
        lam = (t - ts[j]) / (ts[j + 1] - ts[j])
        lam = min(max(lam, 0.0), 1.0)
        return self.F[j].scaled(1 - lam) + self.F[j + 1].scaled(lam)


def master_times(T, nodes_per_unit=8):
    """Composite Gauss-Legendre nodes on ``[0, T]`` (panels of length <= 1) plus both ends."""
    panels = max(1, math.ceil(T - 1e-12))
    g, _ = np.polynomial.legendre.leggauss(nodes_per_unit)
    edges = np.linspace(0.0, T, panels + 1)
    pts = [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        pts.extend(0.5 * (b - a) * g + 0.5 * (a + b))
    pts.append(T)
    return np.array(pts)


def gl_rule(t, nodes_per_unit=8):
    """Composite Gauss-Legendre rule on ``[0, t]`` with ``nodes_per_unit`` nodes per unit panel."""
    if t <= 0:
        return np.zeros(0), np.zeros(0)
    panels = max(1, math.ceil(t - 1e-12))
    g, w = np.polynomial.legendre.leggauss(nodes_per_unit)
    edges = np.linspace(0.0, t, panels + 1)
    s = np.concatenate([0.5 * (b - a) * g + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    ws = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return s, ws


def _interp_weights(times, s):
    j = int(np.clip(np.searchsorted(times, s) - 1, 0, len(times) - 2))
    lam = (s - times[j]) / (times[j + 1] - times[j])
    return j, lam


@dataclass
class SolveReport:
    term_norms: List[float]
    ratios: List[float]
    early_exit: bool
    rhs_norm: float
    data_norm: float
    convention: str
    quad_nodes: int
    times: np.ndarray
    residual: Optional[float] = None
    residual_rel: Optional[float] = None
    elapsed: float = 0.0
    extra: dict = dc_field(default_factory=dict)

    def max_ratio(self):
        return max(self.ratios) if self.ratios else 0.0

    def as_dict(self):
        return {
            "convention": self.convention,
            "quad_nodes": self.quad_nodes,
            "early_exit": self.early_exit,
            "rhs_norm": self.rhs_norm,
            "data_norm": self.data_norm,
            "term_norms": list(self.term_norms),
            "ratios": list(self.ratios),
            "residual": self.residual,
            "residual_rel": self.residual_rel,
            "elapsed_s": self.elapsed,
            **self.extra,
        }


@dataclass
class Solution:
    frame: object
    projector: FrameProjector
    times: np.ndarray
    u: List[CoeffSequence]
    G: List[CoeffSequence]
    report: SolveReport

    def at(self, j):
        return self.projector.synthesize(self.u[j].values)

    def index_of(self, t):
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-12:
            raise DomainError(f"t={t} is not a solution time")
        return j


class VolterraSolver:
    """Assembles the operators once per ``(t, s)`` node and iterates the Neumann series."""

    def __init__(self, frame, field, tol=1e-10, convention="paper", threshold=gram.DEFAULT_THRESHOLD,
                 nodes_per_unit=8, projector=None):
        self.frame = frame
        self.field = field
        self.tol = tol
        self.convention = convention
        self.threshold = threshold
        self.nodes = nodes_per_unit
        self.proj = projector or FrameProjector(frame, threshold)
        self._cache = {}

    def _tb(self, t, s):
        key = (float(t), float(s))
        if key not in self._cache:
            tb = two_branch(self.frame, self.field, t, s, self.tol, self.convention)
            self._cache[key] = {"tb": tb}
        return self._cache[key]

    def op(self, name, t, s):
        entry = self._tb(t, s)
        if name not in entry:
            tb = entry["tb"]
            th = self.threshold
            if name == "C":
                entry[name] = c_operator(self.frame, tb, th)
            elif name == "S":
                entry[name] = s_operator(self.frame, tb, th)
            elif name == "TC":
                entry[name] = tc_operator(self.frame, self.field, tb, th)
            else:
                entry[name] = ts_operator(self.frame, self.field, tb, th)
        return entry[name].matrix

    def _integral(self, name, t, times, g):
        """``int_0^t B(t,s) g(s) ds`` with ``g`` linearly interpolated from ``times``."""
        s_nodes, ws = gl_rule(t, self.nodes)
        acc = np.zeros(len(self.frame), dtype=complex)
        for s, w in zip(s_nodes, ws):
            j, lam = _interp_weights(times, s)
            gs = (1 - lam) * g[j] + lam * g[j + 1]
            if np.any(gs):
                acc += w * (self.op(name, t, s) @ gs)
        return acc

    def solve(self, problem: CauchyProblem, times=None, max_terms=40, series_tol=1e-10,
              residual_time=None):
        t_start = time.perf_counter()
        if self.field is not problem.field:
            raise DomainError("solver and problem use different fields")
        P = self.proj
        times = master_times(problem.T, self.nodes) if times is None else np.asarray(times, float)
        d_f = P.coefficients(problem.f)
        d_h = P.coefficients(problem.h)
        data_norm = P.norm(d_f) + P.norm(d_h)
        d_F = []
        for t in times:
            Ft = problem.forcing(t)
            d_F.append(P.coefficients(Ft) if Ft is not None else np.zeros(len(self.frame), complex))
        data_norm += max(P.norm(d) for d in d_F)

        # g_0 = F - T(C f + S h)
        g0 = []
        for t, dF in zip(times, d_F):
            b = np.zeros(len(self.frame), complex)
            if np.any(d_f):
                b += self.op("TC", t, 0.0) @ d_f
            if np.any(d_h):
                b += self.op("TS", t, 0.0) @ d_h
            g0.append(dF - P.solve(b))
        rhs_norm = max(P.norm(g) for g in g0)

        term_norms, ratios = [rhs_norm], []
        total = [g.copy() for g in g0]
        early = rhs_norm <= NOISE_FLOOR * max(data_norm, 1.0) * max(1.0, self._scale())
        if not early:
            gn = g0
            for n in range(max_terms):
                nxt = [np.zeros(len(self.frame), complex)]
                for t in times[1:]:
                    nxt.append(-P.solve(self._integral("TS", t, times, gn)))
                norm = max(P.norm(g) for g in nxt)
                ratios.append(norm / term_norms[-1] if term_norms[-1] > 0 else 0.0)
                term_norms.append(norm)
                for a, b in zip(total, nxt):
                    a += b
                gn = nxt
                if norm < series_tol * rhs_norm:
                    break
            else:
                raise NonContraction(
                    f"series terms {term_norms[-3:]} did not fall below {series_tol:g} "
                    f"relative after {max_terms} terms")
        if len(ratios) >= 3 and ratios[-1] >= 1.0 and ratios[-2] >= 1.0:
            raise NonContraction("series terms are not decreasing")

        u = []
        for t in times:
            u.append(self._u_coeffs(t, d_f, d_h, times, total))
        idx = self.frame.index
        report = SolveReport(term_norms, ratios, early, rhs_norm, data_norm, self.convention,
                             self.nodes, times)
        sol = Solution(self.frame, P, times, [CoeffSequence(idx, v) for v in u],
                       [CoeffSequence(idx, v) for v in total], report)
        sol._data = (d_f, d_h, total)
        if residual_time is not None:
            r, rel = self.residual(sol, problem, residual_time)
            report.residual, report.residual_rel = r, rel
        report.elapsed = time.perf_counter() - t_start
        return sol

    def _scale(self):
        return float(self.frame.rho.max(initial=1.0)) ** 2

    def _u_coeffs(self, t, d_f, d_h, times, g):
        b = np.zeros(len(self.frame), complex)
        if np.any(d_f):
            b += self.op("C", t, 0.0) @ d_f
        if np.any(d_h) and t > 0:
            b += self.op("S", t, 0.0) @ d_h
        if t > 0 and any(np.any(x) for x in g):
            b += self._integral("S", t, times, g)
        return self.proj.solve(b)

    def u_at(self, sol, t):
        d_f, d_h, g = sol._data
        return self._u_coeffs(t, d_f, d_h, sol.times, g)

    def residual(self, sol, problem, t, grid=None, delta=None):
        """``||Tu - F||`` at time ``t`` by fourth-order differences of the synthesized field
        on a grid, returned with its value relative to ``|xi_max|^2 ||u||``."""
        n = self.frame.dim
        rho_max = float(self.frame.rho.max())
        if delta is None:
            delta = 0.05 / rho_max
        if grid is None:
            R = float(np.abs(self.frame.x).max())
            m = 401 if n == 1 else 81
            g = np.linspace(-R, R, m)
            grid = np.stack(np.meshgrid(*([g] * n), indexing="ij"), -1).reshape(-1, n)
        dv = np.prod([np.ptp(grid[:, d]) / (len(np.unique(grid[:, d])) - 1) for d in range(n)])
        w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
        w1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
        # centre the stencil at t, or push it forward so it stays in [0, T]
        ts = max(t, 2 * delta) + (np.arange(5) - 2) * delta
        mix = [self.proj.synthesize(self.u_at(sol, s)) for s in ts]
        utt = sum(w2[j] * mix[j](grid) for j in range(5)) / delta**2
        tc = ts[2]
        um = mix[2]
        hx = delta
        A = self.field.matrix(tc, grid)
        Au = np.zeros(len(grid), complex)
        for i in range(n):
            for j in range(n):
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = hx
                ej[j] = hx
                if i == j:
                    d2 = sum(w2[a] * um(grid + (a - 2) * ei) for a in range(5)) / hx**2
                else:
                    d2 = sum(w1[a] * w1[b] * um(grid + (a - 2) * ei + (b - 2) * ej)
                             for a in range(5) for b in range(5) if w1[a] and w1[b]) / hx**2
                Au += A[:, i, j] * d2
        res = utt - Au
        Ft = problem.forcing(tc)
        if Ft is not None:
            res = res - Ft(grid)
        r = math.sqrt(float((np.abs(res) ** 2).sum() * dv))
        unorm = math.sqrt(float((np.abs(um(grid)) ** 2).sum() * dv))
        return r, r / (rho_max**2 * unorm) if unorm > 0 else 0.0


def volterra_solve(problem: CauchyProblem, frame, nodes_per_unit=8, tol=1e-10, max_terms=40,
                   convention="paper", threshold=gram.DEFAULT_THRESHOLD, times=None,
                   residual_time=None, ray_tol=1e-10):
    """Solve the Cauchy problem; returns a :class:`Solution` (``u``, ``G``, report).

    ``tol`` truncates the series relative to the first term; ``ray_tol`` is the
    ray integrator tolerance.
    """
    solver = VolterraSolver(frame, problem.field, ray_tol, convention, threshold, nodes_per_unit)
    return solver.solve(problem, times, max_terms, tol, residual_time)


# -- checks --------------------------------------------------------------------------------


def shifted(f: GaussianMixture, shift):
    return GaussianMixture(f.amp, f.center + shift, f.freq, f.width)


def dalembert(f: GaussianMixture, t):
    """``(f(x - t) + f(x + t)) / 2`` for ``n = 1`` and unit speed."""
    if f.dim != 1:
        raise DomainError("d'Alembert formula implemented for n = 1")
    return shifted(f, t).scaled(0.5) + shifted(f, -t).scaled(0.5)


def dalembert_error(sol, f, t):
    """Relative L2 distance between the solution at ``t`` and the exact wave.

    Trapezoid rule on a grid that resolves the highest frequency present; the
    closed-form Gram expression loses everything below ~1e-5 to cancellation.
    """
    j = sol.index_of(t)
    exact = dalembert(f, t)
    u = sol.at(j)
    both = u + exact
    r = np.sqrt(1.0 / both.width)
    lo = float((both.center[:, 0] - 9 * r).min())
    hi = float((both.center[:, 0] + 9 * r).max())
    h = 0.05 / float(np.abs(both.freq).max() + 1.0)
    x = np.linspace(lo, hi, int(math.ceil((hi - lo) / h)) + 1)
    dx = x[1] - x[0]
    err = np.sqrt((np.abs(u(x) - exact(x)) ** 2).sum() * dx)
    ref = np.sqrt((np.abs(exact(x)) ** 2).sum() * dx)
    return float(err / ref)


def dS_deviation(frame, field, atom_ids, coeffs=None, s=0.0, delta=None, tol=1e-10,
                 convention="paper"):
    """``|| d_t S(s,s) f - f || / ||f||`` with ``f = sum c_j phi_j`` over ``atom_ids``.

    ``d_t S`` by a central difference of the two-branch atoms at ``s +- delta``.
    """
    sub_x, sub_xi, sub_dx = frame.x[atom_ids], frame.xi[atom_ids], frame.dx[atom_ids]
    c = np.ones(len(atom_ids), complex) if coeffs is None else np.asarray(coeffs, complex)
    rho = np.linalg.norm(sub_xi, axis=1)
    if delta is None:
        delta = 1e-4 / rho.max()
    q0 = symbol_q(field, s, sub_x, sub_xi)
    sig = CONVENTIONS[convention]
    parts = []
    for sgn in (1.0, -1.0):
        for br, bs in (("+", 1.0), ("-", -1.0)):
            xs, xis, _, _ = evolve_batch(field, sub_x, sub_xi, [s, s + sgn * delta], br, tol, convention)
            w = sgn * bs * c / (2j * sig * q0) / (2 * delta)
            r = np.linalg.norm(xis[-1], axis=1)
            parts.append(GaussianMixture(w * (r * sub_dx / (2 * math.pi)) ** (frame.dim / 2), xs[-1], xis[-1], r))
    n0 = (rho * sub_dx / (2 * math.pi)) ** (frame.dim / 2)
    f = GaussianMixture(c * n0, sub_x, sub_xi, rho)
    d = parts[0] + parts[1] + parts[2] + parts[3]
    err = d - f
    return math.sqrt(max(err.norm2(), 0.0) / f.norm2())


def dC_deviation(frame, field, atom_ids, coeffs=None, s=0.0, delta=None, tol=1e-10,
                 convention="paper"):
    """``|| d_t C(s,s) f || / (|xi| ||f||)`` by a central difference."""
    sub_x, sub_xi, sub_dx = frame.x[atom_ids], frame.xi[atom_ids], frame.dx[atom_ids]
    c = np.ones(len(atom_ids), complex) if coeffs is None else np.asarray(coeffs, complex)
    rho = np.linalg.norm(sub_xi, axis=1)
    if delta is None:
        delta = 1e-4 / rho.max()
    parts = []
    for sgn in (1.0, -1.0):
        for br in ("+", "-"):
            xs, xis, _, _ = evolve_batch(field, sub_x, sub_xi, [s, s + sgn * delta], br, tol, convention)
            r = np.linalg.norm(xis[-1], axis=1)
            w = sgn * 0.5 * c / (2 * delta)
            parts.append(GaussianMixture(w * (r * sub_dx / (2 * math.pi)) ** (frame.dim / 2), xs[-1], xis[-1], r))
    n0 = (rho * sub_dx / (2 * math.pi)) ** (frame.dim / 2)
    f = GaussianMixture(c * n0, sub_x, sub_xi, rho)
    # forward-plus and backward-minus atoms coincide for time-independent fields
    d = (parts[0] + parts[1] + parts[2] + parts[3]).merged()
    return math.sqrt(max(d.norm2(), 0.0) / f.norm2()) / rho.max()
