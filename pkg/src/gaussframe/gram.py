"""Operator matrices between static atoms and atoms propagated along rays.

``B_E(t)[g, g'] = <phi_g, phi_g'(t)>`` and, to leading order,
``B_T(t)[g, g'] = <phi_g, |xi_g'(t)|^2 |x - x_g'(t)|^2 phi_g'(t)>``.
Propagated atoms keep their spatial step and take the current frequency:
``phi_g(t,x) = (|xi(t)| dx/2pi)^{n/2} exp(i xi(t).(x - x(t)) - |xi(t)| |x - x(t)|^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .atoms import FrameAtom, norm_const
from .errors import IndexMismatch, SizeOverflow
from .gaussian_calc import (Gaussian, GaussianIntegralParams, gauss_fourier, gauss_pair_product,
                            gauss_second_moment)
from .rays import evolve_batch, rhs

DEFAULT_THRESHOLD = 1e-12
DEFAULT_CAP = 20_000_000


# -- propagation ------------------------------------------------------------------------


@dataclass
class Beams:
    """Atoms propagated to one time, as arrays aligned with a frame."""

    t: float
    x: np.ndarray
    xi: np.ndarray
    dx: np.ndarray

    @property
    def rho(self):
        return np.linalg.norm(self.xi, axis=1)

    @property
    def norm(self):
        return norm_const(self.rho, self.dx, self.x.shape[1])

    def gaussians(self):
        return self.norm.astype(complex), self.x, self.xi, self.rho


def static_beams(frame, t=0.0):
    return Beams(t, frame.x.copy(), frame.xi.copy(), frame.dx.copy())


def propagate(frame, field, times, branch="+", tol=1e-10, convention="paper", t0=0.0):
    """Beams launched at ``t0`` from the static frame data, one per time."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    path = np.concatenate([[t0], times])
    xs, xis, _, _ = evolve_batch(field, frame.x, frame.xi, path, branch, tol, convention)
    return [Beams(float(t), xs[j + 1], xis[j + 1], frame.dx) for j, t in enumerate(times)]


def propagated_atom(atom, x_t, xi_t):
    rho = float(np.linalg.norm(xi_t))
    return FrameAtom(atom.gamma, np.asarray(x_t, float), np.asarray(xi_t, float), atom.dx,
                     float(norm_const(rho, atom.dx, len(x_t))))


# -- single entries ---------------------------------------------------------------------------


def beta_factor(rho1, dx1, rho2, dx2, n):
    """``(rho1 rho2 dx1 dx2 / (4 pi (rho1 + rho2)))^{n/2}``."""
    return (rho1 * rho2 * dx1 * dx2 / (4 * math.pi * (rho1 + rho2))) ** (n / 2)


def _as_gaussian(atom):
    return Gaussian(atom.norm_const, atom.x, atom.xi, atom.rho)


def b_E_entry(atom, atom_t):
    """``int conj(phi_g) phi_g'(t)`` from the completed-square form."""
    pp = gauss_pair_product(_as_gaussian(atom), _as_gaussian(atom_t))
    return pp.prefactor * np.exp(1j * pp.const_phase) * gauss_fourier(
        GaussianIntegralParams(pp.decay, pp.osc))


def b_T_entry(atom, atom_t):
    """Leading-order ``int conj(phi_g) |xi'(t)|^2 |x - x'(t)|^2 phi_g'(t)``."""
    pp = gauss_pair_product(_as_gaussian(atom), _as_gaussian(atom_t))
    r1 = atom.rho
    b = r1 * (atom.x - atom_t.x) / pp.decay
    m2 = gauss_second_moment(GaussianIntegralParams(pp.decay, pp.osc, b))
    return pp.prefactor * np.exp(1j * pp.const_phase) * atom_t.rho**2 * m2


# -- sparse assembly --------------------------------------------------------------------------


@dataclass
class SparseOperator:
    """Thresholded complex matrix with Schur-test metadata."""

    t: float
    matrix: sp.csr_matrix
    threshold: float
    kind: str
    row_sums: np.ndarray
    col_sums: np.ndarray
    pruned_row: np.ndarray
    pruned_col: np.ndarray
    order_weight: int = 0
    index: object = None
    meta: dict = dc_field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def nnz(self):
        return self.matrix.nnz

    def dense(self):
        return self.matrix.toarray()

    def scaled(self, s, kind=None):
        return SparseOperator(self.t, self.matrix * s, self.threshold, kind or self.kind,
                              self.row_sums * abs(s), self.col_sums * abs(s),
                              self.pruned_row * abs(s), self.pruned_col * abs(s),
                              self.order_weight, self.index, dict(self.meta))


def _from_coo(rows, cols, vals, row_pr, col_pr, shape, t, thr, kind, order, index):
    mat = sp.csr_matrix((vals, (rows, cols)), shape=shape)
    absv = np.abs(vals)
    rsum = np.bincount(rows, absv, minlength=shape[0]) + row_pr
    csum = np.bincount(cols, absv, minlength=shape[1]) + col_pr
    return SparseOperator(t, mat, thr, kind, rsum, csum, row_pr, col_pr, order, index)


def combine(ops, weights, kind):
    """Linear combination of operators on the same index set (sums stay upper bounds)."""
    mat = sum(w * op.matrix for w, op in zip(weights, ops))
    mat = sp.csr_matrix(mat)
    absw = [abs(w) for w in weights]
    out = SparseOperator(
        ops[0].t, mat, ops[0].threshold, kind,
        np.abs(mat).sum(axis=1).A1 + sum(a * op.pruned_row for a, op in zip(absw, ops)),
        np.abs(mat).sum(axis=0).A1 + sum(a * op.pruned_col for a, op in zip(absw, ops)),
        sum(a * op.pruned_row for a, op in zip(absw, ops)),
        sum(a * op.pruned_col for a, op in zip(absw, ops)),
        ops[0].order_weight, ops[0].index,
    )
    return out


def assemble_pairs(rows_g, cols_g, kind, t=0.0, threshold=DEFAULT_THRESHOLD, cap=DEFAULT_CAP,
                   index=None):
    """Pruned pair matrix between two Gaussian families (``kind`` 'E' or 'T')."""
    code = _kernels.KIND_E if kind == "E" else _kernels.KIND_T
    rows, cols, vals, rp, cp = _kernels.gram_pairs(rows_g, cols_g, code, threshold)
    if len(vals) > cap:
        raise SizeOverflow(f"{len(vals)} stored entries exceed cap {cap}")
    shape = (len(rows_g[0]), len(cols_g[0]))
    return _from_coo(rows, cols, vals, rp, cp, shape, t, threshold, kind, int(kind == "T"), index)


def assemble(kind, frame, t, field=None, threshold=DEFAULT_THRESHOLD, branch="+", tol=1e-10,
             convention="paper", beams=None, cap=DEFAULT_CAP):
    """``B_E(t)`` or leading-order ``B_T(t)`` over the frame's index set."""
    if beams is None:
        if t == 0 or field is None:
            beams = static_beams(frame, t)
        else:
            beams = propagate(frame, field, [t], branch, tol, convention)[0]
    if len(beams.x) != len(frame):
        raise IndexMismatch("beams and frame differ in length")
    op = assemble_pairs(frame.gaussians(), beams.gaussians(), kind, t, threshold, cap, frame.index)
    op.meta.update(branch=branch, convention=convention)
    return op


def apply(op, values):
    if op.shape[1] != len(values):
        raise IndexMismatch(f"operator has {op.shape[1]} columns, vector has {len(values)}")
    return op.matrix @ values


def schur_bounds(op):
    return float(op.row_sums.max(initial=0.0)), float(op.col_sums.max(initial=0.0))


def schur_by_level(op, levels):
    """Max row sum per dyadic level ``k`` (rows indexed by static atoms)."""
    out = {}
    for k in np.unique(levels):
        out[int(k)] = float(op.row_sums[levels == k].max())
    return out


# -- exact T on a beam, with the coefficients Taylor-expanded about the centre -----------------

DEG = 5  # coefficient arrays are (DEG, DEG): powers of y1, y2 up to 4


def _pmul(a, b):
    """Product of batched bivariate polynomials, truncated at total degree 4."""
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for p in range(DEG):
        for q in range(DEG - p):
            ap = a[..., p, q]
            if not np.any(ap):
                continue
            for r in range(DEG - p - q):
                for s in range(DEG - p - q - r):
                    out[..., p + r, q + s] += ap * b[..., r, s]
    return out


def _pconst(c, N):
    out = np.zeros((N, DEG, DEG), dtype=complex)
    out[:, 0, 0] = c
    return out


def _plin(c, v):
    """``c + v.y`` with ``v`` of shape (N, n)."""
    out = _pconst(c, len(v))
    out[:, 1, 0] = v[:, 0]
    if v.shape[1] > 1:
        out[:, 0, 1] = v[:, 1]
    return out


def _pquad(M):
    """``y^T M y`` with ``M`` of shape (N, n, n)."""
    N, n = M.shape[:2]
    out = np.zeros((N, DEG, DEG), dtype=complex)
    out[:, 2, 0] = M[:, 0, 0]
    if n > 1:
        out[:, 0, 2] = M[:, 1, 1]
        out[:, 1, 1] = M[:, 0, 1] + M[:, 1, 0]
    return out


def _trajectory_derivatives(field, t, x, xi, branch, convention, delta=1e-4):
    """``X', xi'`` from the vector field and ``X'', xi''`` by a central difference
    of the vector field along the trajectory."""
    dx, dxi = rhs(field, t, x, xi, branch, convention)
    pts = []
    for h in (delta, -delta):
        # one RK4 step is accurate to O(h^5) here
        k1 = (dx, dxi)
        k2 = rhs(field, t + h / 2, x + h / 2 * k1[0], xi + h / 2 * k1[1], branch, convention)
        k3 = rhs(field, t + h / 2, x + h / 2 * k2[0], xi + h / 2 * k2[1], branch, convention)
        k4 = rhs(field, t + h, x + h * k3[0], xi + h * k3[1], branch, convention)
        xn = x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        pn = xi + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        pts.append(rhs(field, t + h, xn, pn, branch, convention))
    ddx = (pts[0][0] - pts[1][0]) / (2 * delta)
    ddxi = (pts[0][1] - pts[1][1]) / (2 * delta)
    return dx, dxi, ddx, ddxi


def beam_polynomial(field, beams, branch="+", convention="paper"):
    """Coefficients ``(N, 5, 5)`` of ``P(y) = (T phi)/phi`` at ``y = x - x(t)``.

    Exact chain rule for ``T = d_t^2 - sum a_ij d_i d_j`` applied to the beam,
    with ``a_ij`` replaced by its second-order Taylor polynomial about ``x(t)``.
    """
    t = beams.t
    X, xi = beams.x, beams.xi
    N, n = X.shape
    rho = np.linalg.norm(xi, axis=1)
    Xp, xip, Xpp, xipp = _trajectory_derivatives(field, t, X, xi, branch, convention)
    rp = (xi * xip).sum(1) / rho
    rpp = ((xip * xip).sum(1) + (xi * xipp).sum(1)) / rho - (xi * xip).sum(1) ** 2 / rho**3
    L = 0.5 * n * rp / rho
    Lp = 0.5 * n * (rpp / rho - rp**2 / rho**2)
    eye = np.broadcast_to(np.eye(n), (N, n, n))

    theta_t = _plin(-(xi * Xp).sum(1), xip - 2j * rho[:, None] * Xp) + _pquad(1j * rp[:, None, None] * eye)
    theta_tt = _plin(
        -2 * (xip * Xp).sum(1) - (xi * Xpp).sum(1) + 2j * rho * (Xp * Xp).sum(1),
        xipp - 4j * rp[:, None] * Xp - 2j * rho[:, None] * Xpp,
    ) + _pquad(1j * rpp[:, None, None] * eye)
    a_t = _pconst(L, N) + 1j * theta_t
    P = _pmul(a_t, a_t) + _pconst(Lp, N) + 1j * theta_tt

    A0 = field.matrix(t, X)
    A1 = field.grad(t, X)
    A2 = field.hess(t, X)
    theta_i = [_plin(xi[:, i], 2j * rho[:, None] * np.eye(n)[i][None, :]) for i in range(n)]
    for i in range(n):
        for j in range(n):
            a_ij = _plin(A0[:, i, j], A1[:, :, i, j]) + _pquad(0.5 * A2[:, :, :, i, j])
            term = _pmul(theta_i[i], theta_i[j])
            if i == j:
                term = term - _pconst(1j * 2j * rho, N)
            P = P + _pmul(a_ij, term)
    return P


def poly_eval(coef, y):
    """Evaluate ``(N, 5, 5)`` coefficients at ``y`` of shape (N, P, n)."""
    y1 = y[..., 0]
    y2 = y[..., 1] if y.shape[-1] > 1 else np.zeros_like(y1)
    out = np.zeros(y1.shape, dtype=complex)
    for p in range(DEG):
        for q in range(DEG - p):
            out += coef[:, None, p, q] * y1**p * y2**q
    return out


def assemble_poly(frame, beams, coef, col_scale=None, t=0.0, threshold=DEFAULT_THRESHOLD,
                  cap=DEFAULT_CAP, kind="TP"):
    """``<phi_g, P_g'(x - x_g'(t)) phi_g'(t)>`` for every pair, pruned."""
    amp, x, xi, rho = beams.gaussians()
    if col_scale is not None:
        amp = amp * col_scale
    rows, cols, vals, rp, cp = _kernels.poly_pairs(frame.gaussians(), (amp, x, xi, rho), coef, threshold)
    if len(vals) > cap:
        raise SizeOverflow(f"{len(vals)} stored entries exceed cap {cap}")
    return _from_coo(rows, cols, vals, rp, cp, (len(frame), len(x)), t, threshold, kind, 1, frame.index)


# -- beam residual ------------------------------------------------------------------------------


def _fd_weights(order):
    if order == 1:
        return np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    return np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def beam_residual(field, atom, t, sample_points=None, branch="+", tol=1e-10, convention="paper",
                  h=None, return_analytic=False):
    """``sup |T phi(t, x)| / (N(t) |xi(t)|)`` over points near the ray.

    ``T`` is applied with fourth-order central differences in ``t`` and ``x``;
    ``h`` defaults to ``min(1e-3, 2^-k/16)`` so the carrier oscillation is resolved.
    Sample points default to a grid of ``+-3`` beam widths around ``x(t)``.
    """
    n = len(atom.x)
    k = max(0.0, math.log2(atom.rho))
    if h is None:
        h = min(1e-3, 2.0**-k / 16)
    offs = np.arange(-2, 3) * h
    times = np.concatenate([[0.0], t + offs])
    xs, xis, _, _ = evolve_batch(field, atom.x, atom.xi, times, branch, tol, convention)
    Xc, xic = xs[3, 0], xis[3, 0]
    rho_t = float(np.linalg.norm(xic))
    N_t = float(norm_const(rho_t, atom.dx, n))
    if sample_points is None:
        g = np.linspace(-3, 3, 7) / math.sqrt(rho_t)
        grid = np.stack(np.meshgrid(*([g] * n), indexing="ij"), -1).reshape(-1, n)
        sample_points = Xc + grid
    pts = np.atleast_2d(np.asarray(sample_points, float))

    def beam(j, x):
        X, xi = xs[j + 1, 0], xis[j + 1, 0]
        r = np.linalg.norm(xi)
        y = x - X
        return norm_const(r, atom.dx, n) * np.exp(1j * (y @ xi) - r * (y * y).sum(-1))

    w1, w2 = _fd_weights(1), _fd_weights(2)
    utt = sum(w2[j] * beam(j, pts) for j in range(5)) / h**2
    A = field.matrix(t, pts)
    Au = np.zeros(len(pts), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                e = np.zeros(n)
                e[i] = h
                d2 = sum(w2[m] * beam(2, pts + (m - 2) * e) for m in range(5)) / h**2
            else:
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h
                ej[j] = h
                d2 = sum(
                    w1[a] * w1[b] * beam(2, pts + (a - 2) * ei + (b - 2) * ej)
                    for a in range(5) for b in range(5) if w1[a] and w1[b]
                ) / h**2
            Au += A[:, i, j] * d2
    Tphi = utt - Au
    res = float(np.abs(Tphi).max() / (N_t * rho_t))
    if not return_analytic:
        return res
    b = Beams(t, Xc[None], xic[None], np.array([atom.dx]))
    P = beam_polynomial(field, b, branch, convention)
    phi = beam(2, pts)
    exact = poly_eval(P, (pts - Xc)[None])[0] * phi
    return res, float(np.abs(exact).max() / (N_t * rho_t)), pts, Tphi, exact
