"""Frame atoms, Gaussian-mixture test functions and the analysis/synthesis maps.

Atoms are
``phi(x) = (|xi| dx / 2 pi)^{n/2} exp(i xi.(x - x_c) - |xi| |x - x_c|^2)``
with ``x_c = dx * alpha`` and ``xi = 2^k omega``.  Inner products are
conjugate-linear in the first slot: ``<u, v> = int conj(u) v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainError, IndexMismatch, OutOfBand
from .lattice import FrameIndex, FrameIndexSet, enumerate_gamma, packing_bound, spatial_step

ANALYSIS_BLOCK = 4096


# -- mixtures ---------------------------------------------------------------------


class GaussianMixture:
    """``f(x) = sum_j a_j exp(i eta_j.(x - y_j) - w_j |x - y_j|^2)``."""

    def __init__(self, amp, center, freq, width):
        amp = np.atleast_1d(np.asarray(amp, dtype=np.complex128))
        center = np.asarray(center, dtype=float)
        if center.ndim == 1:
            center = center.reshape(len(amp), -1)
        freq = np.asarray(freq, dtype=float).reshape(center.shape)
        width = np.atleast_1d(np.asarray(width, dtype=float))
        if not (len(amp) == len(center) == len(width)):
            raise DomainError("mixture arrays must have matching lengths")
        if len(width) and not np.all(width > 0):
            raise DomainError("mixture widths must be positive")
        self.amp, self.center, self.freq, self.width = amp, center, freq, width

    @classmethod
    def zero(cls, n):
        return cls(np.zeros(0), np.zeros((0, n)), np.zeros((0, n)), np.zeros(0))

    @property
    def dim(self):
        return self.center.shape[1]

    def __len__(self):
        return len(self.amp)

    def gaussians(self):
        return self.amp, self.center, self.freq, self.width

    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., n)`` (or ``(...)`` when n=1)."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim < 2 or x.shape[-1] != 1):
            x = x[..., None]
        lead = x.shape[:-1]
        if not len(self):
            return np.zeros(lead, dtype=complex)
        return _kernels.mixture_eval(self.gaussians(), x.reshape(-1, self.dim)).reshape(lead)

    def scaled(self, s):
        return GaussianMixture(self.amp * s, self.center, self.freq, self.width)

    def __add__(self, other):
        return GaussianMixture(
            np.concatenate([self.amp, other.amp]),
            np.concatenate([self.center, other.center]),
            np.concatenate([self.freq, other.freq]),
            np.concatenate([self.width, other.width]),
        )

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def merged(self):
        """Combine terms with bitwise-identical (centre, frequency, width); drop zeros."""
        if not len(self):
            return self
        key = np.hstack([self.center, self.freq, self.width[:, None]])
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        amp = np.zeros(len(uniq), dtype=complex)
        np.add.at(amp, inv.ravel(), self.amp)
        keep = amp != 0
        n = self.dim
        u = uniq[keep]
        return GaussianMixture(amp[keep], u[:, :n], u[:, n:2 * n], u[:, 2 * n])

    def inner(self, other):
        """``int conj(self) other``."""
        if not len(self) or not len(other):
            return 0j
        return complex(_kernels.cross_gram(self.gaussians(), other.gaussians()).sum())

    def norm2(self):
        return float(self.inner(self).real)


# -- frame ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameAtom:
    gamma: FrameIndex
    x: np.ndarray
    xi: np.ndarray
    dx: float
    norm_const: float

    @property
    def rho(self):
        return float(np.linalg.norm(self.xi))

    def as_mixture(self, coeff=1.0):
        return GaussianMixture([self.norm_const * coeff], self.x[None], self.xi[None], [self.rho])


def norm_const(rho, dx, n):
    return (rho * dx / (2 * math.pi)) ** (n / 2)


class Frame:
    """Enumerated atoms stored as arrays aligned with a :class:`FrameIndexSet`."""

    def __init__(self, lattice, cfg, index: Optional[FrameIndexSet] = None):
        self.lattice = lattice
        self.cfg = cfg
        self.index = enumerate_gamma(lattice, cfg) if index is None else index
        n = lattice.dim
        self.dim = n
        idx = self.index
        self.k = idx.k
        steps = np.array([spatial_step(cfg, k) for k in range(cfg.k_max + 1)])
        self.dx = steps[idx.k] if len(idx) else np.zeros(0)
        self.x = self.dx[:, None] * idx.alpha
        if len(idx):
            self.xi = np.stack([lattice.frequencies(k)[i] for k, i in zip(idx.k, idx.i)])
        else:
            self.xi = np.zeros((0, n))
        self.rho = np.linalg.norm(self.xi, axis=1)
        self.norm = norm_const(self.rho, self.dx, n)

    def __len__(self):
        return len(self.index)

    @property
    def k_min(self):
        return self.cfg.k_min

    @property
    def k_max(self):
        return self.cfg.k_max

    def atom(self, j):
        return FrameAtom(self.index[j], self.x[j], self.xi[j], float(self.dx[j]), float(self.norm[j]))

    def gaussians(self):
        return self.norm.astype(complex), self.x, self.xi, self.rho

    def band(self):
        """Frequencies resolved by this frame with room to spare."""
        return 2.0**self.k_min, 2.0 ** (self.k_max - 1)


def atom_eval(atom, x):
    x = np.asarray(x, dtype=float)
    z = x - atom.x
    e = 1j * (z @ atom.xi) - atom.rho * np.sum(z * z, axis=-1)
    return atom.norm_const * np.exp(e)


def atom_norm2(atom):
    """``int |phi|^2 = (dx^2 |xi| / 8 pi)^{n/2}``."""
    n = len(atom.x)
    return (atom.dx**2 * atom.rho / (8 * math.pi)) ** (n / 2)


# -- coefficient sequences ------------------------------------------------------------


class CoeffSequence:
    """Complex coefficients aligned with a frame's index set."""

    def __init__(self, index, values, sobolev_m=0.0):
        values = np.asarray(values, dtype=np.complex128)
        if len(values) != len(index):
            raise IndexMismatch("coefficient vector length differs from index set")
        self.index = index
        self.values = values
        self.sobolev_m = float(sobolev_m)

    def __getitem__(self, gamma):
        return self.values[self.index.position()[gamma]]

    def weighted(self):
        return 2.0 ** (self.index.k * self.sobolev_m) * self.values

    def energy(self):
        w = self.weighted()
        return float(np.vdot(w, w).real)

    def __len__(self):
        return len(self.values)


def analyze(f, frame, m=0.0):
    """``c(gamma) = <phi_gamma, f>`` for a mixture ``f`` (weight applied later)."""
    if f.dim != frame.dim:
        raise DomainError("mixture and frame dimensions differ")
    out = np.zeros(len(frame), dtype=np.complex128)
    if len(f) and len(frame):
        amp, x, xi, rho = frame.gaussians()
        for s in range(0, len(frame), ANALYSIS_BLOCK):
            sl = slice(s, s + ANALYSIS_BLOCK)
            blk = _kernels.cross_gram((amp[sl], x[sl], xi[sl], rho[sl]), f.gaussians())
            out[sl] = blk.sum(axis=1)
    return CoeffSequence(frame.index, out, m)


def synthesize(c, frame):
    """``sum 2^{km} c(gamma) phi_gamma`` as a mixture (zero coefficients dropped)."""
    if c.index is not frame.index and c.index != frame.index:
        raise IndexMismatch("coefficients and frame use different index sets")
    w = c.weighted()
    keep = np.flatnonzero(w != 0)
    return GaussianMixture(w[keep] * frame.norm[keep], frame.x[keep], frame.xi[keep], frame.rho[keep])


def frame_apply(f, frame):
    """``Pi^0 f`` as a mixture."""
    return synthesize(analyze(f, frame, 0.0), frame)


# -- partition of unity ----------------------------------------------------------------


def _all_centres(lattice, k_max):
    centres = np.concatenate([lattice.frequencies(k) for k in range(k_max + 1)])
    ks = np.concatenate([np.full(len(lattice.level(k)), k) for k in range(k_max + 1)])
    return centres, ks


def partition_tail(n, k_max, m, xi_norm):
    """Upper bound for the dropped levels ``k > k_max`` at ``|xi| <= xi_norm``."""
    tail = 0.0
    for k in range(k_max + 1, k_max + 40):
        gap = max(2.0 ** (k - 1) - xi_norm, 0.0)
        term = packing_bound(n, k) * 2.0 ** (2 * k * m) * math.exp(-gap * gap / (2.0 ** (k + 1)))
        tail += term
        if term < 1e-300:
            break
    return tail


def partition_sum(lattice, xi, m=0.0, k_max=None, with_tail=False):
    """``sum_{(i,k)} 2^{2km} exp(-|xi - 2^k w|^2 / (2 |2^k w|))`` for one or many ``xi``."""
    k_max = lattice.k_max if k_max is None else k_max
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    r = np.linalg.norm(xi, axis=1)
    if np.any(r < 0.5) or np.any(r >= 2.0 ** (k_max - 1)):
        raise OutOfBand(f"|xi| must lie in [1/2, 2^{k_max - 1}) for a reliable truncated sum")
    centres, ks = _all_centres(lattice, k_max)
    vals = _kernels.partition_sum(xi, centres, ks, m)
    if with_tail:
        return vals, partition_tail(lattice.dim, k_max, m, float(r.max()))
    return vals


def partition_constants(lattice, m, samples=500, k_max=None, seed=0):
    """Measured ``(C1', C2')`` as inf/sup of ``S(xi)/|xi|^{2m}`` over in-band samples."""
    k_max = lattice.k_max if k_max is None else k_max
    hi = 2.0 ** (k_max - 1)
    r = np.geomspace(0.5, hi, samples, endpoint=False)
    if lattice.dim == 1:
        xi = r[:, None]
    else:
        rng = np.random.default_rng(seed)
        d = rng.standard_normal((samples, lattice.dim))
        xi = r[:, None] * d / np.linalg.norm(d, axis=1, keepdims=True)
    ratio = partition_sum(lattice, xi, m, k_max) / r ** (2 * m)
    return float(ratio.min()), float(ratio.max())


# -- Sobolev norms -----------------------------------------------------------------------


def _pair_quadratic(f):
    """Per pair (i, j): decay C, centre xi0, shift v, log-prefactor and amplitude."""
    a, y, eta, w = f.gaussians()
    n = f.dim
    Ci = 1.0 / (4 * w)
    C = Ci[:, None] + Ci[None, :]
    lin = eta / (2 * w[:, None])
    xi0 = (lin[:, None, :] + lin[None, :, :]) / (2 * C[..., None])
    const = (eta * eta).sum(1) * Ci
    logc = -(const[:, None] + const[None, :]) + C * (xi0 * xi0).sum(-1)
    v = y[:, None, :] - y[None, :, :]
    amp = np.conj(a)[:, None] * a[None, :] * (math.pi**2 / np.outer(w, w)) ** (n / 2)
    return C, xi0, v, logc, amp


def sobolev_norm2(f, m=0.0, nodes=64):
    """``(2 pi)^{-n} int |xi|^{2m} |f^(xi)|^2 d xi``.

    Integer ``m``: shift the contour so the integrand is a Gaussian times a
    polynomial, then Gauss-Hermite is exact.  Other ``m``: ``nodes``-point
    Gauss-Hermite per dimension on the real line.
    """
    if not len(f):
        return 0.0
    n = f.dim
    C, xi0, v, logc, amp = _pair_quadratic(f)
    phase = np.exp(1j * (xi0 * v).sum(-1))
    integer = float(m).is_integer()
    if integer:
        deg = int(m)
        t, wt = np.polynomial.hermite.hermgauss(max(deg + 1, 1))
    else:
        t, wt = np.polynomial.hermite.hermgauss(nodes)
    grids = np.stack(np.meshgrid(*([t] * n), indexing="ij"), -1).reshape(-1, n)
    wts = np.prod(np.stack(np.meshgrid(*([wt] * n), indexing="ij"), -1).reshape(-1, n), axis=1)
    s = 1.0 / np.sqrt(C)
    if integer:
        shift = xi0 + 1j * v / (2 * C[..., None])
        z = shift[..., None, :] + s[..., None, None] * grids
        poly = ((z * z).sum(-1)) ** int(m)
        integral = (poly * wts).sum(-1) * s**n * np.exp(-(v * v).sum(-1) / (4 * C))
    else:
        damp = np.exp(-(v * v).sum(-1) / (4 * C))
        z = xi0[..., None, :] + s[..., None, None] * grids
        u = s[..., None, None] * grids
        integrand = ((z * z).sum(-1)) ** m * np.exp(1j * (u * v[..., None, :]).sum(-1))
        integral = (integrand * wts).sum(-1) * s**n
        # real-line GH cannot resolve strongly oscillating pairs, and they are negligible
        integral = np.where(damp < 1e-18, 0.0, integral)
    total = (amp * np.exp(logc) * phase * integral).sum()
    return float(total.real) / (2 * math.pi) ** n


def check_in_band(f, frame):
    lo, hi = frame.band()
    r = np.linalg.norm(f.freq, axis=1)
    if np.any(r < lo) or np.any(r > hi):
        raise OutOfBand(f"mixture frequencies must lie in [{lo:g}, {hi:g}]")


def frame_ratio(f, frame, m=0.0):
    """``sum |2^{km} c|^2 / ||f||^2_{H^m}``."""
    check_in_band(f, frame)
    c = analyze(f, frame, m)
    return c.energy() / sobolev_norm2(f, m)


# -- continuous-translation comparison ------------------------------------------------------


def continuous_energy(f, lattice, k_min, k_max):
    """Energy with the spatial lattice replaced by its integral.

    ``sum_{(i,k)} (2 pi)^{-n} 2^{-n} int exp(-|xi - xi_c|^2/(2|xi_c|)) |f^(xi)|^2 d xi``
    evaluated in closed form.
    """
    n = f.dim
    C, xi0, v, logc, amp = _pair_quadratic(f)
    total = 0j
    for k in range(k_min, k_max + 1):
        for xc in lattice.frequencies(k):
            rho = float(np.linalg.norm(xc))
            # extra Gaussian factor exp(-|xi - xc|^2/(2 rho)) merged into the pair quadratic
            D = C + 1.0 / (2 * rho)
            cen = (C[..., None] * xi0 + xc / (2 * rho)) / D[..., None]
            extra = -(C * (xi0 * xi0).sum(-1) + (xc @ xc) / (2 * rho)) + D * (cen * cen).sum(-1)
            val = (
                (math.pi / D) ** (n / 2)
                * np.exp(logc + extra - (v * v).sum(-1) / (4 * D))
                * np.exp(1j * (cen * v).sum(-1))
            )
            total += (amp * val).sum()
    return float(total.real) / (2 * math.pi) ** n / 2**n


def discretization_gap(f, frame):
    """``(|discrete - continuous|, pi^n e^{-1}/2 ||f||^2)``."""
    disc = analyze(f, frame, 0.0).energy()
    cont = continuous_energy(f, frame.lattice, frame.k_min, frame.k_max)
    bound = math.pi**frame.dim * math.exp(-1) / 2 * f.norm2()
    return abs(disc - cont), bound


def random_inband_mixture(rng, n, lo, hi, terms=3, spread=(3.0, 6.0), centre=1.0):
    """Random mixture whose terms have ``|eta|`` log-uniform in ``[lo, hi]`` and
    frequency spread ``sqrt(2 w) = |eta| sqrt(2)/a`` with ``a`` in ``spread``."""
    r = np.exp(rng.uniform(math.log(lo), math.log(hi), terms))
    d = rng.standard_normal((terms, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    eta = r[:, None] * d
    w = (r / rng.uniform(*spread, terms)) ** 2
    y = rng.uniform(-centre, centre, (terms, n))
    amp = rng.standard_normal(terms) + 1j * rng.standard_normal(terms)
    return GaussianMixture(amp, y, eta, w)
