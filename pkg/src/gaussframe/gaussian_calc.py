"""Closed-form Gaussian integrals and an independent quadrature oracle.

All integrals are over R^n of ``e^{i y.eta} e^{-c|y|^2}`` times a polynomial
in ``y + b``.  The oracle integrates the same quantities with QUADPACK's
Fourier-weighted rule and never touches the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import DomainError


@dataclass(frozen=True)
class GaussianIntegralParams:
    c: float
    eta: np.ndarray
    b: np.ndarray = None
    n: int = None

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        n = len(eta) if self.n is None else int(self.n)
        if len(eta) == 1 and n > 1:
            eta = np.full(n, eta[0])
        if len(eta) != n:
            raise DomainError("eta must have length n")
        b = np.zeros(n) if self.b is None else np.atleast_1d(np.asarray(self.b, dtype=float))
        if len(b) != n:
            raise DomainError("b must have length n")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n", n)


def _check(p):
    if not p.c > 0:
        raise DomainError(f"decay c={p.c} must be positive")


def _base(p):
    return (math.pi / p.c) ** (p.n / 2) * math.exp(-float(p.eta @ p.eta) / (4 * p.c))


def gauss_fourier(p):
    """``(pi/c)^{n/2} exp(-|eta|^2/4c)``."""
    _check(p)
    return complex(_base(p))


def gauss_first_moment(p):
    """Vector ``int (y+b) e^{iy.eta - c|y|^2} dy``."""
    _check(p)
    return _base(p) * (1j * p.eta / (2 * p.c) + p.b)


def gauss_second_moment(p):
    """``int |y+b|^2 e^{iy.eta - c|y|^2} dy`` with the trace term ``n/(2c)``."""
    _check(p)
    c, eta, b = p.c, p.eta, p.b
    poly = -(eta @ eta) / (4 * c * c) + 1j * (b @ eta) / c + b @ b + p.n / (2 * c)
    return _base(p) * poly


class Gaussian(NamedTuple):
    """``amp * exp(i freq.(x-center) - decay |x-center|^2)``."""

    amp: complex
    center: np.ndarray
    freq: np.ndarray
    decay: float


class PairProduct(NamedTuple):
    prefactor: complex
    center: np.ndarray
    decay: float
    osc: np.ndarray
    const_phase: float


def gauss_pair_product(g1, g2):
    """Canonical form of ``conj(g1) * g2``.

    ``conj(g1) g2 = prefactor e^{i const_phase} e^{i osc.(x-center) - decay|x-center|^2}``
    """
    r1, r2 = float(g1.decay), float(g2.decay)
    if not (r1 > 0 and r2 > 0):
        raise DomainError("Gaussian decays must be positive")
    x1, x2 = np.asarray(g1.center, float), np.asarray(g2.center, float)
    f1, f2 = np.asarray(g1.freq, float), np.asarray(g2.freq, float)
    c = r1 + r2
    m = (r1 * x1 + r2 * x2) / c
    eta = f2 - f1
    d = x1 - x2
    pref = np.conj(g1.amp) * g2.amp * math.exp(-(r1 * r2 / c) * float(d @ d))
    phase = float(f1 @ x1 - f2 @ x2 + m @ eta)
    return PairProduct(complex(pref), m, c, eta, phase)


def pair_integral(g1, g2):
    """``int conj(g1) g2 dx`` via the canonical form."""
    pp = gauss_pair_product(g1, g2)
    val = gauss_fourier(GaussianIntegralParams(pp.decay, pp.osc))
    return pp.prefactor * np.exp(1j * pp.const_phase) * val


# -- quadrature oracle ---------------------------------------------------------

QUAD_LIMIT = 400


def _half_width(c):
    # e^{-c y^2} < e^{-121} beyond this; a wider box makes QAWO miss the peak
    return 11.0 / math.sqrt(c)


def quad_fourier_1d(env, omega, lo, hi, phase0=0.0, epsabs=0.0, epsrel=1e-13):
    """``int_lo^hi env(y) e^{i(omega y + phase0)} dy`` and the envelope mass.

    Uses QUADPACK's QAWO (cos/sin weights) when ``omega != 0``.
    """
    kw = dict(limit=QUAD_LIMIT, epsabs=epsabs, epsrel=epsrel)
    if omega == 0.0:
        re = integrate.quad(env, lo, hi, **kw)[0]
        im = 0.0
    else:
        kw["limlst"] = 100
        re = integrate.quad(env, lo, hi, weight="cos", wvar=omega, **kw)[0]
        im = integrate.quad(env, lo, hi, weight="sin", wvar=omega, **kw)[0]
    mass = integrate.quad(lambda y: abs(env(y)), lo, hi, limit=QUAD_LIMIT, epsabs=0.0,
                          epsrel=1e-12)[0]
    val = complex(re, im) * complex(math.cos(phase0), math.sin(phase0))
    return val, mass


def _oracle_1d(c, eta, b, power):
    L = _half_width(c)
    return quad_fourier_1d(lambda y: (y + b) ** power * math.exp(-c * y * y), eta, -L, L)


def oracle_fourier(p):
    val, mass = complex(1.0), 1.0
    for d in range(p.n):
        v, m = _oracle_1d(p.c, p.eta[d], 0.0, 0)
        val, mass = val * v, mass * m
    return val, mass


def oracle_first_moment(p):
    parts = [(_oracle_1d(p.c, p.eta[d], p.b[d], 0), _oracle_1d(p.c, p.eta[d], p.b[d], 1))
             for d in range(p.n)]
    vals, masses = [], []
    for d in range(p.n):
        v, m = parts[d][1]
        for e in range(p.n):
            if e != d:
                v *= parts[e][0][0]
                m *= parts[e][0][1]
        vals.append(v)
        masses.append(m)
    return np.array(vals), np.array(masses)


def oracle_second_moment(p):
    zero = [_oracle_1d(p.c, p.eta[d], p.b[d], 0) for d in range(p.n)]
    two = [_oracle_1d(p.c, p.eta[d], p.b[d], 2) for d in range(p.n)]
    val, mass = 0j, 0.0
    for d in range(p.n):
        v, m = two[d]
        for e in range(p.n):
            if e != d:
                v *= zero[e][0]
                m *= zero[e][1]
        val += v
        mass += m
    return val, mass
