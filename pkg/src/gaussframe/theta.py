"""Gaussian sums over the integer lattice and their elementary bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class ThetaParams:
    eps0: np.ndarray
    lam: float
    n: int = None

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.eps0, dtype=float))
        n = len(e) if self.n is None else int(self.n)
        if len(e) == 1 and n > 1:
            e = np.full(n, e[0])
        if len(e) != n:
            raise DomainError("offset must have length n")
        object.__setattr__(self, "eps0", e)
        object.__setattr__(self, "n", n)


def _check(p):
    if not p.lam >= 1:
        raise DomainError(f"lambda={p.lam} < 1; the bounds are only claimed for lambda >= 1")


def truncation_radius(lam, n):
    """Box half-width so the dropped tail is below ``TAIL_TOL``."""
    return int(math.ceil(math.sqrt(lam * math.log((2 * math.pi * lam) ** (n / 2) / TAIL_TOL)))) + 1


def theta_sum(p):
    """``sum_alpha exp(-|alpha - eps0|^2 / lambda)``."""
    _check(p)
    return _kernels.theta_box(p.eps0, p.lam, truncation_radius(p.lam, p.n))


def weighted_theta_sum(p):
    """``sum_alpha (|alpha - eps0|^2/lambda) exp(-|alpha - eps0|^2 / lambda)``."""
    _check(p)
    # the weight grows the tail by at most a factor of the log term, one extra shell covers it
    return _kernels.theta_box(p.eps0, p.lam, truncation_radius(p.lam, p.n) + 1, weighted=True)


def upper_bound(lam, n):
    return (2 * math.pi * lam) ** (n / 2)


def lower_bound(lam, n):
    """Nearest lattice point contributes at least ``e^{-n/(4 lambda)}``."""
    return math.exp(-n / (4 * lam))


def euler_maclaurin_check(p):
    """Compare a 1-D sum with its integral ``sqrt(pi lambda)``.

    Returns ``(sum, integral, remainder_bound)``; the derivative-based
    remainder for the Gaussian is at most ``sqrt(pi/(2 lambda))`` per
    coordinate, so ``|sum - integral| <= remainder_bound`` is expected.
    """
    _check(p)
    vals = [theta_sum(ThetaParams([e], p.lam)) for e in p.eps0]
    s = float(np.prod(vals))
    integral = math.sqrt(math.pi * p.lam) ** p.n
    per = math.sqrt(math.pi * p.lam)
    rem = math.sqrt(math.pi / (2 * p.lam))
    # product of n factors each within rem of per
    bound = (per + rem) ** p.n - per**p.n
    return s, integral, bound


def sup_over_offsets(lam, n, count=100, seed=0, weighted=False):
    """Max of the (weighted) sum over random offsets in ``[0,1)^n``."""
    rng = np.random.default_rng(seed)
    fn = weighted_theta_sum if weighted else theta_sum
    return max(fn(ThetaParams(rng.random(n), lam)) for _ in range(count))
