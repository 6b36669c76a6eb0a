"""Phase-space index set: frequency directions per dyadic annulus and the
spatial grid attached to each of them.

Level ``k`` holds points ``xi = 2**k * omega`` in the annulus
``2**(k-1) <= |xi| < 2**k``, pairwise separated by more than ``2**(k/2)``
and covering the annulus at that same radius.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidConfig, SizeOverflow

DEFAULT_CAP = 400_000


class FrameIndex(NamedTuple):
    k: int
    i: int
    alpha: tuple


@dataclass(frozen=True)
class FrequencyLattice:
    """Directions ``omega[k]`` of shape ``(|I_k|, n)`` for ``k = 0..k_max``."""

    dim: int
    k_max: int
    omegas: tuple

    def level(self, k):
        return self.omegas[k]

    def frequencies(self, k):
        return self.omegas[k] * 2.0**k

    def counts(self):
        return [len(w) for w in self.omegas]


@dataclass(frozen=True)
class LatticeConfig:
    eps: float = 0.25
    C_eps: float = 1.0
    R: float = 2.0
    k_max: int = 4
    k_min: int = 0
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if not self.C_eps < 4:
            raise InvalidConfig(f"C_eps={self.C_eps} must be < 4 for the spatial step bound")
        if not self.C_eps > 0:
            raise InvalidConfig("C_eps must be positive")
        if not self.eps > 0:
            raise InvalidConfig("eps must be positive")
        if self.R < 0:
            raise InvalidConfig("cutoff radius R must be >= 0")
        if self.k_min < 0 or self.k_max < self.k_min:
            raise InvalidConfig("need 0 <= k_min <= k_max")


def separation(k):
    return 2.0 ** (k / 2.0)


def packing_bound(n, k):
    """Ball-packing bound ``2^n (2^{k/2}+1)^n`` on the level size."""
    return 2**n * (2.0 ** (k / 2.0) + 1.0) ** n


def _candidates(n, k):
    r_lo, r_hi = 2.0 ** (k - 1), 2.0**k
    step = separation(k) / 8.0
    radii = r_lo + step * np.arange(int(math.ceil((r_hi - r_lo) / step)))
    radii = radii[radii < r_hi]
    if n == 1:
        pts = np.concatenate([radii, -radii])[:, None]
    elif n == 2:
        m = max(8, int(math.ceil(2 * math.pi * r_hi / step)))
        ang = 2 * math.pi * np.arange(m) / m
        pts = (radii[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], -1)[None]).reshape(-1, 2)
    else:
        # generic n: cubic grid clipped to the annulus
        ax = np.arange(-r_hi, r_hi + step, step)
        grid = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), -1).reshape(-1, n)
        rr = np.linalg.norm(grid, axis=1)
        pts = grid[(rr >= r_lo) & (rr < r_hi)]
    return pts


def _lex_first(pts, idx):
    sub = pts[idx]
    order = np.lexsort(sub.T[::-1])
    return idx[order[0]]


def _greedy(pts, chosen, sep):
    """Farthest-point insertion of ``pts`` into ``chosen`` while gap > sep."""
    mind, _ = cKDTree(np.asarray(chosen)).query(pts)
    while len(pts):
        top = mind.max()
        if not top > sep:
            break
        tie = np.flatnonzero(mind >= top - 1e-9 * top)
        j = _lex_first(pts, tie)
        p = pts[j]
        chosen.append(p.copy())
        mind = np.minimum(mind, np.linalg.norm(pts - p, axis=1))
    return chosen


def _fine_grid(n, k, factor=4):
    r_lo, r_hi = 2.0 ** (k - 1), 2.0**k
    step = separation(k) / (8.0 * factor)
    if n == 1:
        r = np.arange(r_lo, r_hi, step)
        return np.concatenate([r, -r])[:, None]
    ax = np.arange(-r_hi, r_hi + step, step) + step / 3.0
    grid = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), -1).reshape(-1, n)
    rr = np.linalg.norm(grid, axis=1)
    return grid[(rr >= r_lo) & (rr < r_hi)]


@functools.lru_cache(maxsize=None)
def _level(n, k):
    sep = separation(k)
    seed = np.zeros(n)
    seed[0] = 3.0 * 2.0 ** (k - 2)
    chosen = _greedy(_candidates(n, k), [seed], sep)
    # repair pass on a finer grid so coarse-grid gaps never exceed sep
    chosen = _greedy(_fine_grid(n, k), chosen, sep)
    arr = np.asarray(chosen) / 2.0**k
    arr.setflags(write=False)
    return arr


def build_frequency_lattice(n, k_max):
    """Deterministic greedy packing of every annulus ``k = 0..k_max``."""
    if n < 1 or k_max < 1:
        raise InvalidConfig("need n >= 1 and k_max >= 1")
    return FrequencyLattice(dim=n, k_max=k_max, omegas=tuple(_level(n, k) for k in range(k_max + 1)))


def covering_radius(lattice, k, samples=10_000, seed=0):
    """Max distance (in units of ``2**(k/2)``) from random annulus points to level ``k``."""
    n = lattice.dim
    rng = np.random.default_rng(seed)
    r = 2.0 ** (k - 1) * (1.0 + rng.random(samples))
    d = rng.standard_normal((samples, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    xi = r[:, None] * d
    dist, _ = cKDTree(lattice.frequencies(k)).query(xi)
    return float(dist.max() / separation(k))


def min_separation(lattice, k):
    """Smallest pairwise distance at level ``k`` in units of ``2**(k/2)``."""
    pts = lattice.frequencies(k)
    if len(pts) < 2:
        return math.inf
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min() / separation(k))


def spatial_step(cfg, k):
    """``C_eps * 2**(-k/2 - eps*k)``."""
    if not cfg.C_eps < 4 or not cfg.eps > 0:
        raise InvalidConfig("spatial step needs C_eps < 4 and eps > 0")
    return cfg.C_eps * 2.0 ** (-k / 2.0 - cfg.eps * k)


class FrameIndexSet:
    """Enumerated index set, stored columnwise.

    Iterating yields :class:`FrameIndex` tuples in lexicographic ``(k, i, alpha)``
    order.
    """

    def __init__(self, dim, k, i, alpha):
        self.dim = dim
        self.k = np.asarray(k, dtype=np.int64)
        self.i = np.asarray(i, dtype=np.int64)
        self.alpha = np.asarray(alpha, dtype=np.int64).reshape(-1, dim)

    def __len__(self):
        return len(self.k)

    def __getitem__(self, j):
        return FrameIndex(int(self.k[j]), int(self.i[j]), tuple(int(a) for a in self.alpha[j]))

    def __iter__(self):
        for j in range(len(self)):
            yield self[j]

    def __eq__(self, other):
        return (
            isinstance(other, FrameIndexSet)
            and self.dim == other.dim
            and np.array_equal(self.k, other.k)
            and np.array_equal(self.i, other.i)
            and np.array_equal(self.alpha, other.alpha)
        )

    def position(self):
        """Map FrameIndex -> row."""
        return {g: j for j, g in enumerate(self)}


def _alphas(n, bound):
    """Integer vectors with |alpha| < bound, lexicographic."""
    m = int(math.floor(bound))
    rng = range(-m, m + 1)
    out = [a for a in itertools.product(rng, repeat=n) if math.sqrt(sum(x * x for x in a)) < bound]
    return np.asarray(out, dtype=np.int64).reshape(-1, n)


def enumerate_gamma(lattice, cfg):
    """All ``(k, i, alpha)`` with ``k_min <= k <= k_max`` and ``|dx_k alpha| < R``."""
    if cfg.k_max > lattice.k_max:
        raise InvalidConfig(f"config k_max={cfg.k_max} exceeds lattice k_max={lattice.k_max}")
    n = lattice.dim
    ks, is_, als = [], [], []
    total = 0
    for k in range(cfg.k_min, cfg.k_max + 1):
        dx = spatial_step(cfg, k)
        alph = _alphas(n, cfg.R / dx)
        nk = len(lattice.level(k))
        total += nk * len(alph)
        if total > cfg.cap:
            raise SizeOverflow(f"index set exceeds cap {cfg.cap} at level k={k}")
        if not len(alph):
            continue
        ks.append(np.full(nk * len(alph), k))
        is_.append(np.repeat(np.arange(nk), len(alph)))
        als.append(np.tile(alph, (nk, 1)))
    if not ks:
        return FrameIndexSet(n, [], [], np.zeros((0, n)))
    return FrameIndexSet(n, np.concatenate(ks), np.concatenate(is_), np.concatenate(als))
