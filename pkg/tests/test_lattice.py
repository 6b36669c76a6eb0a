import math

import numpy as np
import pytest

from gaussframe import lattice as lt
from gaussframe.errors import InvalidConfig, SizeOverflow


def test_small_levels_n1():
    lat = lt.build_frequency_lattice(1, 3)
    assert lat.counts()[0] == 2
    assert lat.counts()[2] == 2
    pts = lat.frequencies(2)[:, 0]
    assert (pts > 0).sum() == 1 and (pts < 0).sum() == 1


def exhaustive_greedy_1d(k, step=1e-3):
    """Brute-force maximal packing count of one half-annulus with separation > 2^{k/2}."""
    lo, hi = 2.0 ** (k - 1), 2.0**k
    sep = 2.0 ** (k / 2)
    pts, last = 0, -math.inf
    for x in np.arange(lo, hi, step):
        if x - last > sep:
            pts, last = pts + 1, x
    return pts


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_n1_counts_match_packing_oracle(k):
    lat = lt.build_frequency_lattice(1, k)
    pos = (lat.frequencies(k)[:, 0] > 0).sum()
    # greedy insertion from the midpoint can use at most the left-packed count
    assert 1 <= pos <= exhaustive_greedy_1d(k)


@pytest.mark.parametrize("n,k_max", [(1, 8), (2, 6)])
def test_separation_covering_counting(n, k_max):
    lat = lt.build_frequency_lattice(n, k_max)
    for k in range(k_max + 1):
        assert lt.min_separation(lat, k) > 1.0
        assert lt.covering_radius(lat, k, samples=4000) < 1.0
        assert lat.counts()[k] <= lt.packing_bound(n, k)
        r = np.linalg.norm(lat.frequencies(k), axis=1)
        assert np.all((r >= 2.0 ** (k - 1) * (1 - 1e-12)) & (r < 2.0**k))


def test_n2_k4_bound():
    lat = lt.build_frequency_lattice(2, 4)
    assert lat.counts()[4] <= 100
    assert lt.covering_radius(lat, 4, samples=10_000) < 1.0


def test_deterministic():
    lt._level.cache_clear()
    a = lt.build_frequency_lattice(2, 5)
    lt._level.cache_clear()
    b = lt.build_frequency_lattice(2, 5)
    for k in range(6):
        assert np.array_equal(a.level(k), b.level(k))


def test_spatial_step():
    assert lt.spatial_step(lt.LatticeConfig(eps=0.25, C_eps=1.0), 0) == 1.0
    assert lt.spatial_step(lt.LatticeConfig(eps=0.25, C_eps=1.0), 2) == pytest.approx(0.35355339, rel=1e-8)
    assert lt.spatial_step(lt.LatticeConfig(eps=0.1, C_eps=0.5), 4) == pytest.approx(0.0947323, rel=1e-6)


@pytest.mark.parametrize("kw", [dict(C_eps=4.0), dict(C_eps=5.0), dict(eps=0.0), dict(R=-1.0),
                                dict(k_min=3, k_max=2)])
def test_config_rejects(kw):
    with pytest.raises(InvalidConfig):
        lt.LatticeConfig(**kw)


def test_enumerate_small():
    lat = lt.build_frequency_lattice(1, 3)
    g = lt.enumerate_gamma(lat, lt.LatticeConfig(eps=0.25, C_eps=1.0, R=1.05, k_max=0))
    assert len(g) == 6
    assert sorted({a[0] for a in g.alpha}) == [-1, 0, 1]
    assert len(lt.enumerate_gamma(lat, lt.LatticeConfig(R=0.0, k_max=3))) == 0


def test_enumerate_counts_per_level():
    lat = lt.build_frequency_lattice(1, 3)
    cfg = lt.LatticeConfig(eps=0.25, C_eps=1.0, R=1.0, k_max=3)
    g = lt.enumerate_gamma(lat, cfg)
    for k in range(4):
        dx = lt.spatial_step(cfg, k)
        bound = cfg.R / dx
        per = 2 * (math.ceil(bound) - 1) + 1 if bound == int(bound) else 2 * math.floor(bound) + 1
        assert (g.k == k).sum() == lat.counts()[k] * per


def test_enumerate_order_and_cap():
    lat = lt.build_frequency_lattice(1, 4)
    g = lt.enumerate_gamma(lat, lt.LatticeConfig(R=1.0, k_max=4))
    keys = [(x.k, x.i, x.alpha) for x in g]
    assert keys == sorted(keys)
    with pytest.raises(SizeOverflow):
        lt.enumerate_gamma(lat, lt.LatticeConfig(R=50.0, k_max=4, cap=100))
