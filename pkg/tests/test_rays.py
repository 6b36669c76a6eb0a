import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussframe import rays
from gaussframe.coeff_field import constant, identity, periodic, symbol_q
from gaussframe.errors import DomainError, HorizonExceeded
from gaussframe.rays import PhasePoint


def test_rhs_trivial():
    dx, dxi = rays.ray_rhs(identity(2), PhasePoint(0.0, np.zeros(2), np.array([3.0, 4.0])))
    assert np.allclose(dx, [-0.6, -0.8]) and np.allclose(dxi, 0)
    dx, dxi = rays.ray_rhs(constant([[4.0, 0.0], [0.0, 1.0]]), PhasePoint(0.0, np.zeros(2), np.array([1.0, 0.0])))
    assert np.allclose(dx, [-2.0, 0.0]) and np.allclose(dxi, 0)


def test_standard_convention_flips():
    pt = PhasePoint(0.0, np.zeros(2), np.array([3.0, 4.0]))
    dx, _ = rays.ray_rhs(identity(2), pt, convention="standard")
    assert np.allclose(dx, [0.6, 0.8])
    dxm, _ = rays.ray_rhs(identity(2), pt, branch="-")
    assert np.allclose(dxm, [0.6, 0.8])


def test_rhs_matches_hamiltonian_fd():
    f = periodic(2, amp=0.2, wavevector=[1.0, 0.5])
    x, xi = np.array([0.3, -0.4]), np.array([2.0, 1.0])
    dx, dxi = rays.rhs(f, 0.1, x, xi)
    h = 1e-5
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        qx = (symbol_q(f, 0.1, x + e, xi) - symbol_q(f, 0.1, x - e, xi)) / (2 * h)
        qxi = (symbol_q(f, 0.1, x, xi + e) - symbol_q(f, 0.1, x, xi - e)) / (2 * h)
        assert dx[i] == pytest.approx(-qxi, abs=1e-6)
        assert dxi[i] == pytest.approx(qx, abs=1e-6)


def test_straight_line():
    path = rays.evolve(identity(2), PhasePoint(0.0, np.zeros(2), np.array([4.0, 0.0])), 0.0, 1.0)
    assert np.allclose(path.end.x, [-1.0, 0.0], atol=1e-12)
    assert np.allclose(path.end.xi, [4.0, 0.0])


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 6.2), st.sampled_from([2.0**-5, 0.5, 8.0, 2.0**6]))
def test_scaling_relation(x1, x2, ang, c):
    f = periodic(2, amp=0.2, wavevector=[1.0, 0.5])
    x0 = np.array([[x1, x2]])
    xi0 = 3.0 * np.array([[math.cos(ang), math.sin(ang)]])
    xa, pa, _, _ = rays.evolve_batch(f, x0, xi0, [0.0, 0.8])
    xb, pb, _, _ = rays.evolve_batch(f, x0, c * xi0, [0.0, 0.8])
    assert np.abs(xa[-1] - xb[-1]).max() <= 1e-8
    assert np.abs(c * pa[-1] - pb[-1]).max() <= 1e-8 * np.abs(pb[-1]).max()


def test_inverse_and_conservation(rng):
    f = periodic(2, amp=0.2, wavevector=[1.0, 0.5])
    tol = 1e-10
    x0 = rng.uniform(-1, 1, (30, 2))
    xi0 = rng.standard_normal((30, 2)) * 10
    xs, ps, _, _ = rays.evolve_batch(f, x0, xi0, [0.0, 1.0], tol=tol)
    bx, bp, _, _ = rays.evolve_batch(f, xs[-1], ps[-1], [1.0, 0.0], tol=tol)
    assert np.abs(bx[-1] - x0).max() <= 10 * tol
    assert (np.linalg.norm(bp[-1] - xi0, axis=1) / np.linalg.norm(xi0, axis=1)).max() <= 10 * tol
    path = rays.evolve(f, PhasePoint(0.0, x0[0], xi0[0]), 0.0, 1.0, samples=9)
    assert rays.hamiltonian_drift(f, path) <= 10 * tol


def test_flow_constant():
    CTa, k0, C = rays.flow_constant(identity(1), 1.0, 2.0)
    assert C == 0 and CTa == 2.0 and k0 == 2.0
    CTa, _, C = rays.flow_constant(periodic(1, amp=0.1), 1.0, 2.0)
    assert CTa == pytest.approx(2.0 * math.exp(C))
    with pytest.raises(DomainError):
        rays.flow_constant(identity(1), 1.0, 1.0)


def test_envelope_and_speed(rng):
    f = periodic(2, amp=0.2, wavevector=[1.0, 0.5])
    _, _, C = rays.flow_constant(f, 1.0, 2.0)
    x0 = rng.uniform(-1, 1, (50, 2))
    xi0 = rng.standard_normal((50, 2)) * 5
    ts = np.linspace(0, 1, 5)
    xs, ps, _, _ = rays.evolve_batch(f, x0, xi0, ts)
    for j, t in enumerate(ts):
        ratio = np.linalg.norm(ps[j], axis=1) / np.linalg.norm(xi0, axis=1)
        assert np.all(ratio <= math.exp(C * t) + 1e-12) and np.all(ratio >= math.exp(-C * t) - 1e-12)
        assert np.linalg.norm(xs[j] - x0, axis=1).max() <= f.ellipticity_C * math.sqrt(2) * t + 1e-12


def test_distance_equivalence():
    p = np.array([[0.1, 0.0, 1.0, 0.0]])
    pp = np.array([[0.3, 0.2, 1.0, 0.0]])
    assert rays.distance_equivalence_check(periodic(2), p, pp, 0.0) == (1.0, 1.0)
    d1, d2 = rays.distance_equivalence_check(identity(2), p, pp, 0.7)
    assert d1 == pytest.approx(1.0, abs=1e-12) and d2 == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(3)
    p = np.hstack([rng.uniform(-1, 1, (20, 2)), rng.standard_normal((20, 2))])
    pp = np.hstack([rng.uniform(-1, 1, (20, 2)), rng.standard_normal((20, 2))])
    d1, d2 = rays.distance_equivalence_check(periodic(2, amp=0.2), p, pp, 0.5)
    assert 0 < d1 <= d2 < np.inf


def test_horizon():
    with pytest.raises(HorizonExceeded):
        rays.evolve(identity(1, T=1.0), PhasePoint(0.0, np.zeros(1), np.ones(1)), 0.0, 1.5)
