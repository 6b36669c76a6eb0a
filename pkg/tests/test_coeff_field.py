import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussframe.coeff_field import (constant, from_callable, identity, make_field, periodic, symbol_gradients,
                                    symbol_q)
from gaussframe.errors import DomainError, NonEllipticField


def test_symbol_trivial():
    assert symbol_q(identity(2), 0.0, np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert symbol_q(constant([[4.0, 0.0], [0.0, 1.0]]), 0.0, np.zeros(2), np.array([1.0, 0.0])) == 2.0


def test_symbol_variable_value():
    f = periodic(2, amp=0.1, wavevector=[1.0, 0.0])
    v = symbol_q(f, 0.0, np.array([math.pi / 2, 0.0]), np.array([1.0, 1.0]))
    assert v == pytest.approx(math.sqrt(2.2), rel=1e-12)


def test_gradients_trivial():
    qx, qxi = symbol_gradients(identity(2), 0.0, np.zeros(2), np.array([0.0, 2.0]))
    assert np.allclose(qx, 0) and np.allclose(qxi, [0.0, 1.0])
    _, qxi = symbol_gradients(constant([[4.0, 0.0], [0.0, 1.0]]), 0.0, np.zeros(2), np.array([1.0, 0.0]))
    assert np.allclose(qxi, [2.0, 0.0])


def fd_gradients(f, t, x, xi, h=1e-4):
    n = len(x)
    gx, gxi = np.zeros(n), np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        gx[i] = (symbol_q(f, t, x + e, xi) - symbol_q(f, t, x - e, xi)) / (2 * h)
        gxi[i] = (symbol_q(f, t, x, xi + e) - symbol_q(f, t, x, xi - e)) / (2 * h)
    return gx, gxi


@given(st.floats(-1, 1), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.5, 5), st.floats(0, 6.2))
def test_gradients_match_finite_differences(t, x1, x2, r, ang):
    f = periodic(2, amp=0.2, wavevector=[1.0, 0.5], rate=0.3)
    x = np.array([x1, x2])
    xi = r * np.array([math.cos(ang), math.sin(ang)])
    qx, qxi = symbol_gradients(f, t, x, xi)
    gx, gxi = fd_gradients(f, t, x, xi)
    scale = max(1.0, np.abs(qx).max(), np.abs(qxi).max())
    assert np.abs(qx - gx).max() <= 1e-5 * scale
    assert np.abs(qxi - gxi).max() <= 1e-5 * scale


@given(st.floats(0.01, 100), st.floats(-3, 3))
def test_homogeneity(c, x1):
    f = periodic(2, amp=0.2)
    x, xi = np.array([x1, 0.4]), np.array([1.3, -0.7])
    assert symbol_q(f, 0.2, x, c * xi) == pytest.approx(c * symbol_q(f, 0.2, x, xi), rel=1e-12)


def test_field_properties(rng):
    f = periodic(2, amp=0.2, wavevector=[1.0, 0.5])
    x = rng.uniform(-3, 3, (200, 2))
    t = rng.uniform(-1, 1, 200)
    A = f.matrix(t, x)
    assert np.abs(A - np.swapaxes(A, -1, -2)).max() <= 1e-12
    xi = rng.standard_normal((200, 2))
    quad = np.einsum("ni,nij,nj->n", xi, A, xi)
    r2 = (xi**2).sum(1)
    C = f.ellipticity_C
    assert np.all(r2 / C <= quad) and np.all(quad <= C * r2)
    _, qxi = symbol_gradients(f, t, x, xi / np.sqrt(r2)[:, None])
    assert np.linalg.norm(qxi, axis=1).max() < C


def test_user_field_gets_fd_gradient():
    f = from_callable(lambda t, x: (1 + 0.1 * np.sin(x[..., 0]))[..., None, None] * np.eye(1), 1)
    g = f.grad(0.0, np.array([[0.3]]))
    assert g[0, 0, 0, 0] == pytest.approx(0.1 * math.cos(0.3), rel=1e-8)


def test_errors():
    with pytest.raises(NonEllipticField):
        constant([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(DomainError):
        make_field("nope", 1)
