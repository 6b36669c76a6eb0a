import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussframe import theta
from gaussframe.errors import DomainError
from gaussframe.theta import ThetaParams as P

# direct summation oracles (mpmath nsum, 30 digits)
THETA_1_0 = 1.77263720482665215
THETA_1_HALF = 1.77227049698437995
WEIGHTED_1_0 = 0.88450897174632323


def test_frozen_values():
    assert theta.theta_sum(P([0.0], 1.0)) == pytest.approx(THETA_1_0, rel=1e-14)
    assert theta.theta_sum(P([0.5], 1.0)) == pytest.approx(THETA_1_HALF, rel=1e-14)
    assert theta.weighted_theta_sum(P([0.0], 1.0)) == pytest.approx(WEIGHTED_1_0, rel=1e-14)


def test_two_dim_value():
    # product of two 1-D nsum values at lambda = 4
    assert theta.theta_sum(P([0.3, 0.1], 4.0)) == pytest.approx(12.5663706143591730, rel=1e-13)


@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([1.0, 4.0, 16.0]))
def test_factorisation(a, b, lam):
    both = theta.theta_sum(P([a, b], lam))
    assert both == pytest.approx(theta.theta_sum(P([a], lam)) * theta.theta_sum(P([b], lam)), rel=1e-12)


@given(st.floats(0, 1), st.integers(-3, 3), st.sampled_from([1.0, 16.0]))
def test_offset_periodicity(e, shift, lam):
    a = theta.theta_sum(P([e], lam))
    assert theta.theta_sum(P([e + shift], lam)) == pytest.approx(a, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("lam", [1.0, 4.0, 16.0, 64.0])
def test_bounds(n, lam):
    sup = theta.sup_over_offsets(lam, n, count=100)
    assert sup <= theta.upper_bound(lam, n)
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert theta.theta_sum(P(rng.random(n), lam)) >= theta.lower_bound(lam, n)


def test_weighted_large_lambda_limit():
    lam = 4096.0
    r = theta.weighted_theta_sum(P([0.0], lam)) / math.sqrt(lam)
    assert r == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-6)


def test_euler_maclaurin_diagnostic():
    for lam in (1.0, 4.0, 64.0):
        s, integral, bound = theta.euler_maclaurin_check(P([0.3, 0.7], lam))
        assert abs(s - integral) <= bound


def test_lambda_below_one_rejected():
    with pytest.raises(DomainError):
        theta.theta_sum(P([0.0], 0.5))
