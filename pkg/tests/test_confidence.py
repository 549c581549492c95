import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sourceseek import confidence as cf
from sourceseek.errors import InvalidArgumentError


def test_u_plus_hand_values():
    assert cf.u_plus(0, math.exp(-1)) == pytest.approx(2.0)
    assert cf.u_plus(8, math.exp(-2)) == pytest.approx(4 + 8 + math.sqrt(32))
    assert cf.u_plus(0, 1 - 1e-12) == pytest.approx(0.0, abs=1e-9)


def test_u_minus_hand_values():
    assert cf.u_minus(0, 0.3) == 0.0
    assert cf.u_minus(8, math.exp(-2)) == pytest.approx(8 - math.sqrt(32))
    assert cf.u_minus(1, math.exp(-8)) == 0.0


def test_envelopes_hand_values():
    assert cf.ubar_minus(0, 0.1) == 0.0
    assert cf.ubar_minus(100, math.exp(-2)) == pytest.approx(60.0)
    assert cf.ubar_plus(0, math.exp(-3)) == pytest.approx(14.0)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.2, 1.5])
def test_bad_delta(delta):
    with pytest.raises(InvalidArgumentError):
        cf.u_plus(3, delta)


def test_round_delta():
    assert cf.round_delta(0.05, 256, 1) == pytest.approx(0.05 / 1024)
    assert cf.round_delta(0.05, 256, 2) == pytest.approx(0.05 / 4096)
    with pytest.raises(InvalidArgumentError):
        cf.round_delta(0.05, 256, 0)


def test_pointwise_interval_examples():
    iv = cf.pointwise_interval(0, 1.0, math.exp(-1))
    assert iv == pytest.approx((0.0, 2.0))
    iv = cf.pointwise_interval(8, 2.0, math.exp(-2))
    assert iv.lcb == pytest.approx(1.1716, abs=1e-4)
    assert iv.ucb == pytest.approx(8.8284, abs=1e-4)
    with pytest.raises(InvalidArgumentError):
        cf.pointwise_interval(3, 0.0, 0.1)


def test_vectorised_matches_scalar():
    n = np.array([0, 1, 5, 80, 1000])
    lo, hi = cf.pointwise_interval(n, 2.0, 0.01)
    for i, v in enumerate(n):
        s = cf.pointwise_interval(int(v), 2.0, 0.01)
        assert (lo[i], hi[i]) == pytest.approx(tuple(s))


@given(st.integers(0, 10_000), st.floats(0.1, 100.0), st.floats(1e-9, 0.999))
def test_interval_contains_empirical_rate(n, tau, delta):
    iv = cf.pointwise_interval(n, tau, delta)
    assert iv.contains(n / tau)


@given(st.integers(0, 5000), st.floats(1e-9, 0.99), st.floats(1e-9, 0.99))
def test_monotonicity(n, d1, d2):
    lo_d, hi_d = sorted((d1, d2))
    assert cf.u_plus(n + 1, hi_d) >= cf.u_plus(n, hi_d)
    assert cf.u_minus(n + 1, hi_d) >= cf.u_minus(n, hi_d)
    # smaller delta -> larger log(1/delta) -> wider upper bound
    assert cf.u_plus(n, lo_d) >= cf.u_plus(n, hi_d)


def test_envelope_interval_nests_expected_count():
    e = cf.envelope_interval(50.0, 2.0, 0.01)
    assert e.lcb_bar <= 50.0 <= e.ucb_bar
