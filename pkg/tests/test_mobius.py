import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from todalab import mobius
from todalab.mobius import INF

finite = st.floats(-5, 5, allow_nan=False)
upper = st.builds(complex, finite, st.floats(0.05, 5))


def sl2r(x, y, t):
    """Unimodular real matrix from three parameters."""
    M = np.array([[1.0, x], [0.0, 1.0]]) @ np.array([[math.exp(t), 0.0], [0.0, math.exp(-t)]]) @ np.array([[1.0, 0.0], [y, 1.0]])
    return M


def test_apply_basic_values():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert mobius.mobius_apply(M, 1j) == pytest.approx((1j + 2) / (3j + 4), abs=1e-15)
    assert mobius.mobius_apply(M, INF) == pytest.approx(1 / 3)
    assert mobius.mobius_apply(mobius.JMAT, 0.0) is INF
    with pytest.raises(mobius.DegenerateMatrixError):
        mobius.mobius_apply(np.array([[1.0, 0.0], [1.0, 0.0]]), 0.0)


def test_inverse_and_det():
    M = sl2r(0.3, -1.2, 0.4)
    assert mobius.det(M) == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(mobius.inv(M) @ M, np.eye(2), atol=1e-14)
    stack = np.stack([M, M.T])
    assert np.allclose(mobius.inv(stack) @ stack, np.eye(2), atol=1e-14)


def test_point_vector_roundtrip():
    assert mobius.vector_to_point([2.0, 0.0]) is INF
    assert mobius.vector_to_point(mobius.point_to_vector(0.5 + 2j)) == pytest.approx(0.5 + 2j)
    assert mobius.vector_to_point(mobius.point_to_vector(INF)) is INF


def test_chordal_distance_values():
    # chordal metric 2|w1-w2| / sqrt((1+|w1|^2)(1+|w2|^2)) on the Riemann sphere
    assert mobius.chordal_distance(0.0, INF) == pytest.approx(2.0)
    assert mobius.chordal_distance(1.0, -1.0) == pytest.approx(2.0)
    assert mobius.chordal_distance(1j, 1j) == 0.0


def test_hyperbolic_distance_value():
    # d(i, e^s i) = s
    assert mobius.hyperbolic_distance(1j, math.e * 1j) == pytest.approx(1.0, abs=1e-14)


def test_expm_traceless_matches_series():
    from scipy.linalg import expm

    X = np.array([[0.3, 1.1], [-0.4, -0.3]]) * (1 + 0.5j)
    assert np.allclose(mobius.expm_traceless(X), expm(X), atol=1e-13)
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(mobius.expm_traceless(N), expm(N), atol=1e-15)


@given(finite, finite, st.floats(-1, 1), upper)
def test_sl2r_preserves_upper_half_plane_and_hyperbolic_metric(x, y, t, w):
    M = sl2r(x, y, t)
    v = mobius.mobius_apply(M, w)
    assert v.imag > 0
    w2 = w + 0.3 + 0.2j
    assert mobius.hyperbolic_distance(v, mobius.mobius_apply(M, w2)) == pytest.approx(mobius.hyperbolic_distance(w, w2), rel=1e-7, abs=1e-9)


@given(finite, finite, st.floats(-1, 1), finite, finite, st.floats(-1, 1), upper)
def test_action_is_a_group_action(x1, y1, t1, x2, y2, t2, w):
    A, B = sl2r(x1, y1, t1), sl2r(x2, y2, t2)
    lhs = mobius.mobius_apply(A @ B, w)
    rhs = mobius.mobius_apply(A, mobius.mobius_apply(B, w))
    assert mobius.chordal_distance(lhs, rhs) < 1e-9
