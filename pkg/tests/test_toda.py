import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from todalab import jacobi as jm
from todalab import toda

X, X2 = [0, 1], [0, 0, 1]


@st.composite
def periodic(draw):
    N = draw(st.integers(2, 5))
    a = draw(st.lists(st.floats(0.5, 1.5), min_size=N, max_size=N))
    b = draw(st.lists(st.floats(-0.5, 0.5), min_size=N, max_size=N))
    return jm.JacobiMatrix(a, b)


def test_zero_time_is_identity():
    J = jm.random_periodic(np.random.default_rng(0), 3)
    assert toda.lax_flow(J, X, 0.0) is J


def test_constant_matrix_is_stationary():
    J = jm.JacobiMatrix([0.5] * 4, [0.2] * 4)
    K = toda.lax_flow(J, X2, 1.0, 200)
    assert np.allclose(K.a, J.a, atol=1e-15) and np.allclose(K.b, J.b, atol=1e-15)
    ts, A, B = toda.lax_trajectory(J, X, 1.0, 100, every=10)
    assert len(ts) == 11 and np.allclose(A, 0.5) and np.allclose(B, 0.2)


def test_classical_invariants():
    # the x flow is the classical periodic Toda lattice: sum b and
    # sum (b^2 + 2 a^2) are conserved
    J = jm.random_periodic(np.random.default_rng(4), 5)
    K = toda.lax_flow(J, X, 1.0, 2000)
    assert K.b.sum() == pytest.approx(J.b.sum(), abs=1e-12)
    assert (K.b**2 + 2 * K.a**2).sum() == pytest.approx((J.b**2 + 2 * J.a**2).sum(), abs=1e-10)


def test_picard_agrees_with_rk4():
    J = jm.random_periodic(np.random.default_rng(2), 3)
    rk = toda.lax_flow(J, X2, 0.2, 400)
    pic = toda.picard_flow(J, X2, 0.2, iterations=25, nodes=801)
    assert jm.metric(rk, pic) < 1e-6


def test_batch_matches_single():
    rng = np.random.default_rng(8)
    Js = [jm.random_periodic(rng, 3) for _ in range(3)]
    batch = toda.lax_flow_batch(Js, X2, 0.5, 500)
    for J, K in zip(Js, batch):
        single = toda.lax_flow(J, X2, 0.5, 500)
        assert np.allclose(K.a, single.a, atol=1e-14) and np.allclose(K.b, single.b, atol=1e-14)


def test_batch_rejects_mixed_windows():
    with pytest.raises(ValueError):
        toda.lax_flow_batch([jm.free(), jm.JacobiMatrix([1.0, 1.0], [0.0, 0.0])], X, 1.0)


def test_eventually_free_tails_stay_frozen():
    E = jm.JacobiMatrix([0.8, 1.1, 0.7], [0.2, -0.1, 0.0], n_lo=-1, boundary=jm.EventuallyFree(0.5, 0.0))
    K = toda.lax_flow(E, X, 0.5, 500)
    assert K.boundary == E.boundary and K.n_lo == E.n_lo
    assert not np.allclose(K.a, E.a)


def test_isospectrality_and_commutativity():
    J = jm.random_periodic(np.random.default_rng(6), 4)
    assert toda.isospectrality_check(J, X2, 1.0, 2000) < 1e-8
    assert toda.commutativity_check(J, X, X2, 0.5, 1000) < 1e-6
    assert toda.shift_equivariance_check(J, X, 0.5, 1000) < 1e-10


def test_isospectrality_needs_periodic():
    E = jm.JacobiMatrix([1.0], [0.0], boundary=jm.EventuallyFree(0.5, 0.0))
    with pytest.raises(ValueError):
        toda.isospectrality_check(E, X, 0.1)


def test_metric_continuity_probe_is_finite():
    rng = np.random.default_rng(11)
    J = jm.random_periodic(rng, 3)
    K = J.with_window(J.a + 1e-4, J.b)
    r = toda.metric_continuity_probe(J, K, X, 0.5, 500)
    assert 0 < r < 100
    with pytest.raises(ValueError):
        toda.metric_continuity_probe(J, J, X, 0.5)


@settings(max_examples=10)
@given(periodic(), st.sampled_from([X, X2]))
def test_flow_is_reversible(J, p):
    back = toda.lax_flow(toda.lax_flow(J, p, 0.3, 300), p, -0.3, 300)
    assert jm.metric(back, J) < 1e-9


@settings(max_examples=10)
@given(periodic())
def test_flow_preserves_positivity_and_spectrum(J):
    K = toda.lax_flow(J, X2, 0.5, 750)
    assert np.all(K.a > 0)
    assert np.allclose(jm.periodic_spectrum(K), jm.periodic_spectrum(J), atol=1e-8)
