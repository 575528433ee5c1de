import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from todalab import jacobi as jm

coef_a = st.floats(0.3, 2.0)
coef_b = st.floats(-1.0, 1.0)


@st.composite
def periodic(draw, sizes=(1, 6)):
    N = draw(st.integers(*sizes))
    a = draw(st.lists(coef_a, min_size=N, max_size=N))
    b = draw(st.lists(coef_b, min_size=N, max_size=N))
    return jm.JacobiMatrix(a, b)


def dense_power(J, lo, hi, m):
    return np.linalg.matrix_power(J.block(lo, hi), m)


def test_coefficients_periodic_and_eventually_free():
    J = jm.JacobiMatrix([1.0, 2.0, 3.0], [0.1, 0.2, 0.3], n_lo=-1)
    a, b = J.coefficients([-1, 0, 1, 2, -2])
    assert a.tolist() == [1.0, 2.0, 3.0, 1.0, 3.0]
    assert b.tolist() == [0.1, 0.2, 0.3, 0.1, 0.3]
    E = jm.JacobiMatrix([1.0, 2.0], [0.5, -0.5], n_lo=0, boundary=jm.EventuallyFree(0.5, 0.0))
    a, b = E.coefficients([-3, -1, 0, 1, 2, 10])
    assert a.tolist() == [0.5, 0.5, 1.0, 2.0, 0.5, 0.5]
    assert b.tolist() == [0.0, 0.0, 0.5, -0.5, 0.0, 0.0]


def test_positivity_is_enforced():
    with pytest.raises(jm.PositivityError):
        jm.JacobiMatrix([1.0, 0.0], [0.0, 0.0])
    with pytest.raises(jm.PositivityError):
        jm.JacobiMatrix([1.0], [0.0], boundary=jm.EventuallyFree(-1.0, 0.0))
    with pytest.raises(ValueError):
        jm.JacobiMatrix([1.0, 2.0], [0.0])


def test_block_layout():
    J = jm.JacobiMatrix([1.0, 2.0], [3.0, 4.0])
    assert np.array_equal(J.block(0, 2), [[3.0, 1.0, 0.0], [1.0, 4.0, 2.0], [0.0, 2.0, 3.0]])


def test_dict_roundtrip():
    E = jm.JacobiMatrix([0.7, 1.2, 0.9], [0.3, -0.2, 0.1], n_lo=-1, boundary=jm.EventuallyFree(0.5, 0.0))
    back = jm.JacobiMatrix.from_dict(E.to_dict())
    assert back.boundary == E.boundary and back.n_lo == -1
    assert np.array_equal(back.a, E.a) and np.array_equal(back.b, E.b)
    d = E.to_dict()
    d["n_hi"] = 7
    with pytest.raises(ValueError):
        jm.JacobiMatrix.from_dict(d)


def test_metric_values():
    # sum over |n| <= 65 of 2^-|n| * 0.1 = 0.1 (3 - 2^-64) for period-one matrices
    d = jm.metric(jm.free(0.5), jm.free(0.6))
    assert d == pytest.approx(0.3, abs=1e-15)
    J = jm.JacobiMatrix([1.0, 2.0], [0.0, 0.0])
    assert jm.metric(J, J) == 0.0


def test_shift_conventions():
    J = jm.JacobiMatrix([1.0, 2.0, 3.0], [0.0, 0.5, 1.0])
    S = jm.shift(J, 1)
    assert S.a_at(0) == J.a_at(1) and S.b_at(2) == J.b_at(3)
    assert jm.metric(jm.shift(J, 3), J) == 0.0
    E = jm.JacobiMatrix([1.0, 2.0], [0.0, 0.5], boundary=jm.EventuallyFree(0.5, 0.0))
    assert jm.shift(E, 2).a_at(-2) == 1.0


def test_matrix_powers_against_dense():
    rng = np.random.default_rng(3)
    J = jm.random_periodic(rng, 4)
    P = dense_power(J, -8, 8, 5)
    assert jm.matrix_element_power(J, 0, 0, 5) == pytest.approx(P[8, 8], abs=1e-12)
    assert jm.matrix_element_power(J, 1, 0, 5) == pytest.approx(P[9, 8], abs=1e-12)
    diag, sub = jm.site_powers(J, 0, 4)
    for m in range(5):
        Pm = dense_power(J, -8, 8, m)
        assert diag[m] == pytest.approx(Pm[8, 8], abs=1e-12)
        assert sub[m] == pytest.approx(Pm[9, 8], abs=1e-12)
    assert jm.taylor_c(J, 0) == 1.0
    assert jm.taylor_d(J, 3) == pytest.approx(2 * J.a_at(0) * dense_power(J, -8, 8, 3)[9, 8], abs=1e-12)


def test_free_periodic_spectrum_closed_form():
    # period-N truncation of the constant matrix: b + 2a cos(2 pi k / N)
    N = 6
    J = jm.JacobiMatrix([0.5] * N, [0.1] * N)
    k = np.arange(N)
    assert np.allclose(jm.periodic_spectrum(J), np.sort(0.1 + np.cos(2 * np.pi * k / N)), atol=1e-14)


def test_tridiag_eigenvalues_against_dense():
    rng = np.random.default_rng(5)
    d, e = rng.normal(size=7), rng.uniform(0.2, 1.0, size=6)
    M = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(jm.tridiag_eigenvalues(d, e), np.linalg.eigvalsh(M), atol=1e-13)


def test_toda_x_field_is_the_classical_lattice():
    rng = np.random.default_rng(9)
    J = jm.random_periodic(rng, 5)
    got = jm.antisymmetric_commutator(J, [0, 1])
    ref = jm.classical_toda_rates(J)
    assert np.allclose(got[0], ref[0], atol=1e-14) and np.allclose(got[1], ref[1], atol=1e-14)


def test_constant_polynomial_gives_zero_field():
    J = jm.random_periodic(np.random.default_rng(1), 3)
    adot, bdot = jm.antisymmetric_commutator(J, [2.0])
    assert not adot.any() and not bdot.any()


@given(periodic())
def test_periodic_spectrum_matches_dense(J):
    assert np.allclose(jm.periodic_spectrum(J), np.linalg.eigvalsh(jm.periodic_truncation(J)), atol=1e-12)


@given(periodic(), st.integers(-7, 7))
def test_periodic_spectrum_is_shift_invariant(J, n):
    assert np.allclose(jm.periodic_spectrum(jm.shift(J, n)), jm.periodic_spectrum(J), atol=1e-12)


@given(periodic(), periodic())
def test_metric_is_symmetric_and_nonnegative(J, K):
    assert jm.metric(J, K) == pytest.approx(jm.metric(K, J))
    assert jm.metric(J, K) >= 0


@given(periodic((1, 5)), coef_a, coef_b)
def test_field_depends_only_on_nearby_sites(J, a_inf, b_inf):
    # the x^2 rate at site 0 sees sites -3..3 only: a matrix agreeing on -4..4
    # with arbitrary tails gives the same value
    sites = np.arange(-4, 5)
    a, b = J.coefficients(sites)
    E = jm.JacobiMatrix(a, b, n_lo=-4, boundary=jm.EventuallyFree(a_inf, b_inf))
    got = jm.antisymmetric_commutator(E, [0, 0, 1], sites=[0])
    ref = jm.antisymmetric_commutator(J, [0, 0, 1], sites=[0])
    assert got[0] == pytest.approx(ref[0], abs=1e-12) and got[1] == pytest.approx(ref[1], abs=1e-12)
