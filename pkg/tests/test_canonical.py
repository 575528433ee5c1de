import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from todalab import canonical as cn
from todalab import mobius

DX = 1e-3
SQ = (-1 + 1j) / np.sqrt(2)  # i sqrt(i)


def zero_potential(lo, hi, dx=DX):
    return cn.Potential.from_function(lambda x: 0.0 * x, lo, hi, dx)


@pytest.fixture(scope="module")
def free_H():
    return cn.schrodinger_to_canonical(zero_potential(-1.0, 40.0))[0]


@pytest.fixture(scope="module")
def cos_H():
    return cn.schrodinger_to_canonical(cn.Potential.from_function(np.cos, -1.0, 3.0, DX))[0]


def test_free_hamiltonian_closed_form():
    # u = 1, v = x solve -y'' = 0, so H = (u, v)^t (u, v) with rows ordered (v, u)
    H, T0 = cn.schrodinger_to_canonical(zero_potential(-1.0, 2.0, 1e-2))
    x = H.x
    ref = np.stack([np.stack([x * x, x], -1), np.stack([x, np.ones_like(x)], -1)], -2)
    assert np.allclose(H.values, ref, atol=1e-12)
    assert np.allclose(H.det(), 0.0, atol=1e-12)
    assert np.allclose(mobius.det(T0), 1.0, atol=1e-12)


def test_hamiltonian_validation():
    with pytest.raises(ValueError):
        cn.Hamiltonian(np.array([0.0, 1.0, 3.0]), np.zeros((3, 2, 2)))
    with pytest.raises(ValueError):
        cn.Hamiltonian(np.arange(3.0), np.array([np.diag([1.0, -1.0])] * 3))
    with pytest.raises(ValueError):
        cn.Hamiltonian(np.arange(2.0), np.array([[[1.0, 0.5], [0.0, 1.0]]] * 2))
    clamped = cn.Hamiltonian(np.arange(2.0), np.array([np.diag([1.0, -1e-13])] * 2))
    assert clamped.values[0, 1, 1] == 0.0


def test_V_from_H_free_and_roundtrip():
    H0 = cn.schrodinger_to_canonical(zero_potential(0.0, 1.0))[0]
    assert np.max(np.abs(cn.V_from_H(H0).V)) < 1e-8
    errs = []
    for dx in (2e-3, 1e-3):
        V = cn.Potential.from_function(np.cos, 0.0, 1.0, dx)
        back = cn.V_from_H(cn.schrodinger_to_canonical(V)[0])
        errs.append(np.max(np.abs(back.V - V.V)))
        assert back.flagged.any()
    assert errs[1] < 1e-4
    assert 3.0 < errs[0] / errs[1] < 5.0  # second order
    rich = cn.V_from_H(cn.schrodinger_to_canonical(cn.Potential.from_function(np.cos, 0.0, 1.0, 1e-3))[0], richardson=True)
    assert np.max(np.abs(rich.V - np.cos(rich.x))) < 1e-7


def test_derivative_weights():
    x = np.linspace(0, 1, 201)
    d2, flagged = cn.derivative(np.sin(x), x[1] - x[0], 2, order=4)
    assert np.max(np.abs(d2 + np.sin(x))) < 1e-6
    assert flagged[0] and flagged[-1] and not flagged[100]


def test_free_m_function(free_H):
    assert abs(cn.m_plus_canonical(free_H, 1j) - SQ) < 1e-4
    z = 0.5 + 1j
    assert abs(cn.m_plus_canonical(free_H, z) - 1j * np.sqrt(z)) < 1e-4


def test_constant_half_identity_gives_i():
    H = cn.Hamiltonian.from_function(lambda x: 0.5 * np.eye(2), 0.0, 30.0, 1e-2)
    for z in (1j, 2 + 1j):
        assert abs(cn.m_plus_canonical(H, z) - 1j) < 1e-8


def test_m_minus_of_symmetric_free():
    H = cn.schrodinger_to_canonical(zero_potential(-40.0, 1.0))[0]
    assert abs(cn.m_minus_canonical(H, 1j) - SQ) < 1e-4


def test_short_domain_does_not_converge():
    H = cn.schrodinger_to_canonical(zero_potential(0.0, 1.0))[0]
    with pytest.raises(cn.ConvergenceError) as info:
        cn.m_plus_canonical(H, 1j)
    assert info.value.last_radius > 1e-3


def test_weyl_disks_nest_and_shrink(free_H):
    tr = cn.weyl_disk_trace(free_H, 1j)
    r = tr.radius[np.isfinite(tr.radius)]
    assert np.all(np.diff(r) <= 0)
    d1, d2 = tr.disk(2000), tr.disk(8000)
    assert d1.contains_disk(d2)
    assert d2.center.imag - d2.radius > -1e-12
    # the disk boundary is the image of the real line
    M = tr.matrices[3000]
    d = tr.disk(3000)
    for t in (-2.0, 0.0, 0.7, 5.0):
        w = mobius.mobius_apply(M, t)
        assert abs(abs(w - d.center) - d.radius) < 1e-9 * max(1.0, d.radius)


def test_transfer_unimodular(cos_H):
    for x in (0.5, 2.0, -0.8):
        T = cn.canonical_transfer(cos_H, x, 1 + 1j)
        assert abs(mobius.det(T) - 1) < 1e-12


def test_plain_shift_when_F_is_zero(cos_H):
    res = cn.twisted_shift_flow(cos_H, 0.5, cn.ZeroShift())
    assert np.array_equal(res.H.values, cos_H.values)
    assert np.allclose(res.H.x, cos_H.x - 0.5)
    assert cn.det_characteristic_check(cos_H, 0.5, cn.ZeroShift()) == 0.0


def test_schrodinger_twist_is_potential_shift():
    lo, hi, s = 0.0, 2.5, 0.5
    H = cn.schrodinger_to_canonical(cn.Potential.from_function(np.cos, lo, hi, DX))[0]
    moved = cn.twisted_shift_flow(H, s, cn.SchrodingerShift()).H
    ref = cn.schrodinger_to_canonical(cn.Potential.from_function(lambda x: np.cos(x + s), lo - s, hi - s, DX))[0]
    assert cn.sup_distance(moved, ref) < 1e-6
    assert cn.det_characteristic_check(H, s, cn.SchrodingerShift()) < 1e-8


def test_twisted_shift_group_law(cos_H):
    spec = cn.SchrodingerShift()
    two = cn.twisted_shift_flow(cn.twisted_shift_flow(cos_H, 0.3, spec).H, 0.4, spec).H
    one = cn.twisted_shift_flow(cos_H, 0.7, spec).H
    assert cn.sup_distance(one, two) < 1e-6


def test_rank_two_constant_F():
    H = cn.Hamiltonian.from_function(lambda x: np.diag([1 + x * x, 1.0]), -1.0, 2.0, DX)
    F = cn.ConstantShift([[0.3, 1.2], [-0.7, -0.3]])
    assert cn.det_characteristic_check(H, 0.5, F) < 1e-6
    assert cn.pdets_residual(H, cn.ZeroShift()) < 1e-5


def test_trace_free_and_grid_errors(cos_H):
    with pytest.raises(ValueError):
        cn.twisted_shift_flow(cos_H, 0.3, cn.ConstantShift(np.eye(2)))
    with pytest.raises(cn.GridError):
        cn.twisted_shift_flow(cos_H, 5.0, cn.ZeroShift())


def test_pdets_residuals(cos_H):
    assert cn.pdets_residual(cos_H, cn.SchrodingerShift()) < 1e-4
    # constant S on constant H: dH/ds = -S^t H - H S exactly
    Hc = cn.Hamiltonian.from_function(lambda x: np.array([[2.0, 0.5], [0.5, 1.0]]), -1.0, 1.0, 1e-2)
    assert cn.pdets_residual(Hc, cn.ConstantShift([[0.3, 1.2], [-0.7, -0.3]])) < 1e-3


def test_combined_cocycle_and_generator(cos_H):
    spec = cn.SchrodingerShift()
    z = 1j
    assert np.allclose(cn.combined_cocycle(cos_H, 0.0, z, spec), np.eye(2))
    lhs = cn.combined_cocycle(cos_H, 0.7, z, spec)
    rhs = cn.combined_cocycle(cn.twisted_shift_flow(cos_H, 0.4, spec).H, 0.3, z, spec) @ cn.combined_cocycle(cos_H, 0.4, z, spec)
    assert np.max(np.abs(lhs - rhs)) < 1e-6
    assert cn.interchange_defect(cos_H, 0.4, 0.3, z, spec) < 1e-6
    H0 = cos_H.at(0.0)
    assert np.allclose(cn.generator_C(cos_H, z), z * mobius.JMAT @ H0)
    assert np.allclose(cn.generator_C(cos_H, 0.0, spec), spec.S(cos_H))
    C = cn.generator_C(cos_H, z, spec)
    e = [np.max(np.abs(C - (cn.combined_cocycle(cos_H, h, z, spec) - np.eye(2)) / h)) for h in (0.02, 0.01)]
    assert 1.6 < e[0] / e[1] < 2.4  # first order in h


def test_combined_m_update(free_H):
    spec = cn.SchrodingerShift()
    m = cn.m_plus_canonical(free_H, 1j)
    moved = cn.twisted_shift_flow(free_H, 0.5, spec).H
    pred = mobius.mobius_apply(cn.combined_cocycle(free_H, 0.5, 1j, spec), m)
    assert abs(cn.m_plus_canonical(moved, 1j) - pred) < 1e-4


def test_conjugation_flow(free_H):
    B = np.array([[0.2, 0.5], [-0.3, -0.2]])
    assert np.array_equal(cn.conjugation_flow(free_H, B, 0.0).H.values, free_H.values)
    flow = cn.conjugation_flow(free_H, B, 0.7)
    assert np.all(np.linalg.eigvalsh(flow.H.values) > -1e-12)
    pred = mobius.mobius_apply(flow.cocycle, cn.m_plus_canonical(free_H, 1j))
    assert abs(cn.m_plus_canonical(flow.H, 1j) - pred) < 1e-4
    with pytest.raises(ValueError):
        cn.conjugation_flow(free_H, np.eye(2), 1.0)


def test_twisted_shift_map(cos_H):
    A = cn.jacobi_twist(0.7, 0.2)
    assert cn.twisted_shift_map(cos_H, A, 0) is cos_H
    back = cn.twisted_shift_map(cn.twisted_shift_map(cos_H, A, 1), A, -1)
    assert np.max(np.abs(back.values - cos_H.values)) < 1e-10
    plain = cn.twisted_shift_map(cos_H, cn.ConstantTwist(np.eye(2)), 1)
    assert np.array_equal(plain.values, cos_H.values) and np.allclose(plain.x, cos_H.x - 1)
    with pytest.raises(ValueError):
        cn.ConstantTwist([[1.0, 0.0], [0.0, 2.0]])
    with pytest.raises(ValueError):
        cn.twisted_shift_map(cos_H, lambda H: np.eye(2), -1)


@settings(max_examples=10)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.5, 0.5))
def test_det_second_derivative_is_conjugation_invariant(p, q, t):
    A = np.array([[1.0, p], [0.0, 1.0]]) @ np.array([[np.exp(t), 0.0], [q, np.exp(-t)]])
    V = cn.Potential.from_function(np.cos, 0.0, 0.5, 1e-3)
    H = cn.schrodinger_to_canonical(V)[0]
    moved = cn.conjugate(H, A)
    assert np.max(np.abs(cn.V_from_H(moved).V - cn.V_from_H(H).V)) < 1e-6 * max(1.0, np.abs(A).max() ** 4)


@settings(max_examples=10)
@given(st.floats(0.5, 3.0), st.floats(-0.5, 0.5), st.floats(0.5, 2.0), st.builds(complex, st.floats(-1, 1), st.floats(0.3, 2)))
def test_constant_hamiltonian_transfer_is_unimodular(h11, h12, h22, z):
    h12 = h12 * np.sqrt(h11 * h22)
    H = cn.Hamiltonian.from_function(lambda x: np.array([[h11, h12], [h12, h22]]), 0.0, 2.0, 1e-2)
    T = cn.canonical_transfer(H, 2.0, z)
    assert abs(mobius.det(T) - 1) < 1e-13 * max(1.0, np.abs(T).max() ** 2)
    from scipy.linalg import expm

    assert np.allclose(T, expm(2.0 * z * mobius.JMAT @ H.values[0]), atol=1e-10 * np.abs(T).max())
