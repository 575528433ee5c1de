"""Shift and Toda cocycles, the G/H polynomial calculus and the scalar omega/lambda cocycle.

Conventions follow the transfer matrix of the difference equation: with
``Y(n) = (u_{n+1}, -a_n u_n)`` a solution of ``tau u = z u`` satisfies
``T(n; J) Y(0) = Y(n)``, and ``T(1; J) = A(J)`` uses ``a_1, b_1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from . import mobius
from .jacobi import (
    JacobiMatrix,
    LaxField,
    Stencil,
    antisymmetric_commutator,
    as_poly,
    poly_coeffs,
    shift,
    site_powers,
)
from .toda import check_state, default_steps, lax_flow, rk4_step


class BranchError(ArithmeticError):
    """``m_+ + m_-`` left the upper half plane, so the square root branch is ambiguous."""


def shift_step_matrix(J: JacobiMatrix, z) -> np.ndarray:
    """``A(J) = [[(z - b_1)/a_1, 1/a_1], [-a_1, 0]]`` (stacked if ``z`` is an array)."""
    a1, b1 = J.a_at(1), J.b_at(1)
    z = np.asarray(z, dtype=complex)
    A = np.empty(z.shape + (2, 2), dtype=complex)
    A[..., 0, 0] = (z - b1) / a1
    A[..., 0, 1] = 1.0 / a1
    A[..., 1, 0] = -a1
    A[..., 1, 1] = 0.0
    return A


def step_product(a, b, z) -> np.ndarray:
    """``A(a_k, b_k) ... A(a_1, b_1)`` for coefficient arrays listed in site order."""
    z = np.asarray(z, dtype=complex)
    T = np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2)).copy()
    for ak, bk in zip(np.asarray(a, float), np.asarray(b, float)):
        u = (z - bk) / ak
        top = u[..., None] * T[..., 0, :] + T[..., 1, :] / ak
        T[..., 1, :] = -ak * T[..., 0, :]
        T[..., 0, :] = top
    return T


def shift_cocycle(J: JacobiMatrix, n: int, z) -> np.ndarray:
    """``T(n; J)``: ordered product ``A((n-1).J) ... A(J)``, inverted for ``n < 0``.

    ``A(k.J)`` carries the coefficients of site ``k + 1``, so for ``n >= 1`` the
    product runs over sites ``1..n``; ``T(-n; J) = T(n; (-n).J)^{-1}`` uses
    sites ``1-n..0``.
    """
    n = int(n)
    if n >= 0:
        a, b = J.coefficients(np.arange(1, n + 1))
        return step_product(a, b, z)
    a, b = J.coefficients(np.arange(n + 1, 1))
    return mobius.inv(step_product(a, b, z))


@dataclass(frozen=True)
class GHPolynomials:
    site: int
    G: Polynomial
    H: Polynomial


def _gh_coeffs(coeffs: np.ndarray, diag: np.ndarray, sub: np.ndarray, a_n: float):
    """Coefficient arrays (lowest degree first) of G and H at one site."""
    d = len(coeffs) - 1
    G = np.zeros(max(d, 1))
    H = np.zeros(max(d + 1, 1))
    for k in range(1, d + 1):
        ck = coeffs[k]
        if ck == 0.0:
            continue
        for j in range(k):
            G[k - 1 - j] += ck * diag[j]
        H[k] += ck
        H[0] -= ck * diag[k]
        for j in range(1, k):
            H[k - 1 - j] += 2.0 * ck * a_n * sub[j]
    return G, H


def gh_polynomials(J: JacobiMatrix, p, n: int) -> GHPolynomials:
    """G and H of the polynomial ``p`` at site ``n``, as polynomials in ``z``.

    For ``p = x^k``: ``G = sum_{j<k} z^{k-1-j} (J^j)_{nn}`` and
    ``H = z^k - (J^k)_{nn} + 2 a_n sum_{1<=j<k} z^{k-1-j} (J^j)_{n+1,n}``;
    both extend linearly in ``p``.
    """
    coeffs = poly_coeffs(p)
    d = max(len(coeffs) - 1, 0)
    diag, sub = site_powers(J, n, d)
    G, H = _gh_coeffs(coeffs, diag, sub, J.a_at(n))
    return GHPolynomials(int(n), Polynomial(G), Polynomial(H))


def _assemble_B(z, G0, G1, H1, a0: float, b1: float) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    g0 = P.polyval(z, G0)
    g1 = P.polyval(z, G1)
    h1 = P.polyval(z, H1)
    B = np.empty(z.shape + (2, 2), dtype=complex)
    B[..., 0, 0] = 2.0 * (z - b1) * g1 - h1
    B[..., 0, 1] = 2.0 * g1
    B[..., 1, 0] = -2.0 * a0 * a0 * g0
    B[..., 1, 1] = -B[..., 0, 0]
    return B


def toda_B(J: JacobiMatrix, p, z) -> np.ndarray:
    """Generator ``B_p(J)`` of the Toda cocycle (trace free, polynomial in ``z``)."""
    G0 = gh_polynomials(J, p, 0).G.coef
    gh1 = gh_polynomials(J, p, 1)
    return _assemble_B(z, G0, gh1.G.coef, gh1.H.coef, J.a_at(0), J.b_at(1))


class _BField:
    """``B_p`` evaluated from raw window arrays during integration.

    Leading axes of ``a, b`` are a batch of matrices; the output has shape
    ``batch + z.shape + (2, 2)``.
    """

    def __init__(self, J: JacobiMatrix, p, z):
        c = poly_coeffs(p)
        d = max(len(c) - 1, 0)
        self.d = d
        self.stencil = Stencil(J, -d, 2 + d)
        cp = np.zeros(d + 1)
        cp[: len(c)] = c
        # G_r = sum_j c_{r+1+j} (J^j)_{nn}
        Mg = np.zeros((max(d, 1), d + 1))
        for r in range(d):
            for j in range(d + 1 - r - 1):
                Mg[r, j] = cp[r + 1 + j]
        self.MgT = Mg.T
        self.cdiag = cp.copy()
        self.cdiag[0] = 0.0
        self.Hconst = self.cdiag.copy()
        m = 2 * d + 3
        self.E = np.zeros((m, 2))
        self.E[d, 0] = 1.0
        self.E[d + 1, 1] = 1.0
        z = np.asarray(z, dtype=complex)
        self.zshape = z.shape
        zf = z.reshape(-1)
        self.Zh = zf[:, None] ** np.arange(d + 1)  # (nz, d+1)
        self.Zg = self.Zh[:, : max(d, 1)]
        self.zf = zf

    def __call__(self, a, b):
        d = self.d
        A = self.stencil.block(a, b)
        ab, bb = self.stencil.coefficients(a, b)
        i0, i1 = d, d + 1
        V = np.broadcast_to(self.E, A.shape[:-1] + (2,))
        diag0, diag1, sub1 = [], [], []
        for j in range(d + 1):
            diag0.append(V[..., i0, 0])
            diag1.append(V[..., i1, 1])
            sub1.append(V[..., i1 + 1, 1])
            if j < d:
                V = A @ V
        diag0 = np.stack(diag0, axis=-1)
        diag1 = np.stack(diag1, axis=-1)
        sub1 = np.stack(sub1, axis=-1)
        sub1[..., 0] = 0.0
        a0, a1, b1 = ab[..., i0], ab[..., i1], bb[..., i1]
        G0 = diag0 @ self.MgT
        G1 = diag1 @ self.MgT
        H1 = np.broadcast_to(self.Hconst, diag1.shape).copy()
        H1[..., 0] -= diag1 @ self.cdiag
        if d >= 2:
            H1[..., : d] += 2.0 * a1[..., None] * (sub1 @ self.MgT)
        g0 = G0 @ self.Zg.T
        g1 = G1 @ self.Zg.T
        h1 = H1 @ self.Zh.T
        zb = self.zf - b1[..., None]
        B = np.empty(g0.shape + (2, 2), dtype=complex)
        B[..., 0, 0] = 2.0 * zb * g1 - h1
        B[..., 0, 1] = 2.0 * g1
        B[..., 1, 0] = -2.0 * (a0 * a0)[..., None] * g0
        B[..., 1, 1] = -B[..., 0, 0]
        return B.reshape(B.shape[:-3] + self.zshape + (2, 2))


def _stack_compatible(Js: Sequence[JacobiMatrix]):
    J0 = Js[0]
    for K in Js[1:]:
        if K.size != J0.size or K.n_lo != J0.n_lo or K.boundary != J0.boundary:
            raise ValueError("batched integration needs matrices with identical window and boundary")
    return J0, np.stack([K.a for K in Js]), np.stack([K.b for K in Js])


def integrate_flow_and_cocycle_batch(Js: Sequence[JacobiMatrix], p, t: float, z, steps: int | None = None):
    """Batched :func:`integrate_flow_and_cocycle` for matrices sharing window
    and boundary; returns a list of ``(J_t, T)``."""
    Js = list(Js)
    z = np.asarray(z, dtype=complex)
    eye = np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2))
    if t == 0:
        return [(K, eye.copy()) for K in Js]
    steps = default_steps(t, p) if steps is None else int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    J0, a, b = _stack_compatible(Js)
    h = t / steps
    field = LaxField(J0, p)
    bfield = _BField(J0, p, z)

    def rhs(state):
        a, b, T = state
        check_state(J0, a, b)
        da, db = field(a, b)
        return da, db, bfield(a, b) @ T

    T0 = np.broadcast_to(eye, (len(Js),) + eye.shape).copy()
    state = (a, b, T0)
    for _ in range(steps):
        state = rk4_step(rhs, state, h)
    a, b, T = state
    check_state(J0, a, b)
    if not np.all(np.isfinite(T)):
        raise ArithmeticError("non-finite cocycle values")
    return [(K.with_window(a[i], b[i]), T[i]) for i, K in enumerate(Js)]


def integrate_flow_and_cocycle(J: JacobiMatrix, p, t: float, z, steps: int | None = None):
    """Co-integrate the Lax flow and ``T' = B_p(s.J) T`` with RK4.

    Returns ``((t p).J, T(t p; J))``; ``T`` is stacked along the shape of ``z``.
    """
    return integrate_flow_and_cocycle_batch([J], p, t, z, steps)[0]


@dataclass(frozen=True)
class GroupElement:
    """Element ``(p, n)`` of polynomials x integers; ``p`` acts at time one.

    ``(p, n) . J = p . (n . J)``; the two parts commute.
    """

    p: tuple = ()
    n: int = 0

    def __post_init__(self):
        c = poly_coeffs(self.p if len(self.p) else (0.0,))
        object.__setattr__(self, "p", tuple(float(x) for x in c))
        object.__setattr__(self, "n", int(self.n))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        c = P.polyadd(np.asarray(self.p or (0.0,)), np.asarray(other.p or (0.0,)))
        return GroupElement(tuple(c), self.n + other.n)

    @property
    def has_flow(self) -> bool:
        return len(self.p) > 0

    def label(self) -> str:
        parts = []
        if self.has_flow:
            parts.append("+".join(f"{c:g}x^{k}" for k, c in enumerate(self.p) if c))
        if self.n:
            parts.append(f"S^{self.n}")
        return "*".join(parts) or "e"


def act(g: GroupElement, J: JacobiMatrix, steps: int | None = None) -> JacobiMatrix:
    Jn = shift(J, g.n) if g.n else J
    return lax_flow(Jn, g.p, 1.0, steps) if g.has_flow else Jn


def group_cocycle(J: JacobiMatrix, g: GroupElement, z, steps: int | None = None):
    """``(g.J, T(g; J))`` with ``T((p, n); J) = T(p; n.J) T(n; J)``."""
    return group_cocycle_batch([(J, g)], z, steps)[0]


def _tile(J: JacobiMatrix, size: int) -> JacobiMatrix:
    reps = size // J.size
    return JacobiMatrix(np.tile(J.a, reps), np.tile(J.b, reps), n_lo=J.n_lo, boundary=J.boundary, floor=J.floor)


def group_cocycle_batch(jobs, z, steps: int | None = None, max_period: int = 24):
    """``(g.J, T(g; J))`` for a list of ``(J, g)``.

    Flows with the same polynomial are integrated as one batch.  Periodic
    matrices of different periods are tiled to a common period (their least
    common multiple, if at most ``max_period``) so they can share a batch; the
    flow commutes with the shift, so the tiled window stays periodic and is
    cut back to its original period afterwards.
    """
    z = np.asarray(z, dtype=complex)
    out: list = [None] * len(jobs)
    pre = []
    for J, g in jobs:
        Tn = shift_cocycle(J, g.n, z)
        pre.append((shift(J, g.n) if g.n else J, Tn))
    periods = {Jn.size for (Jn, _), (_, g) in zip(pre, jobs) if g.has_flow and Jn.periodic}
    common = math.lcm(*periods) if periods else 0
    groups: dict = {}
    for k, ((Jn, Tn), (_, g)) in enumerate(zip(pre, jobs)):
        if not g.has_flow:
            out[k] = (Jn, Tn)
            continue
        tiled = Jn.periodic and 0 < common <= max_period
        K = _tile(Jn, common) if tiled else Jn
        groups.setdefault((g.p, K.size, K.n_lo, K.boundary, K.floor), []).append((k, K))
    for (p, *_), members in groups.items():
        res = integrate_flow_and_cocycle_batch([K for _, K in members], p, 1.0, z, steps)
        for (k, K), (Jg, Tp) in zip(members, res):
            N = pre[k][0].size
            if Jg.size != N:
                Jg = Jg.with_window(Jg.a[:N], Jg.b[:N])
            out[k] = (Jg, Tp @ pre[k][1])
    return out


def joint_cocycle_defect(J: JacobiMatrix, g: GroupElement, h: GroupElement, z, steps: int | None = None) -> float:
    """``max |T(gh; J) - T(g; h.J) T(h; J)|`` over entries and ``z``."""
    (_, Tgh), (hJ, Th) = group_cocycle_batch([(J, g * h), (J, h)], z, steps)
    _, Tg = group_cocycle(hJ, g, z, steps)
    return float(np.max(np.abs(Tgh - Tg @ Th)))


@dataclass
class CocycleBattery:
    """Cocycle values over instances ``Js`` and ordered pairs of ``elements``.

    ``acted[i][g]`` is ``(g.J_i, T(g; J_i))`` for every element and product;
    ``defect[i, k, l]`` is the joint cocycle defect of ``(elements[k], elements[l])``.
    """

    elements: list
    z: np.ndarray
    acted: list
    defect: np.ndarray


def joint_cocycle_battery(Js, elements, z, steps: int | None = None) -> CocycleBattery:
    z = np.asarray(z, dtype=complex)
    elements = list(elements)
    needed = list(dict.fromkeys(elements + [g * h for g in elements for h in elements]))
    jobs = [(J, g) for J in Js for g in needed]
    res = group_cocycle_batch(jobs, z, steps)
    acted = [dict() for _ in Js]
    for (J, g), r in zip(jobs, res):
        acted[[id(K) for K in Js].index(id(J))][g] = r
    jobs2 = [(acted[i][h][0], g) for i in range(len(Js)) for g in elements for h in elements]
    res2 = iter(group_cocycle_batch(jobs2, z, steps))
    defect = np.empty((len(Js), len(elements), len(elements)))
    for i in range(len(Js)):
        for k, g in enumerate(elements):
            for l, h in enumerate(elements):
                _, Tg = next(res2)
                Tgh = acted[i][g * h][1]
                Th = acted[i][h][1]
                defect[i, k, l] = np.max(np.abs(Tgh - Tg @ Th))
    return CocycleBattery(elements, z, acted, defect)


def zero_curvature_residual(J: JacobiMatrix, p, z) -> float:
    """Max-entry norm of ``B_p(1.J) A(J) - dA/dt - A(J) B_p(J)``.

    ``dA/dt`` is the chain-rule derivative of ``A`` through the Lax rates
    of ``a_1`` and ``b_1``.
    """
    A = shift_step_matrix(J, z)
    B0 = toda_B(J, p, z)
    B1 = toda_B(shift(J, 1), p, z)
    adot, bdot = antisymmetric_commutator(J, p, sites=[1])
    a1, b1 = J.a_at(1), J.b_at(1)
    z = np.asarray(z, dtype=complex)
    Adot = np.zeros_like(A)
    Adot[..., 0, 0] = -bdot[0] / a1 - (z - b1) * adot[0] / a1**2
    Adot[..., 0, 1] = -adot[0] / a1**2
    Adot[..., 1, 0] = -adot[0]
    return float(np.max(np.abs(B1 @ A - Adot - A @ B0)))


# --- resolvent, omega and lambda --------------------------------------------


def _require_upper(z) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("z must lie in the upper half plane")
    return z


def _dense_resolvent_column(J: JacobiMatrix, z: complex, half_width: int) -> np.ndarray:
    A = J.block(-half_width, half_width).astype(complex)
    A[np.diag_indices_from(A)] -= z
    rhs = np.zeros(2 * half_width + 1, dtype=complex)
    rhs[half_width] = 1.0
    return np.linalg.solve(A, rhs)


def resolvent_g(J: JacobiMatrix, z, method: str = "m", half_width: int = 200) -> complex:
    """``g_0 = <delta_0, (J - z)^{-1} delta_0>``.

    ``method="m"`` uses ``-1/(a_0^2 (m_+ + m_-))``; ``method="dense"`` solves
    on the truncation to ``[-half_width, half_width]`` (independent oracle).
    """
    z = _require_upper(z)
    if method == "dense":
        return complex(_dense_resolvent_column(J, z, half_width)[half_width])
    if method != "m":
        raise ValueError(f"unknown method {method!r}")
    from .herglotz import m_pair

    mp = m_pair(J, z)
    a0 = J.a_at(0)
    return -1.0 / (a0 * a0 * (mp.m_plus + mp.m_minus))


def resolvent_h(J: JacobiMatrix, z, method: str = "m", half_width: int = 200) -> complex:
    """``h_0 = 2 a_0 <delta_1, (J - z)^{-1} delta_0> - 1``.

    Through the Green kernel ``<delta_1, (J-z)^{-1} delta_0> = -a_0 m_+ g_0``,
    which gives ``h_0 = (m_+ - m_-)/(m_+ + m_-)``.
    """
    z = _require_upper(z)
    if method == "dense":
        col = _dense_resolvent_column(J, z, half_width)
        return complex(2.0 * J.a_at(0) * col[half_width + 1] - 1.0)
    if method != "m":
        raise ValueError(f"unknown method {method!r}")
    from .herglotz import m_pair

    mp = m_pair(J, z)
    return (mp.m_plus - mp.m_minus) / (mp.m_plus + mp.m_minus)


def laurent_coefficients_by_contour(J: JacobiMatrix, nmax: int, radius: float | None = None, nodes: int = 256):
    """``c_0..c_nmax`` and ``d_{-1}..d_nmax`` from contour integrals of ``g, h``.

    Trapezoid rule on ``|z| = radius`` with nodes off the real axis; the lower
    half of the circle uses ``g(conj z) = conj g(z)``.  This route only touches
    the resolvent (through m-functions), never matrix powers.
    """
    from .jacobi import operator_norm_bound

    r = 1.5 * operator_norm_bound(J) if radius is None else float(radius)
    theta = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
    zs = r * np.exp(1j * theta)
    g = np.empty(nodes, dtype=complex)
    h = np.empty(nodes, dtype=complex)
    for k, zk in enumerate(zs):
        if zk.imag > 0:
            g[k] = resolvent_g(J, zk)
            h[k] = resolvent_h(J, zk)
        else:
            g[k] = np.conj(resolvent_g(J, np.conj(zk)))
            h[k] = np.conj(resolvent_h(J, np.conj(zk)))
    c = np.array([-np.mean(g * zs ** (n + 1)).real for n in range(nmax + 1)])
    d = np.array([-np.mean(h * zs ** (n + 1)).real for n in range(-1, nmax + 1)])
    return c, d


def series_truncation_identity(J: JacobiMatrix, deg: int, z=None) -> float:
    """Max coefficient gap between ``G^(deg), H^(deg)`` at site 0 and the
    truncated expansions ``[-z^deg g]_+`` and ``[-z^deg h]_+ - c_deg``.

    When ``z`` is given the polynomials are also compared by value there.
    """
    from .jacobi import taylor_c, taylor_d

    if deg < 1:
        raise ValueError("degree must be >= 1")
    gh = gh_polynomials(J, Polynomial([0.0] * deg + [1.0]), 0)
    Gs = np.array([taylor_c(J, deg - 1 - r) for r in range(deg)])
    Hs = np.array([taylor_d(J, deg - 1 - r) for r in range(deg + 1)])
    Hs[0] -= taylor_c(J, deg)
    Gc = np.pad(gh.G.coef, (0, deg - len(gh.G.coef)))
    Hc = np.pad(gh.H.coef, (0, deg + 1 - len(gh.H.coef)))
    resid = max(np.max(np.abs(Gc - Gs)), np.max(np.abs(Hc - Hs)))
    if z is not None:
        resid = max(resid, abs(P.polyval(z, Gc) - P.polyval(z, Gs)), abs(P.polyval(z, Hc) - P.polyval(z, Hs)))
    return float(resid)


def omega(J: JacobiMatrix, p, z) -> complex:
    """``omega_p(J) = -a_0^2 (m_+ + m_-) G_0(z)``."""
    from .herglotz import m_pair

    z = _require_upper(z)
    mp = m_pair(J, z)
    a0 = J.a_at(0)
    return complex(-a0 * a0 * (mp.m_plus + mp.m_minus) * gh_polynomials(J, p, 0).G(z))


def omega_via_resolvent(J: JacobiMatrix, p, z, half_width: int = 200) -> complex:
    """``(G/g)_0`` with ``g_0`` from the dense resolvent oracle."""
    z = _require_upper(z)
    return complex(gh_polynomials(J, p, 0).G(z) / resolvent_g(J, z, method="dense", half_width=half_width))


def _fd_along_flow(fun, J: JacobiMatrix, q, h: float):
    return (fun(lax_flow(J, q, h)) - fun(lax_flow(J, q, -h))) / (2.0 * h)


def omega_symmetry_check(J: JacobiMatrix, p, q, z, fd_step: float = 1e-4) -> float:
    """``|d/dt omega_p(tq.J) - d/dt omega_q(tp.J)|`` at ``t = 0`` (central differences)."""
    z = _require_upper(z)
    lhs = _fd_along_flow(lambda K: omega(K, p, z), J, q, fd_step)
    rhs = _fd_along_flow(lambda K: omega(K, q, z), J, p, fd_step)
    return float(abs(lhs - rhs))


def evolg_residual(J: JacobiMatrix, q, z, fd_step: float = 1e-4) -> float:
    """``|g' - 2 g (omega_q h - H^(q))|`` at site 0 along the q-flow."""
    z = _require_upper(z)
    gdot = _fd_along_flow(lambda K: resolvent_g(K, z), J, q, fd_step)
    g = resolvent_g(J, z)
    h = resolvent_h(J, z)
    Hq = gh_polynomials(J, q, 0).H(z)
    return float(abs(gdot - 2.0 * g * (omega(J, q, z) * h - Hq)))


def conjugation_matrix(m_plus: complex, m_minus: complex) -> np.ndarray:
    """``V = (m_+ + m_-)^{-1/2} [[m_+, -m_-], [1, 1]]`` with the root in the upper half plane."""
    s = m_plus + m_minus
    if not s.imag > 0:
        raise BranchError(f"m_+ + m_- = {s} is not in the upper half plane")
    r = np.sqrt(complex(s))  # principal root of a point in C+ lies in the first quadrant
    return np.array([[m_plus, -m_minus], [1.0, 1.0]], dtype=complex) / r


@dataclass(frozen=True)
class LambdaResult:
    lam: complex
    T: np.ndarray
    J_end: JacobiMatrix
    V_start: np.ndarray
    V_end: np.ndarray

    @property
    def conjugation_defect(self) -> float:
        D = np.diag([self.lam, 1.0 / self.lam])
        return float(np.max(np.abs(self.T - self.V_end @ D @ mobius.inv(self.V_start))))


def lambda_cocycle(J: JacobiMatrix, p, z, t: float = 1.0, steps: int | None = None) -> LambdaResult:
    """Integrate ``lambda' = omega_p(sp.J) lambda`` together with the flow and ``T``."""
    from .herglotz import m_pair

    z = _require_upper(z)
    mp0 = m_pair(J, z)
    V0 = conjugation_matrix(mp0.m_plus, mp0.m_minus)
    steps = default_steps(t, p) if steps is None else int(steps)
    h = t / steps
    field = LaxField(J, p)
    bfield = _BField(J, p, z)
    coeffs = poly_coeffs(p)
    d = max(len(coeffs) - 1, 0)

    def rhs(state):
        a, b, T, lam = state
        check_state(J, a, b)
        K = J.with_window(a, b)
        mp = m_pair(K, z)
        s = mp.m_plus + mp.m_minus
        if not s.imag > 0:
            raise BranchError("m_+ + m_- left the upper half plane during integration")
        diag0, _ = site_powers(K, 0, d)
        G0, _ = _gh_coeffs(coeffs, diag0, diag0, K.a_at(0))
        om = -K.a_at(0) ** 2 * s * P.polyval(z, G0)
        da, db = field(a, b)
        return da, db, bfield(a, b) @ T, om * lam

    state = (J.a.copy(), J.b.copy(), np.eye(2, dtype=complex), np.array(1.0 + 0j))
    for _ in range(steps):
        state = rk4_step(rhs, state, h)
    a, b, T, lam = state
    Jt = J.with_window(a, b)
    mp1 = m_pair(Jt, z)
    V1 = conjugation_matrix(mp1.m_plus, mp1.m_minus)
    return LambdaResult(complex(lam), T, Jt, V0, V1)


def lambda_multiplicativity_defect(J: JacobiMatrix, p, q, z, steps: int | None = None) -> float:
    """``|lambda(p+q; J) - lambda(p; q.J) lambda(q; J)|``."""
    pq = P.polyadd(np.asarray(as_poly(p).coef), np.asarray(as_poly(q).coef))
    lam_sum = lambda_cocycle(J, pq, z, steps=steps).lam
    rq = lambda_cocycle(J, q, z, steps=steps)
    lam_p = lambda_cocycle(rq.J_end, p, z, steps=steps).lam
    return float(abs(lam_sum - lam_p * rq.lam))


def monomial(k: int) -> Polynomial:
    return Polynomial([0.0] * k + [1.0])


__all__ = [name for name in dir() if not name.startswith("_") and name not in {"annotations", "math"}]
