"""Canonical systems ``J u' = -z H u`` on uniform grids.

Hamiltonians are sampled at the nodes of a uniform grid that contains
``x = 0`` and are treated as piecewise constant on cells, with the cell
value taken as the average of its two end nodes.  Transfer matrices over a
cell are exact exponentials of the trace free generator ``z J H dx``.
Half-line m-functions follow the vector/point identification:
``m_+`` is the point of the solution square integrable at ``+inf``
(evaluated at 0), ``-m_-`` the point of the one square integrable at
``-inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import mobius
from .mobius import JMAT, expm_traceless

#: eigenvalues of H in [-PSD_FLOOR * scale, 0) are clamped to zero
PSD_FLOOR = 1e-12


class ConvergenceError(RuntimeError):
    """Weyl disks did not shrink below the requested radius on the grid."""

    def __init__(self, message: str, last_radius: float):
        super().__init__(message)
        self.last_radius = last_radius


class GridError(ValueError):
    """A requested point or shift does not land on the grid."""


def _uniform_step(x: np.ndarray) -> float:
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("grid needs at least two nodes")
    d = np.diff(x)
    h = float(d.mean())
    if h <= 0 or np.max(np.abs(d - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("grid must be uniform and increasing")
    return h


def _node_index(x: np.ndarray, dx: float, x0: float) -> int:
    k = int(round((x0 - x[0]) / dx))
    if k < 0 or k >= len(x) or abs(x[k] - x0) > 1e-8 * max(dx, 1.0):
        raise GridError(f"x = {x0} is not a grid node")
    return k


def _steps(dx: float, s: float) -> int:
    n = int(round(s / dx))
    if abs(n * dx - s) > 1e-8 * max(dx, 1.0):
        raise GridError(f"shift {s} is not a multiple of the grid step {dx}")
    return n


@dataclass(frozen=True, eq=False)
class Potential:
    x: np.ndarray
    V: np.ndarray
    flagged: np.ndarray | None = None  # nodes computed with one-sided stencils

    def __post_init__(self):
        x = np.asarray(self.x, float)
        V = np.asarray(self.V, float)
        if x.shape != V.shape:
            raise ValueError("x and V must have the same shape")
        if not np.all(np.isfinite(V)):
            raise ValueError("potential values must be finite")
        _uniform_step(x)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "V", V)

    @property
    def dx(self) -> float:
        return _uniform_step(self.x)

    @classmethod
    def from_function(cls, f: Callable, x0: float, x1: float, dx: float) -> "Potential":
        n = int(round((x1 - x0) / dx))
        x = x0 + dx * np.arange(n + 1)
        return cls(x, np.asarray(f(x), float) * np.ones_like(x))


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    x: np.ndarray
    values: np.ndarray  # (nodes, 2, 2)

    def __post_init__(self):
        x = np.asarray(self.x, float)
        H = np.array(self.values, dtype=float)
        if H.shape != (len(x), 2, 2):
            raise ValueError("values must have shape (len(x), 2, 2)")
        if not np.all(np.isfinite(H)):
            raise ValueError("non-finite Hamiltonian values")
        _uniform_step(x)
        scale = np.maximum(1.0, np.abs(H).max(axis=(1, 2)))
        if np.any(np.abs(H[:, 0, 1] - H[:, 1, 0]) > 1e-12 * scale):
            raise ValueError("H must be symmetric")
        off = 0.5 * (H[:, 0, 1] + H[:, 1, 0])
        H[:, 0, 1] = H[:, 1, 0] = off
        lo = _min_eigenvalue(H)
        if np.any(lo < -PSD_FLOOR * scale):
            k = int(np.argmin(lo / scale))
            raise ValueError(f"H is not positive semidefinite at x = {x[k]} (eigenvalue {lo[k]:.3g})")
        # below roundoff the computed eigenvalue carries no sign information;
        # re-clamping there would perturb exact rank-one data on every copy
        bad = lo < -8 * np.finfo(float).eps * scale
        if np.any(bad):
            H[bad] = _clamp_psd(H[bad])
        H.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", H)

    @property
    def dx(self) -> float:
        return _uniform_step(self.x)

    @property
    def origin(self) -> int:
        return _node_index(self.x, self.dx, 0.0)

    def index(self, x0: float) -> int:
        return _node_index(self.x, self.dx, x0)

    def at(self, x0: float) -> np.ndarray:
        return self.values[self.index(x0)]

    def det(self) -> np.ndarray:
        H = self.values
        return H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] ** 2

    def restrict(self, x0: float, x1: float) -> "Hamiltonian":
        i, j = self.index(x0), self.index(x1)
        return Hamiltonian(self.x[i : j + 1], self.values[i : j + 1])

    @classmethod
    def from_function(cls, f: Callable, x0: float, x1: float, dx: float) -> "Hamiltonian":
        n = int(round((x1 - x0) / dx))
        x = x0 + dx * np.arange(n + 1)
        return cls(x, np.array([f(t) for t in x], dtype=float))


def _min_eigenvalue(H: np.ndarray) -> np.ndarray:
    a, b, c = H[..., 0, 0], H[..., 0, 1], H[..., 1, 1]
    return 0.5 * (a + c) - np.hypot(0.5 * (a - c), b)


def _clamp_psd(H: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(H)
    w = np.maximum(w, 0.0)
    return np.einsum("...ij,...j,...kj->...ik", Q, w, Q)


@dataclass(frozen=True)
class WeylDisk:
    """Image ``M(closed C+)`` of a closed half plane under ``M = T_1^{-1}``.

    ``kind`` is ``"disk"`` (closed disk), ``"complement"`` (exterior of the
    circle plus infinity) or ``"half-plane"``; for half planes ``center`` is
    nan and ``radius`` inf.  ``contains`` works in every case.
    """

    center: complex
    radius: float
    kind: str
    matrix: np.ndarray = field(repr=False, compare=False)  # disk = matrix(closed C+)

    def contains(self, w: complex, tol: float = 1e-12) -> bool:
        t = mobius.mobius_apply(np.linalg.inv(self.matrix), w)
        return t is mobius.INF or complex(t).imag >= -tol

    def contains_disk(self, other: "WeylDisk", tol: float = 1e-12) -> bool:
        if self.kind == "half-plane" or other.kind != "disk":
            if other.kind != "disk":
                return self.kind == "half-plane" and other.kind == "half-plane"
            return all(self.contains(other.center + other.radius * np.exp(1j * th), tol) for th in np.linspace(0, 2 * np.pi, 16))
        return abs(other.center - self.center) + other.radius <= self.radius + tol * max(1.0, self.radius)


def disk_from_matrix(M: np.ndarray, lower: bool = False) -> WeylDisk:
    """Center/radius of ``M(closed C+)`` (or of ``M(closed C-)`` with ``lower``)."""
    M = np.asarray(M, dtype=complex)
    if lower:
        M = M @ np.diag([-1.0, 1.0])
    al, be, ga, de = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    K = (ga * np.conj(de)).imag
    scale = abs(ga) * abs(de)
    if scale == 0 or abs(K) <= 1e-14 * scale:
        return WeylDisk(complex("nan"), math.inf, "half-plane", M)
    center = (al * np.conj(de) - be * np.conj(ga)) / (2j * K)
    radius = abs(al * de - be * ga) / (2.0 * abs(K))
    pole = -de / ga  # preimage of infinity
    kind = "disk" if pole.imag < 0 else "complement"
    return WeylDisk(complex(center), float(radius), kind, M)


# --- Schrodinger to canonical -------------------------------------------------


def _midpoints(f: np.ndarray) -> np.ndarray:
    """Cubic interpolation of node values to cell midpoints (leading axis)."""
    f = np.asarray(f)
    n = len(f)
    if n < 4:
        return 0.5 * (f[:-1] + f[1:])
    mid = np.empty((n - 1,) + f.shape[1:], dtype=f.dtype)
    mid[1:-1] = (-f[:-3] + 9 * f[1:-2] + 9 * f[2:-1] - f[3:]) / 16.0
    mid[0] = (5 * f[0] + 15 * f[1] - 5 * f[2] + f[3]) / 16.0
    mid[-1] = (5 * f[-1] + 15 * f[-2] - 5 * f[-3] + f[-4]) / 16.0
    return mid


def _rk4_nodes(G: np.ndarray, Gmid: np.ndarray, dx: float, start: int, stop: int) -> np.ndarray:
    """Solve ``T' = G(x) T`` on nodes ``start..stop`` (either direction), ``T(start) = I``.

    Returns the solution at those nodes, ordered from ``start``.
    """
    step = 1 if stop >= start else -1
    h = step * dx
    T = np.eye(2)
    out = [T]
    for k in range(start, stop, step):
        g0, g1 = G[k], G[k + step]
        gm = Gmid[min(k, k + step)]
        k1 = g0 @ T
        k2 = gm @ (T + 0.5 * h * k1)
        k3 = gm @ (T + 0.5 * h * k2)
        k4 = g1 @ (T + h * k3)
        T = T + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(T)
    return np.array(out)


def _solve_from_origin(G: np.ndarray, dx: float, origin: int) -> np.ndarray:
    Gmid = _midpoints(G)
    n = len(G)
    T = np.empty((n, 2, 2))
    T[origin:] = _rk4_nodes(G, Gmid, dx, origin, n - 1)
    T[: origin + 1] = _rk4_nodes(G, Gmid, dx, origin, 0)[::-1]
    return T


def schrodinger_to_canonical(V: Potential) -> tuple[Hamiltonian, np.ndarray]:
    """``H = [[p^2, pq], [pq, q^2]]`` with ``(p, q)`` the bottom row of ``T_0``.

    ``T_0' = [[0, V], [1, 0]] T_0``, ``T_0(0) = I`` (z = 0 solution matrix of
    ``-y'' + V y = z y`` acting on ``(y', y)``), integrated by RK4 on the
    potential's grid with cubic midpoint interpolation of ``V``.  The grid
    must contain 0.  Returns the Hamiltonian and ``T_0`` at every node.
    """
    dx = V.dx
    origin = _node_index(V.x, dx, 0.0)
    G = np.zeros((len(V.x), 2, 2))
    G[:, 0, 1] = V.V
    G[:, 1, 0] = 1.0
    T0 = _solve_from_origin(G, dx, origin)
    p, q = T0[:, 1, 0], T0[:, 1, 1]
    H = np.empty_like(T0)
    H[:, 0, 0] = p * p
    H[:, 0, 1] = H[:, 1, 0] = p * q
    H[:, 1, 1] = q * q
    return Hamiltonian(V.x, H), T0


# --- finite differences -------------------------------------------------------


def _fd_weights(offsets, deriv: int) -> np.ndarray:
    """Weights ``w`` with ``sum w_j f(x + o_j h) = h^deriv f^(deriv)(x) + ...``."""
    o = np.asarray(offsets, float)
    A = np.vander(o, increasing=True).T
    rhs = np.zeros(len(o))
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(A, rhs)


def derivative(f: np.ndarray, dx: float, deriv: int, order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """``deriv``-th derivative along the leading axis; returns values and a
    mask of nodes that needed one-sided stencils."""
    f = np.asarray(f, float)
    n = len(f)
    half = (deriv + order - 1) // 2
    width = 2 * half + 1
    if n < width + 1:
        raise ValueError("grid too short for the requested stencil")
    out = np.empty_like(f)
    flagged = np.zeros(n, dtype=bool)
    w = _fd_weights(np.arange(-half, half + 1), deriv)
    core = sum(wj * f[j : n - 2 * half + j] for j, wj in enumerate(w))
    out[half : n - half] = core
    one_sided = np.arange(deriv + order)
    for k in range(half):
        wl = _fd_weights(one_sided - k, deriv)
        out[k] = np.tensordot(wl, f[: len(one_sided)], axes=1)
        out[n - 1 - k] = np.tensordot(wl, f[::-1][: len(one_sided)], axes=1) * (-1) ** deriv
        flagged[k] = flagged[n - 1 - k] = True
    return out / dx**deriv, flagged


def V_from_H(H: Hamiltonian, richardson: bool = False) -> Potential:
    """``V = det(H'')/4`` with finite-difference second derivatives.

    Three-point central differences by default; ``richardson`` combines the
    steps ``dx`` and ``2 dx`` (the five-point fourth-order stencil).  Nodes
    near the ends use one-sided stencils of the same order and are listed in
    ``flagged``.
    """
    d2, flagged = derivative(H.values, H.dx, 2, 4 if richardson else 2)
    det = d2[:, 0, 0] * d2[:, 1, 1] - d2[:, 0, 1] * d2[:, 1, 0]
    return Potential(H.x, 0.25 * det, flagged)


# --- transfer matrices and Weyl disks -----------------------------------------


def _cell_values(H: Hamiltonian) -> np.ndarray:
    v = H.values
    return 0.5 * (v[:-1] + v[1:])


def _cell_exponentials(H: Hamiltonian, z: complex) -> np.ndarray:
    return expm_traceless(complex(z) * H.dx * (JMAT @ _cell_values(H)))


def _chain(E) -> list:
    """Partial products ``E_{k-1} ... E_0`` (``k = 0..len(E)``) as nested tuples."""
    a, b, c, d = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    out = [(a, b, c, d)]
    for (e11, e12), (e21, e22) in E.tolist():
        a, b, c, d = e11 * a + e12 * c, e11 * b + e12 * d, e21 * a + e22 * c, e21 * b + e22 * d
        out.append((a, b, c, d))
    return out


def transfer_trajectory(H: Hamiltonian, z, direction: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """``T_1(x)`` at every node on one side of the origin.

    ``direction = +1``: nodes ``0, dx, 2dx, ...``; ``-1``: nodes ``0, -dx, ...``.
    Returns ``(x, T)`` with ``T`` of shape ``(n, 2, 2)``.
    """
    o = H.origin
    E = _cell_exponentials(H, z)  # non-finite past overflow
    if direction > 0:
        cells, xs = E[o:], H.x[o:]
    else:
        # moving left through cell k multiplies by its inverse
        cells, xs = mobius.inv(E[:o][::-1]), H.x[: o + 1][::-1]
    T = np.array(_chain(cells), dtype=complex).reshape(-1, 2, 2)
    return xs, T


def canonical_transfer(H: Hamiltonian, x: float, z) -> np.ndarray:
    """``T_1(x, z; H)``: ``dT_1/dx = z J H T_1``, ``T_1(0) = I``."""
    k = H.index(x) - H.origin
    if k == 0:
        return np.eye(2, dtype=complex)
    lo, hi = (H.origin, H.origin + k) if k > 0 else (H.origin + k, H.origin)
    span = Hamiltonian(H.x[lo : hi + 1], H.values[lo : hi + 1])
    xs, T = transfer_trajectory(span, z, 1 if k > 0 else -1)
    return T[abs(k)]


@dataclass(frozen=True)
class DiskTrace:
    x: np.ndarray
    center: np.ndarray
    radius: np.ndarray
    kind: np.ndarray
    matrices: np.ndarray  # M with disk = M(closed C+)

    def disk(self, k: int) -> WeylDisk:
        return WeylDisk(complex(self.center[k]), float(self.radius[k]), str(self.kind[k]), self.matrices[k])


_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(3)


def _psd_sqrt(H: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(H)
    return np.einsum("...ij,...j,...kj->...ik", Q, np.sqrt(np.maximum(w, 0.0)), Q)


def _energy_increments(H: Hamiltonian, z: complex, direction: int, u: np.ndarray) -> np.ndarray:
    """``int |H^{1/2} u|^2`` over each traversed cell (3-point Gauss-Legendre).

    ``u`` holds the solution with ``u(0) = (1, 0)`` at the traversed nodes.
    Evaluating ``|H^{1/2} u|`` directly avoids the cancellation that plagues
    ``Im(u_1 conj u_2)`` once the solution has grown large.
    """
    o = H.origin
    cells = _cell_values(H)
    cells = cells[o:] if direction > 0 else cells[:o][::-1]
    L = _psd_sqrt(cells)
    X = (direction * z * H.dx) * (JMAT @ cells)
    total = np.zeros(len(cells))
    for t, w in zip(_GAUSS_T, _GAUSS_W):
        frac = 0.5 * (t + 1.0)
        v = np.einsum("nij,nj->ni", expm_traceless(frac * X), u[:-1])
        Lv = np.einsum("nij,nj->ni", L, v)
        total += 0.5 * w * np.sum(np.abs(Lv) ** 2, axis=1)
    return total * H.dx


def weyl_disk_trace(H: Hamiltonian, z, direction: int = 1) -> DiskTrace:
    """Weyl disks at every node on one side of the origin.

    ``direction = +1``: ``T_1(x)^{-1}(closed C+)`` for ``x >= 0`` (shrinking to
    ``m_+``); ``-1``: ``T_1(x)^{-1}(closed C-)`` for ``x <= 0`` (shrinking to
    ``-m_-``).  The radius is ``1 / (2 Im z int |H^{1/2} u|^2)`` with ``u`` the
    solution starting at ``(1, 0)``; this equals ``1/(2 |Im(gamma conj delta)|)``
    for ``M = [[alpha, beta], [gamma, delta]]`` and is monotone by construction.

    When ``T_1`` overflows (``H`` growing exponentially) the trace ends at the
    last node where every quantity is finite.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("z must lie in the upper half plane")
    with np.errstate(over="ignore", invalid="ignore"):
        xs, T = transfer_trajectory(H, z, direction)
        M = mobius.inv(T)
        if direction < 0:
            M = M @ np.diag([-1.0, 1.0])
        energy = np.concatenate(([0.0], np.cumsum(_energy_increments(H, z, direction, T[:, :, 0]))))
        al, be, ga, de = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]
        K = -z.imag * energy  # Im(gamma conj delta)
        half = energy <= 0
        Ks = np.where(half, 1.0, K)
        center = np.where(half, np.nan, (al * np.conj(de) - be * np.conj(ga)) / (2j * Ks))
        radius = np.where(half, np.inf, 1.0 / (2.0 * np.abs(Ks)))
    good = np.all(np.isfinite(M), axis=(1, 2)) & np.isfinite(energy) & (half | np.isfinite(center))
    stop = len(good) if good.all() else int(np.argmin(good))
    xs, M, half, center, radius, ga, de = (v[:stop] for v in (xs, M, half, center, radius, ga, de))
    with np.errstate(divide="ignore", invalid="ignore"):
        pole_im = np.where(half | (ga == 0), 0.0, (-de / np.where(ga == 0, 1.0, ga)).imag)
    kind = np.where(half, "half-plane", np.where(pole_im < 0, "disk", "complement"))
    return DiskTrace(xs, center, radius, kind, M)


def weyl_disk(H: Hamiltonian, x: float, z) -> WeylDisk:
    """``T_1(x, z)^{-1}`` applied to the closed upper half plane (``x >= 0``)
    or, for ``x < 0``, to the closed lower half plane (disks shrinking to ``-m_-``)."""
    k = H.index(x) - H.origin
    tr = weyl_disk_trace(H, z, 1 if k >= 0 else -1)
    return tr.disk(abs(k))


def _limit_point(H: Hamiltonian, z, radius_tol: float, direction: int) -> complex:
    tr = weyl_disk_trace(H, z, direction)
    ok = np.nonzero((tr.kind == "disk") & (tr.radius < radius_tol))[0]
    if len(ok) == 0:
        finite = tr.radius[np.isfinite(tr.radius)]
        last = float(finite[-1]) if len(finite) else math.inf
        raise ConvergenceError(f"Weyl disks did not shrink below {radius_tol:g} (last radius {last:.3g})", last)
    return complex(tr.center[ok[0]])


def m_plus_canonical(H: Hamiltonian, z, radius_tol: float = 1e-9) -> complex:
    """Center of the first Weyl disk with radius below ``radius_tol``."""
    return _limit_point(H, z, radius_tol, 1)


def m_minus_canonical(H: Hamiltonian, z, radius_tol: float = 1e-9) -> complex:
    """``m_-`` from the disks on the negative half line (which shrink to ``-m_-``)."""
    return -_limit_point(H, z, radius_tol, -1)


# --- twisted shifts -----------------------------------------------------------


class ShiftSpec:
    """Choice of ``S = F(det H(0), det H'(0), ...)`` for a twisted shift.

    ``generators(H)`` returns ``F`` evaluated along the grid of ``H``, i.e.
    with ``det H^(j)(sigma)`` at every node ``sigma``.
    """

    name = "custom"

    def generators(self, H: Hamiltonian) -> np.ndarray:
        raise NotImplementedError

    def S(self, H: Hamiltonian) -> np.ndarray:
        return self.generators(H)[H.origin]

    def _checked(self, F: np.ndarray) -> np.ndarray:
        tr = F[..., 0, 0] + F[..., 1, 1]
        if np.any(np.abs(tr) > 1e-12 * np.maximum(1.0, np.abs(F).max(axis=(-2, -1)))):
            raise ValueError("F must be trace free")
        return F


class ZeroShift(ShiftSpec):
    """``F = 0``: the plain shift."""

    name = "zero"

    def generators(self, H):
        return np.zeros((len(H.x), 2, 2))


class ConstantShift(ShiftSpec):
    name = "constant"

    def __init__(self, F):
        self.F = self._checked(np.asarray(F, float))

    def generators(self, H):
        return np.broadcast_to(self.F, (len(H.x), 2, 2)).copy()


class SchrodingerShift(ShiftSpec):
    """``F = [[0, det(H'')/4], [1, 0]]``.

    ``richardson`` (default on) selects the extrapolated second differences
    of :func:`V_from_H`; with plain three-point differences the O(dx^2) error
    in ``V`` feeds straight into ``T(s)``.
    """

    name = "schrodinger"

    def __init__(self, richardson: bool = True):
        self.richardson = richardson

    def generators(self, H):
        V = V_from_H(H, self.richardson).V
        F = np.zeros((len(H.x), 2, 2))
        F[:, 0, 1] = V
        F[:, 1, 0] = 1.0
        return F


class DeterminantShift(ShiftSpec):
    """General ``F(det H, det H', ..., det H^(n))`` from a user function."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], n: int, richardson: bool = False, name: str = "determinant"):
        self.func, self.n, self.name = func, int(n), name
        self.order = 4 if richardson else 2

    def generators(self, H):
        dets = []
        for j in range(self.n + 1):
            Dj = H.values if j == 0 else derivative(H.values, H.dx, j, self.order)[0]
            dets.append(Dj[:, 0, 0] * Dj[:, 1, 1] - Dj[:, 0, 1] * Dj[:, 1, 0])
        F = np.array([self.func(np.array(d)) for d in zip(*dets)], dtype=float)
        return self._checked(F)


SHIFT_SPECS = {"zero": ZeroShift, "schrodinger": SchrodingerShift}


@dataclass(frozen=True)
class TwistedShift:
    """Result of a twisted shift: the moved Hamiltonian and ``T_0(s) = M(s)^{-1}``."""

    H: Hamiltonian
    T0: np.ndarray
    s: float


def twisted_shift_T(H0: Hamiltonian, s: float, spec: ShiftSpec) -> np.ndarray:
    """``T(s)`` from ``T' = F(det H_0^(j)(sigma)) T``, ``T(0) = I`` (RK4 on grid nodes)."""
    n = _steps(H0.dx, s)
    if n == 0:
        return np.eye(2)
    F = spec._checked(np.asarray(spec.generators(H0), float))
    o = H0.origin
    stop = o + n
    if stop < 0 or stop >= len(H0.x):
        raise GridError("shift runs off the grid")
    return _rk4_nodes(F, _midpoints(F), H0.dx, o, stop)[-1]


def conjugate(H: Hamiltonian, M: np.ndarray, shift_nodes: int = 0) -> Hamiltonian:
    """``x -> M^t H(x + shift) M`` on the correspondingly shifted grid."""
    M = np.real_if_close(np.asarray(M))
    if np.array_equal(M, np.eye(2)):
        return Hamiltonian(H.x - shift_nodes * H.dx, H.values)
    vals = np.einsum("ji,njk,kl->nil", M, H.values, M)
    return Hamiltonian(H.x - shift_nodes * H.dx, vals)


def twisted_shift_flow(H0: Hamiltonian, s: float, spec: ShiftSpec | None = None) -> TwistedShift:
    """``(s.H)(x) = T(s)^{-t} H_0(x + s) T(s)^{-1}`` with ``T`` from the ``F`` of ``spec``.

    The result lives on the grid of ``H_0`` moved by ``-s``.
    """
    spec = ZeroShift() if spec is None else spec
    T = twisted_shift_T(H0, s, spec)
    return TwistedShift(conjugate(H0, mobius.inv(T), _steps(H0.dx, s)), T, s)


def sup_distance(H1: Hamiltonian, H2: Hamiltonian, x0: float | None = None, x1: float | None = None) -> float:
    """Max entry difference on the common grid (optionally restricted)."""
    lo = max(H1.x[0], H2.x[0]) if x0 is None else x0
    hi = min(H1.x[-1], H2.x[-1]) if x1 is None else x1
    return float(np.max(np.abs(H1.restrict(lo, hi).values - H2.restrict(lo, hi).values)))


def det_characteristic_check(H0: Hamiltonian, s: float, spec: ShiftSpec) -> float:
    """``max |det H(x, s) - det H_0(x + s)|`` over the shifted grid."""
    res = twisted_shift_flow(H0, s, spec)
    # node k of the result sits at x_k - s, so it pairs with node k of H_0
    return float(np.max(np.abs(res.H.det() - H0.det())))


def pdets_residual(H0: Hamiltonian, spec: ShiftSpec, fd_steps: int = 1, interior: int | None = None) -> float:
    """Central-difference residual of ``dH/ds - dH/dx + S^t H + H S`` at ``s = 0``.

    ``fd_steps`` grid steps are used for both difference quotients; nodes
    closer than ``interior`` (default ``4 fd_steps``) to the ends are skipped.
    """
    k = int(fd_steps)
    h = k * H0.dx
    Tp = twisted_shift_T(H0, h, spec)
    Tm = twisted_shift_T(H0, -h, spec)
    V = H0.values
    n = len(V)
    pad = 4 * k if interior is None else int(interior)
    idx = np.arange(pad, n - pad)
    Mp, Mm = mobius.inv(Tp), mobius.inv(Tm)
    Hp = np.einsum("ji,njk,kl->nil", Mp, V[idx + k], Mp)
    Hm = np.einsum("ji,njk,kl->nil", Mm, V[idx - k], Mm)
    ds = (Hp - Hm) / (2 * h)
    dx = (V[idx + k] - V[idx - k]) / (2 * h)
    S = spec.S(H0)
    Hc = V[idx]
    res = ds - dx + np.einsum("ji,njk->nik", S, Hc) + Hc @ S
    return float(np.max(np.abs(res)))


def combined_cocycle(H: Hamiltonian, s: float, z, spec: ShiftSpec | None = None) -> np.ndarray:
    """``T(s; H) = T_0(s; H) T_1(s; H)`` for the twisted shift of ``spec``."""
    spec = ZeroShift() if spec is None else spec
    return twisted_shift_T(H, s, spec) @ canonical_transfer(H, s, z)


def generator_C(H: Hamiltonian, z, spec: ShiftSpec | None = None) -> np.ndarray:
    """``C(H) = S(H) + z J H(0)``, the generator of the combined cocycle."""
    spec = ZeroShift() if spec is None else spec
    return spec.S(H) + complex(z) * (JMAT @ H.values[H.origin])


def interchange_defect(H: Hamiltonian, t: float, s: float, z, spec: ShiftSpec) -> float:
    """``|T_0(t;H) T_1(s; S_t H) - T_1(s; t.H) T_0(t;H)|`` with ``S_t H = H(. + t)``."""
    T0 = twisted_shift_T(H, t, spec)
    plain = Hamiltonian(H.x - t, H.values)
    lhs = T0 @ canonical_transfer(plain, s, z)
    rhs = canonical_transfer(twisted_shift_flow(H, t, spec).H, s, z) @ T0
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class ConjugationFlow:
    H: Hamiltonian
    cocycle: np.ndarray


def conjugation_flow(H: Hamiltonian, B, t: float) -> ConjugationFlow:
    """``(t.H)(x) = exp(-t B^t) H(x) exp(-t B)`` with cocycle ``exp(t B)``."""
    B = np.asarray(B, float)
    if abs(B[0, 0] + B[1, 1]) > 1e-12 * max(1.0, np.abs(B).max()):
        raise ValueError("B must be trace free")
    E = expm_traceless(t * B).real
    return ConjugationFlow(conjugate(H, mobius.inv(E)), E)


class ConstantTwist:
    """Twist ``A(H) = A`` independent of ``H``."""

    def __init__(self, A):
        A = np.asarray(A, float)
        if abs(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] - 1.0) > 1e-12:
            raise ValueError("twist must be unimodular")
        self.A = A

    def __call__(self, H: Hamiltonian) -> np.ndarray:
        return self.A


def jacobi_twist(a1: float, b1: float) -> ConstantTwist:
    """``A = [[-b_1/a_1, 1/a_1], [-a_1, 0]]``: the shift step at ``z = 0``."""
    return ConstantTwist([[-b1 / a1, 1.0 / a1], [-a1, 0.0]])


def twisted_shift_map(H: Hamiltonian, A_func: Callable, n: int) -> Hamiltonian:
    """``n``-fold iterate of ``(1.H)(x) = A(H)^{-t} H(x + 1) A(H)^{-1}``.

    Negative ``n`` needs a :class:`ConstantTwist` (the inverse is then
    ``H(x) -> A^t H(x - 1) A``).
    """
    unit = _steps(H.dx, 1.0)
    n = int(n)
    if n < 0 and not isinstance(A_func, ConstantTwist):
        raise ValueError("negative iterates need a constant twist")
    for _ in range(abs(n)):
        A = np.asarray(A_func(H), float)
        if n > 0:
            H = conjugate(H, mobius.inv(A).real, unit)
        else:
            H = conjugate(H, A, -unit)
    return H
