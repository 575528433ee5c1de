"""Jacobi matrices on a finite window plus a boundary policy.

A Jacobi matrix acts as ``(Ju)_n = a_n u_{n+1} + a_{n-1} u_{n-1} + b_n u_n``.
Whole-line coefficient sequences are represented by the values on a window
``[n_lo, n_hi]`` together with a rule for the remaining sites: either the
window is one period (:class:`Periodic`), or the coefficients are constant
outside of it (:class:`EventuallyFree`).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np
import scipy.linalg
from numpy.polynomial import Polynomial

#: default positivity floor for the off-diagonal coefficients
A_FLOOR = 1e-8

RealPolynomial = Polynomial


class PositivityError(ValueError):
    """Off-diagonal coefficient at or below the positivity floor."""


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Periodic:
    kind: str = field(default="periodic", init=False)


@dataclass(frozen=True)
class EventuallyFree:
    a_inf: float
    b_inf: float
    kind: str = field(default="eventually_free", init=False)


Boundary = Union[Periodic, EventuallyFree]


def as_poly(p) -> Polynomial:
    """Coerce a coefficient sequence (lowest degree first) to a polynomial."""
    if isinstance(p, Polynomial):
        return p
    if np.isscalar(p):
        return Polynomial([float(p)])
    return Polynomial(np.asarray(p, dtype=float))


def poly_coeffs(p) -> np.ndarray:
    """Coefficients with trailing zeros removed (empty for the zero polynomial)."""
    c = np.asarray(as_poly(p).coef, dtype=float)
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if len(nz) else c[:0]


def degree(p) -> int:
    return len(poly_coeffs(p)) - 1


@dataclass(frozen=True, eq=False)
class JacobiMatrix:
    a: np.ndarray
    b: np.ndarray
    n_lo: int = 0
    boundary: Boundary = Periodic()
    floor: float = A_FLOOR

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape or len(a) == 0:
            raise ValueError("a and b must be non-empty 1-d arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite Jacobi coefficients")
        if np.any(a <= self.floor):
            raise PositivityError(f"a_n must exceed the floor {self.floor:g}; min a = {a.min():.3g}")
        if isinstance(self.boundary, EventuallyFree) and self.boundary.a_inf <= self.floor:
            raise PositivityError("a_inf must exceed the positivity floor")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n_lo", int(self.n_lo))

    @property
    def size(self) -> int:
        return len(self.a)

    @property
    def n_hi(self) -> int:
        return self.n_lo + len(self.a) - 1

    @property
    def periodic(self) -> bool:
        return isinstance(self.boundary, Periodic)

    def coefficients(self, idx) -> tuple[np.ndarray, np.ndarray]:
        """``(a_n, b_n)`` at arbitrary integer sites ``idx``."""
        idx = np.asarray(idx, dtype=int)
        k = idx - self.n_lo
        if self.periodic:
            k = k % len(self.a)
            return self.a[k], self.b[k]
        inside = (k >= 0) & (k < len(self.a))
        kc = np.clip(k, 0, len(self.a) - 1)
        a = np.where(inside, self.a[kc], self.boundary.a_inf)
        b = np.where(inside, self.b[kc], self.boundary.b_inf)
        return a, b

    def a_at(self, n: int) -> float:
        return float(self.coefficients([n])[0][0])

    def b_at(self, n: int) -> float:
        return float(self.coefficients([n])[1][0])

    def with_window(self, a, b) -> "JacobiMatrix":
        return replace(self, a=a, b=b)

    def block(self, lo: int, hi: int) -> np.ndarray:
        """Dense restriction of J to the sites ``lo..hi``."""
        idx = np.arange(lo, hi + 1)
        a, b = self.coefficients(idx)
        M = np.diag(b)
        if len(idx) > 1:
            off = a[:-1]
            M[np.arange(len(idx) - 1), np.arange(1, len(idx))] = off
            M[np.arange(1, len(idx)), np.arange(len(idx) - 1)] = off
        return M

    def to_dict(self) -> dict:
        if self.periodic:
            bnd = {"kind": "periodic"}
        else:
            bnd = {"kind": "eventually_free", "a_inf": self.boundary.a_inf, "b_inf": self.boundary.b_inf}
        return {"n_lo": self.n_lo, "n_hi": self.n_hi, "a": self.a.tolist(), "b": self.b.tolist(), "boundary": bnd}

    @classmethod
    def from_dict(cls, d: dict) -> "JacobiMatrix":
        bnd = d.get("boundary", {"kind": "periodic"})
        if bnd["kind"] == "periodic":
            boundary: Boundary = Periodic()
        elif bnd["kind"] == "eventually_free":
            boundary = EventuallyFree(float(bnd["a_inf"]), float(bnd["b_inf"]))
        else:
            raise ValueError(f"unknown boundary kind {bnd['kind']!r}")
        a, b = d["a"], d["b"]
        n_lo = int(d.get("n_lo", 0))
        if "n_hi" in d and int(d["n_hi"]) != n_lo + len(a) - 1:
            raise ValueError("n_hi inconsistent with the coefficient arrays")
        return cls(a, b, n_lo=n_lo, boundary=boundary)

    def __repr__(self) -> str:
        return f"JacobiMatrix(a={self.a.tolist()}, b={self.b.tolist()}, n_lo={self.n_lo}, boundary={self.boundary})"


def free(a: float = 0.5, b: float = 0.0) -> JacobiMatrix:
    """Constant coefficients, stored as a period-one matrix."""
    return JacobiMatrix([a], [b])


def random_periodic(rng: np.random.Generator, N: int, a_range=(0.3, 2.0), b_range=(-1.0, 1.0)) -> JacobiMatrix:
    a = rng.uniform(*a_range, size=N)
    b = rng.uniform(*b_range, size=N)
    return JacobiMatrix(a, b)


def _metric_radius(*Js: JacobiMatrix) -> int:
    return 64 + max(max(abs(J.n_lo), abs(J.n_hi)) for J in Js)


def metric(J1: JacobiMatrix, J2: JacobiMatrix, radius: int | None = None) -> float:
    """Weighted l1 distance ``sum 2^{-|n|} (|a_n - a'_n| + |b_n - b'_n|)``.

    The sum runs over ``|n| <= radius`` (default: 64 sites beyond both
    windows); for two eventually free matrices the constant tails are
    added in closed form.
    """
    K = _metric_radius(J1, J2) if radius is None else int(radius)
    n = np.arange(-K, K + 1)
    a1, b1 = J1.coefficients(n)
    a2, b2 = J2.coefficients(n)
    w = np.ldexp(1.0, -np.abs(n))
    total = float(np.sum(w * (np.abs(a1 - a2) + np.abs(b1 - b2))))
    if radius is None and not J1.periodic and not J2.periodic:
        tail = abs(J1.boundary.a_inf - J2.boundary.a_inf) + abs(J1.boundary.b_inf - J2.boundary.b_inf)
        total += 2.0 * tail * np.ldexp(1.0, -K)
    return total


def shift(J: JacobiMatrix, n: int) -> JacobiMatrix:
    """``n . J``: the matrix with coefficients ``(a_{m+n}, b_{m+n})``."""
    n = int(n)
    if J.periodic:
        return JacobiMatrix(np.roll(J.a, -n), np.roll(J.b, -n), n_lo=J.n_lo, boundary=J.boundary, floor=J.floor)
    return JacobiMatrix(J.a, J.b, n_lo=J.n_lo - n, boundary=J.boundary, floor=J.floor)


def matrix_powers(M: np.ndarray, m: int) -> list[np.ndarray]:
    out = [np.eye(len(M))]
    for _ in range(m):
        out.append(out[-1] @ M)
    return out


def matrix_element_power(J: JacobiMatrix, j: int, k: int, m: int) -> float:
    """``<delta_j, J^m delta_k>`` by banded vector iteration."""
    if m < 0:
        raise ValueError("power must be non-negative")
    if abs(j - k) > m:
        return 0.0
    lo, hi = min(j, k) - m, max(j, k) + m
    A = J.block(lo, hi)
    v = np.zeros(hi - lo + 1)
    v[k - lo] = 1.0
    for _ in range(m):
        v = A @ v
    return float(v[j - lo])


def site_powers(J: JacobiMatrix, n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``(J^j)_{n,n}`` and ``(J^j)_{n+1,n}`` for ``j = 0..m``."""
    lo, hi = n - m, n + 1 + m
    A = J.block(lo, hi)
    v = np.zeros(hi - lo + 1)
    v[n - lo] = 1.0
    diag = np.empty(m + 1)
    sub = np.empty(m + 1)
    for j in range(m + 1):
        diag[j] = v[n - lo]
        sub[j] = v[n + 1 - lo]
        v = A @ v
    return diag, sub


def taylor_c(J: JacobiMatrix, n: int) -> float:
    """Coefficient ``c_n = <delta_0, J^n delta_0>`` of ``-g`` at infinity."""
    if n < 0:
        raise ValueError("c_n is defined for n >= 0")
    if n == 0:
        return 1.0
    return matrix_element_power(J, 0, 0, n)


def taylor_d(J: JacobiMatrix, n: int) -> float:
    """Coefficient ``d_n = 2 a_0 <delta_1, J^n delta_0>`` of ``-h`` (``d_{-1} = 1``)."""
    if n < -1:
        raise ValueError("d_n is defined for n >= -1")
    if n == -1:
        return 1.0
    if n == 0:
        return 0.0
    return 2.0 * J.a_at(0) * matrix_element_power(J, 1, 0, n)


def _polyval_matrix(coeffs: np.ndarray, M: np.ndarray) -> np.ndarray:
    P = np.zeros_like(M)
    eye = np.eye(M.shape[-1])
    for c in coeffs[::-1]:
        P = P @ M + c * eye
    return P


def window_sites(J: JacobiMatrix) -> np.ndarray:
    return np.arange(J.n_lo, J.n_hi + 1)


class Stencil:
    """Maps window coefficient arrays onto a fixed range of sites ``lo..hi``.

    Used by integrators, which evolve raw ``(a, b)`` arrays laid out like
    ``J.a, J.b`` and need dense blocks of the evolving matrix every stage.
    """

    def __init__(self, J: JacobiMatrix, lo: int, hi: int):
        self.lo, self.hi = lo, hi
        idx = np.arange(lo, hi + 1)
        self.m = len(idx)
        k = idx - J.n_lo
        if J.periodic:
            self._map = k % J.size
            self._tails = None
        else:
            self._map = np.clip(k + 1, 0, J.size + 1)
            self._tails = (J.boundary.a_inf, J.boundary.b_inf)
        self._i = np.arange(self.m - 1)

    def coefficients(self, a: np.ndarray, b: np.ndarray):
        """Coefficients on ``lo..hi``; leading axes of ``a, b`` are batch axes."""
        if self._tails is not None:
            ai, bi = self._tails
            pad = a.shape[:-1] + (1,)
            a = np.concatenate((np.full(pad, ai), a, np.full(pad, ai)), axis=-1)
            b = np.concatenate((np.full(pad, bi), b, np.full(pad, bi)), axis=-1)
        return a[..., self._map], b[..., self._map]

    def block(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        ab, bb = self.coefficients(a, b)
        A = np.zeros(ab.shape + (self.m,))
        i = self._i
        A[..., np.arange(self.m), np.arange(self.m)] = bb
        A[..., i, i + 1] = ab[..., :-1]
        A[..., i + 1, i] = ab[..., :-1]
        return A


class LaxField:
    """Precomputed stencil for ``[p(J)_a, J]`` on a fixed set of sites.

    ``field(a, b)`` evaluates the rates for window coefficients ``a, b``
    (same layout as ``J.a, J.b``) without rebuilding a :class:`JacobiMatrix`.
    Leading axes of ``a, b`` are treated as a batch of matrices sharing the
    window and boundary of ``J``.
    """

    def __init__(self, J: JacobiMatrix, p, sites: Sequence[int] | None = None):
        self.coeffs = poly_coeffs(p)
        self.d = len(self.coeffs) - 1
        if sites is None:
            self.lo, self.hi = J.n_lo, J.n_hi
            self.sel = None
        else:
            sites = np.asarray(sites, dtype=int)
            self.lo, self.hi = int(sites.min()), int(sites.max())
            self.sel = sites - self.lo
        self.nsite = self.hi - self.lo + 1
        d = max(self.d, 0)
        self.stencil = Stencil(J, self.lo - 1 - d, self.hi + 2 + d)
        self._k = np.arange(1, self.nsite + 1)

    def block(self, a, b):
        return self.stencil.block(a, b)

    def rates_from_block(self, A: np.ndarray, P: np.ndarray):
        """Rates given the dense block ``A`` and ``P = p(A)`` on the stencil."""
        d = self.d
        m = self.nsite + 3
        Pc = P[..., d : d + m, d : d + m]
        Jc = A[..., d : d + m, d : d + m]
        Pa = np.triu(Pc, 1) - np.tril(Pc, -1)
        X = Pa @ Jc - Jc @ Pa
        k = self._k
        out = (X[..., k, k + 1], X[..., k, k])
        if self.sel is None:
            return out
        return out[0][..., self.sel], out[1][..., self.sel]

    def __call__(self, a: np.ndarray, b: np.ndarray):
        if self.d < 1:
            z = np.zeros(np.shape(a)[:-1] + (self.nsite,))
            out = (z, z.copy())
            if self.sel is None:
                return out
            return out[0][..., self.sel], out[1][..., self.sel]
        A = self.block(a, b)
        return self.rates_from_block(A, _polyval_matrix(self.coeffs, A))


def antisymmetric_commutator(J: JacobiMatrix, p, sites: Sequence[int] | None = None):
    """Tridiagonal part of ``[p(J)_a, J]``.

    Returns ``(adot, bdot)`` at ``sites`` (default: the window), where
    ``adot[i]`` is the rate of ``a_n`` and ``bdot[i]`` that of ``b_n``.
    Only the coefficients within ``deg p + 1`` of a site enter.
    """
    return LaxField(J, p, sites)(J.a, J.b)


def classical_toda_rates(J: JacobiMatrix, sites: Sequence[int] | None = None):
    """``adot = a_n (b_{n+1} - b_n)``, ``bdot = 2 (a_n^2 - a_{n-1}^2)``."""
    n = window_sites(J) if sites is None else np.asarray(sites, dtype=int)
    a, b = J.coefficients(n)
    _, b1 = J.coefficients(n + 1)
    am, _ = J.coefficients(n - 1)
    return a * b1 - b * a, 2.0 * (a * a - am * am)


def operator_norm_bound(J: JacobiMatrix) -> float:
    a, b = np.abs(J.a), np.abs(J.b)
    amax, bmax = a.max(), b.max()
    if not J.periodic:
        amax = max(amax, abs(J.boundary.a_inf))
        bmax = max(bmax, abs(J.boundary.b_inf))
    return float(2.0 * amax + bmax)


def periodic_truncation(J: JacobiMatrix) -> np.ndarray:
    """Dense N x N matrix of a periodic J with the wrap-around coupling."""
    if not J.periodic:
        raise ValueError("periodic truncation needs a Periodic boundary")
    N = J.size
    M = np.diag(J.b.astype(float))
    for n in range(N):
        M[n, (n + 1) % N] += J.a[n]
        M[(n + 1) % N, n] += J.a[n]
    return M


def tridiag_eigenvalues(diag, offdiag, periodic_corner: float | None = None) -> np.ndarray:
    """Ascending eigenvalues of a symmetric tridiagonal matrix.

    With ``periodic_corner`` the entries ``(0, n-1)`` and ``(n-1, 0)`` receive
    that value in addition (so for ``n <= 2`` it adds onto existing entries).
    """
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    n = len(d)
    if n < 1:
        raise ValueError("need at least one diagonal entry")
    if len(e) != n - 1:
        raise ValueError("offdiag must have length n - 1")
    try:
        if periodic_corner is None:
            if n == 1:
                return d.copy()
            return scipy.linalg.eigh_tridiagonal(d, e, eigvals_only=True)
        M = np.diag(d)
        i = np.arange(n - 1)
        M[i, i + 1] += e
        M[i + 1, i] += e
        M[0, n - 1] += periodic_corner
        M[n - 1, 0] += periodic_corner
        return np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc


def periodic_spectrum(J: JacobiMatrix) -> np.ndarray:
    """Eigenvalues of the periodic truncation of a periodic J."""
    if not J.periodic:
        raise ValueError("periodic spectrum needs a Periodic boundary")
    N = J.size
    if N == 1:
        return tridiag_eigenvalues([J.b[0]], [], periodic_corner=J.a[0])
    return tridiag_eigenvalues(J.b, J.a[:-1], periodic_corner=J.a[-1])
