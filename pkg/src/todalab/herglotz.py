"""Titchmarsh-Weyl m-functions of Jacobi matrices and what is built from them.

Sign conventions: ``m_+ = -f_+(1) / (a_0 f_+(0))`` and
``m_- = f_-(1) / (a_0 f_-(0))`` for the solutions ``f_+`` (square summable at
``+inf``) and ``f_-`` (at ``-inf``).  Both are Herglotz functions, and along
the shift, a Toda flow or any Toda map ``T`` the points ``m_+`` and ``-m_-``
move by the linear fractional action of ``T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import mobius
from .cocycle import shift_cocycle, step_product
from .jacobi import EventuallyFree, JacobiMatrix, periodic_truncation

#: slack below the real axis tolerated in Herglotz checks (relative to |m|)
HERGLOTZ_TOL = 1e-12


class DomainError(ValueError):
    """A Toda map sent ``m_+`` or ``-m_-`` out of its admissible half plane."""


class GridResolutionError(ValueError):
    """The sampling grid is too coarse to resolve the band structure."""


@dataclass(frozen=True)
class MPair:
    m_plus: complex
    m_minus: complex
    z: complex

    def __post_init__(self):
        for name in ("m_plus", "m_minus"):
            w = getattr(self, name)
            if w is mobius.INF:
                continue
            if complex(w).imag < -HERGLOTZ_TOL * max(1.0, abs(w)):
                raise DomainError(f"{name} = {w} is not in the closed upper half plane")


def _require_upper(z) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("z must lie in the upper half plane")
    return z


def m_free(a: float, b: float, z) -> complex:
    """``m_+`` of the constant matrix: the root of ``a^2 m^2 + (z - b) m + 1`` in C+."""
    z = complex(z)
    if z.imag == 0:
        w = z - b
        if abs(w.real) <= 2 * a:
            raise ValueError("z on the band: no decaying solution")
        raise ValueError("z must lie in the upper half plane")
    if z.imag < 0:
        raise ValueError("z must lie in the upper half plane")
    w = z - b
    s = np.sqrt(complex(w * w - 4.0 * a * a))
    # avoid cancellation: take the larger root in modulus first
    r1 = (-w + s) / (2 * a * a)
    r2 = (-w - s) / (2 * a * a)
    big = r1 if abs(r1) >= abs(r2) else r2
    small = 1.0 / (a * a * big)
    return complex(big if big.imag > 0 else small)


def m_minus_free(a: float, b: float, z) -> complex:
    """``m_-`` of the constant matrix, ``(z - b)/a^2 + m_+``."""
    return complex((complex(z) - b) / (a * a) + m_free(a, b, z))


def _periodic_roots(T: np.ndarray) -> tuple[complex, complex]:
    a, b, c, d = (complex(x) for x in (T[0, 0], T[0, 1], T[1, 0], T[1, 1]))
    D = a + d
    scale = max(abs(a), abs(b), abs(c), abs(d), 1.0)
    if abs(c) <= 1e-14 * scale:
        raise ValueError("period transfer matrix has c = 0 (T = +-identity or degenerate)")
    disc = np.sqrt(complex(D * D - 4.0))
    if abs(disc) <= 1e-12 * scale:
        raise ValueError("discriminant vanishes: z is a band edge")
    num1, num2 = (a - d) + disc, (a - d) - disc
    num = num1 if abs(num1) >= abs(num2) else num2
    r1 = num / (2.0 * c)
    r2 = -b / (c * r1) if r1 != 0 else (num1 + num2 - num) / (2.0 * c)
    return r1, r2


def m_pair(J: JacobiMatrix, z) -> MPair:
    """Both half-line m-functions of a periodic or eventually free ``J``.

    Periodic: ``m_+`` and ``-m_-`` are the roots of ``c x^2 + (d - a) x - b``
    built from the period transfer matrix; the root in C+ is ``m_+``.
    Eventually free: the free values of the tails are pulled back through the
    shift cocycle, ``m_+(J) = T(K; J)^{-1} m_+^free`` with ``K = n_hi + 1`` and
    ``-m_-(J) = T(K'; J)^{-1} (-m_-^free)`` with ``K' = n_lo - 1``.
    """
    z = _require_upper(z)
    if J.periodic:
        T = shift_cocycle(J, J.size, z)
        r1, r2 = _periodic_roots(T)
        mp, mm = (r1, -r2) if r1.imag > r2.imag else (r2, -r1)
        return MPair(complex(mp), complex(mm), z)
    bnd: EventuallyFree = J.boundary
    K = J.n_hi + 1
    Kp = J.n_lo - 1
    mp = mobius.mobius_apply(mobius.inv(shift_cocycle(J, K, z)), m_free(bnd.a_inf, bnd.b_inf, z))
    neg = mobius.mobius_apply(mobius.inv(shift_cocycle(J, Kp, z)), -m_minus_free(bnd.a_inf, bnd.b_inf, z))
    mm = mobius.INF if neg is mobius.INF else -neg
    return MPair(mp, mm, z)


def m_pair_dense(J: JacobiMatrix, z, half_width: int = 200) -> MPair:
    """Oracle: m-functions from a dense solve on ``[-half_width, half_width]``.

    With ``G = (J - z)^{-1}``, the column ``G delta_0`` is proportional to
    ``f_+`` to the right of 0 and to ``f_-`` to the left of 0.
    """
    z = _require_upper(z)
    A = J.block(-half_width, half_width).astype(complex)
    A[np.diag_indices_from(A)] -= z
    e = np.zeros(2 * half_width + 1, dtype=complex)
    e[half_width] = 1.0
    u = np.linalg.solve(A, e)
    e2 = np.zeros_like(e)
    e2[half_width + 1] = 1.0
    v = np.linalg.solve(A, e2)  # proportional to f_+ on sites >= 1, f_- on sites <= 0
    a0 = J.a_at(0)
    mp = -u[half_width + 1] / (a0 * u[half_width])
    mm = v[half_width + 1] / (a0 * v[half_width])
    return MPair(complex(mp), complex(mm), z)


def M_matrix(pair: MPair) -> np.ndarray:
    """``(m_+ + m_-)^{-1} [[-1, (m_+ - m_-)/2], [(m_+ - m_-)/2, m_+ m_-]]``."""
    mp, mm = complex(pair.m_plus), complex(pair.m_minus)
    s = mp + mm
    if s == 0:
        raise ValueError("m_+ + m_- = 0")
    off = 0.5 * (mp - mm)
    return np.array([[-1.0, off], [off, mp * mm]], dtype=complex) / s


def g01_closed_form(J: JacobiMatrix, z) -> tuple[complex, complex]:
    """``g_0 = -c/sqrt(D^2 - 4)``, ``g_1 = b/sqrt(D^2 - 4)`` from the period
    transfer matrix, with the root chosen so that ``Im g_0 > 0``."""
    if not J.periodic:
        raise ValueError("closed forms need a Periodic matrix")
    z = _require_upper(z)
    T = shift_cocycle(J, J.size, z)
    D = T[0, 0] + T[1, 1]
    s = np.sqrt(complex(D * D - 4.0))
    g0, g1 = -T[1, 0] / s, T[0, 1] / s
    if g0.imag < 0:
        g0, g1 = -g0, -g1
    return complex(g0), complex(g1)


def reflection_coefficient(pair: MPair) -> tuple[complex, complex]:
    """``R_+ = (conj m_+ + m_-)/(m_+ + m_-)``, ``R_- = (m_+ + conj m_-)/(m_+ + m_-)``."""
    mp, mm = complex(pair.m_plus), complex(pair.m_minus)
    s = mp + mm
    if s == 0:
        raise ValueError("m_+ + m_- = 0")
    return (np.conj(mp) + mm) / s, (mp + np.conj(mm)) / s


def reflection_modulus_hyperbolic(pair: MPair) -> float:
    """``tanh(gamma(m_+, -conj m_-)/2)``; both points must lie in C+."""
    return math.tanh(0.5 * mobius.hyperbolic_distance(pair.m_plus, -np.conj(complex(pair.m_minus))))


def reflection_modulus_grid(J: JacobiMatrix, xs, y: float = 1e-3) -> np.ndarray:
    """``|R_+(x + iy)|`` over a grid of real parts."""
    return np.array([abs(reflection_coefficient(m_pair(J, complex(x, y)))[0]) for x in np.asarray(xs, float)])


def toda_map(T: np.ndarray, pair: MPair) -> MPair:
    """Move ``(m_+, -m_-)`` by the linear fractional action of ``T``."""
    mp = mobius.mobius_apply(T, pair.m_plus)
    neg = mobius.mobius_apply(T, mobius.INF if pair.m_minus is mobius.INF else -complex(pair.m_minus))
    mm = mobius.INF if neg is mobius.INF else -neg
    try:
        return MPair(mp, mm, pair.z)
    except DomainError as exc:
        raise DomainError(f"Toda map leaves its domain: {exc}") from exc


def fixed_point_check(J: JacobiMatrix, zs, T_override: Callable | None = None) -> float:
    """Max chordal distance between ``+-m_+-`` and their images under the period map.

    ``T_override(z)`` replaces the period transfer matrix (negative controls).
    """
    if not J.periodic:
        raise ValueError("fixed point check needs a Periodic matrix")
    worst = 0.0
    for z in np.atleast_1d(zs):
        pair = m_pair(J, z)
        T = shift_cocycle(J, J.size, z) if T_override is None else T_override(z)
        for w in (pair.m_plus, -pair.m_minus):
            worst = max(worst, mobius.chordal_distance(w, mobius.mobius_apply(T, w)))
    return worst


# --- band sets ----------------------------------------------------------------


@dataclass(frozen=True)
class BandSet:
    """Sorted disjoint closed intervals ``[(lo, hi), ...]`` (``lo == hi`` allowed)."""

    intervals: tuple

    def __post_init__(self):
        iv = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for lo, hi in iv:
            if hi < lo:
                raise ValueError("interval with hi < lo")
        for (_, h1), (l2, _) in zip(iv, iv[1:]):
            if not h1 < l2:
                raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", iv)

    def __len__(self) -> int:
        return len(self.intervals)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self.intervals)

    @property
    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def endpoints(self) -> np.ndarray:
        return np.array([e for iv in self.intervals for e in iv])

    def hausdorff(self, other: "BandSet") -> float:
        """Max distance between corresponding endpoints (same interval count required)."""
        if len(self) != len(other):
            return math.inf
        return float(np.max(np.abs(self.endpoints() - other.endpoints()))) if len(self) else 0.0


def merge_intervals(intervals, gap: float = 0.0) -> BandSet:
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1] + gap:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return BandSet(tuple(tuple(iv) for iv in out))


def fixed_point_band_set(T_of_x: Callable[[float], np.ndarray], search_interval, grid=2001, xtol: float = 1e-14) -> BandSet:
    """``{x : |tr T(x)| <= 2}`` on ``search_interval``.

    The trace is sampled on ``grid`` (point count or explicit nodes); every
    change of membership between neighbouring nodes is refined by bracketing
    root finding on ``|tr T| - 2``.  A cell whose trace jumps across the whole
    strip ``[-2, 2]`` hides a band, and raises :class:`GridResolutionError`.
    Tangential touches of ``+-2`` between nodes are not certified.
    """
    lo, hi = map(float, search_interval)
    xs = np.linspace(lo, hi, int(grid)) if np.isscalar(grid) else np.sort(np.asarray(grid, float))
    if len(xs) < 2:
        raise ValueError("grid needs at least two nodes")

    def f(x):
        T = np.asarray(T_of_x(x))
        return float(np.real(T[0, 0] + T[1, 1]))

    tr = np.array([f(x) for x in xs])
    inside = np.abs(tr) <= 2.0
    for k in range(len(xs) - 1):
        if not inside[k] and not inside[k + 1] and (tr[k] - 2.0) * (tr[k + 1] - 2.0) < 0 or (
            not inside[k] and not inside[k + 1] and (tr[k] + 2.0) * (tr[k + 1] + 2.0) < 0
        ):
            raise GridResolutionError(f"trace crosses the band strip within one cell near x = {xs[k]:.6g}")

    def edge(x0, x1):
        g = lambda x: abs(f(x)) - 2.0
        g0, g1 = g(x0), g(x1)
        if g0 == 0.0:
            return x0
        if g1 == 0.0:
            return x1
        return brentq(g, x0, x1, xtol=xtol, rtol=4 * np.finfo(float).eps)

    intervals = []
    start = xs[0] if inside[0] else None
    for k in range(len(xs) - 1):
        if inside[k] != inside[k + 1]:
            e = edge(xs[k], xs[k + 1])
            if inside[k + 1]:
                start = e
            else:
                intervals.append((start, e))
                start = None
    if start is not None:
        intervals.append((start, xs[-1]))
    return merge_intervals(intervals)


def period_transfer(J: JacobiMatrix) -> Callable[[float], np.ndarray]:
    """``x -> T(N; J, x)`` for a periodic ``J`` (real matrices for real x)."""
    if not J.periodic:
        raise ValueError("period transfer needs a Periodic matrix")
    a, b = J.coefficients(np.arange(1, J.size + 1))
    return lambda x: step_product(a, b, complex(x)).real


def band_search_interval(J: JacobiMatrix, margin: float = 0.1) -> tuple[float, float]:
    from .jacobi import operator_norm_bound

    r = operator_norm_bound(J) + margin
    return -r, r


def floquet_bands(J: JacobiMatrix, thetas: int = 2001) -> BandSet:
    """Oracle: union over the Floquet twist ``theta`` of the twisted
    truncation spectra (corner ``a_{N-1} e^{i theta}``); band ``k`` is the
    range of the ``k``-th eigenvalue over ``theta in [0, pi]``."""
    if not J.periodic:
        raise ValueError("Floquet bands need a Periodic matrix")
    N = J.size
    base = periodic_truncation(J).astype(complex)
    # remove the real wrap-around coupling, then add it back twisted
    aN = J.a[-1]
    base[N - 1, 0] -= aN
    base[0, N - 1] -= aN
    evs = []
    for th in np.linspace(0.0, np.pi, int(thetas)):
        M = base.copy()
        M[N - 1, 0] += aN * np.exp(1j * th)
        M[0, N - 1] += aN * np.exp(-1j * th)
        evs.append(np.linalg.eigvalsh(M))
    evs = np.array(evs)
    return merge_intervals([(evs[:, k].min(), evs[:, k].max()) for k in range(N)])
