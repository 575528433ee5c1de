"""2x2 complex matrices of unit determinant and their linear fractional action.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)``.  Points of the
Riemann sphere are Python complex numbers or the sentinel :data:`INF`.
"""
from __future__ import annotations

import enum
import math
from typing import Union

import numpy as np

#: relative size below which a denominator ``c*w + d`` is treated as zero
CANCEL_RTOL = 1e-13


class _Infinity(enum.Enum):
    INF = "inf"

    def __repr__(self) -> str:
        return "INF"


INF = _Infinity.INF

SpherePoint = Union[complex, _Infinity]

#: the symplectic unit used throughout, ``[[0, -1], [1, 0]]``
JMAT = np.array([[0.0, -1.0], [1.0, 0.0]])


class DegenerateMatrixError(ValueError):
    """Raised when a matrix action produces 0/0."""


def mat2(a, b, c, d) -> np.ndarray:
    return np.array([[a, b], [c, d]], dtype=complex)


def identity() -> np.ndarray:
    return np.eye(2, dtype=complex)


def det(M: np.ndarray) -> complex:
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def unimodularity_defect(M: np.ndarray) -> float:
    """``|det M - 1|`` (max over a stack of matrices)."""
    return float(np.max(np.abs(det(M) - 1.0)))


def inv(M: np.ndarray) -> np.ndarray:
    """Inverse of a unimodular 2x2 matrix (adjugate, no division by det)."""
    out = np.empty_like(M)
    out[..., 0, 0] = M[..., 1, 1]
    out[..., 1, 1] = M[..., 0, 0]
    out[..., 0, 1] = -M[..., 0, 1]
    out[..., 1, 0] = -M[..., 1, 0]
    return out


def is_inf(w) -> bool:
    return w is INF


def vector_to_point(v) -> SpherePoint:
    """Point ``v1/v2`` of the Riemann sphere represented by a nonzero vector."""
    v1, v2 = complex(v[0]), complex(v[1])
    if v1 == 0 and v2 == 0:
        raise ValueError("the zero vector does not represent a point")
    if v2 == 0 or abs(v2) < CANCEL_RTOL * abs(v1):
        return INF
    return v1 / v2


def point_to_vector(w: SpherePoint) -> np.ndarray:
    if w is INF:
        return np.array([1.0, 0.0], dtype=complex)
    return np.array([w, 1.0], dtype=complex)


def mobius_apply(M: np.ndarray, w: SpherePoint) -> SpherePoint:
    """Apply ``w -> (a w + b) / (c w + d)`` with the usual conventions at infinity."""
    a, b, c, d = (complex(x) for x in (M[0, 0], M[0, 1], M[1, 0], M[1, 1]))
    if w is INF:
        num, den, scale = a, c, abs(c)
    else:
        w = complex(w)
        num, den = a * w + b, c * w + d
        scale = abs(c) * abs(w) + abs(d)
    if num == 0 and den == 0:
        raise DegenerateMatrixError("0/0 in linear fractional action")
    if den == 0 or abs(den) < CANCEL_RTOL * scale:
        return INF
    return num / den


def mobius_apply_array(M: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vectorised action on finite points; ``M`` may be a stack matching ``w``."""
    M = np.asarray(M)
    return (M[..., 0, 0] * w + M[..., 0, 1]) / (M[..., 1, 0] * w + M[..., 1, 1])


def chordal_distance(w1: SpherePoint, w2: SpherePoint) -> float:
    """Chordal metric on the Riemann sphere (diameter 2)."""
    if w1 is INF and w2 is INF:
        return 0.0
    if w1 is INF or w2 is INF:
        w = w2 if w1 is INF else w1
        return 2.0 / math.sqrt(1.0 + abs(w) ** 2)
    return 2.0 * abs(w1 - w2) / math.sqrt((1.0 + abs(w1) ** 2) * (1.0 + abs(w2) ** 2))


def hyperbolic_distance(w1: complex, w2: complex) -> float:
    """Poincare distance in the upper half plane."""
    w1, w2 = complex(w1), complex(w2)
    if not (w1.imag > 0 and w2.imag > 0):
        raise ValueError("hyperbolic distance needs points with positive imaginary part")
    arg = 1.0 + abs(w1 - w2) ** 2 / (2.0 * w1.imag * w2.imag)
    return math.acosh(arg)


def expm_traceless(X: np.ndarray) -> np.ndarray:
    """exp(X) for trace-free 2x2 matrices (or a stack of them).

    Uses ``X^2 = -det(X) I`` so ``exp X = cosh(mu) I + sinh(mu)/mu X``
    with ``mu^2 = -det X``.
    """
    X = np.asarray(X, dtype=complex)
    mu = np.sqrt(-det(X))
    small = np.abs(mu) < 1e-4
    mu_safe = np.where(small, 1.0, mu)
    m2 = mu * mu
    ch = np.where(small, 1.0 + m2 / 2.0 + m2 * m2 / 24.0 + m2**3 / 720.0, np.cosh(mu_safe))
    sh = np.where(small, 1.0 + m2 / 6.0 + m2 * m2 / 120.0 + m2**3 / 5040.0, np.sinh(mu_safe) / mu_safe)
    eye = np.eye(2, dtype=complex)
    return ch[..., None, None] * eye + sh[..., None, None] * X
