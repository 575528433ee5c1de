"""Toda hierarchy flows ``J' = [p(J)_a, J]`` and action-level checks."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .jacobi import (
    JacobiMatrix,
    LaxField,
    PositivityError,
    antisymmetric_commutator,
    degree,
    metric,
    periodic_spectrum,
    shift,
)


class FlowError(ArithmeticError):
    """Non-finite values or a diverging iteration."""


def default_steps(t: float, p) -> int:
    return max(1, math.ceil(1000 * abs(t) * (1 + max(degree(p), 0))))


def lax_rates(J: JacobiMatrix, p) -> tuple[np.ndarray, np.ndarray]:
    """Rates of the window coefficients; tails of eventually free J stay frozen."""
    return antisymmetric_commutator(J, p)


def check_state(J: JacobiMatrix, a: np.ndarray, b: np.ndarray) -> None:
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise FlowError("non-finite coefficients during integration")
    if np.any(a <= J.floor):
        raise PositivityError(f"a_n crossed the positivity floor {J.floor:g} (min a = {a.min():.3g})")


def rk4_step(rhs, state, h):
    """One classical Runge-Kutta step for a tuple-of-arrays state."""
    k1 = rhs(state)
    k2 = rhs(tuple(s + 0.5 * h * k for s, k in zip(state, k1)))
    k3 = rhs(tuple(s + 0.5 * h * k for s, k in zip(state, k2)))
    k4 = rhs(tuple(s + h * k for s, k in zip(state, k3)))
    return tuple(s + (h / 6.0) * (x1 + 2.0 * x2 + 2.0 * x3 + x4) for s, x1, x2, x3, x4 in zip(state, k1, k2, k3, k4))


def lax_flow(J: JacobiMatrix, p, t: float, steps: int | None = None) -> JacobiMatrix:
    """``(t p) . J`` by fixed-step RK4; ``t = 1`` is the action of ``p``."""
    if t == 0:
        return J
    steps = default_steps(t, p) if steps is None else int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = t / steps
    field = LaxField(J, p)

    def rhs(state):
        check_state(J, *state)
        return field(*state)

    state = (J.a.copy(), J.b.copy())
    for _ in range(steps):
        state = rk4_step(rhs, state, h)
    check_state(J, *state)
    return J.with_window(*state)


def lax_flow_batch(Js, p, t: float, steps: int | None = None) -> list[JacobiMatrix]:
    """:func:`lax_flow` for several matrices sharing window and boundary."""
    Js = list(Js)
    if t == 0:
        return Js
    J0 = Js[0]
    for K in Js[1:]:
        if K.size != J0.size or K.n_lo != J0.n_lo or K.boundary != J0.boundary:
            raise ValueError("batched flow needs matrices with identical window and boundary")
    steps = default_steps(t, p) if steps is None else int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = t / steps
    field = LaxField(J0, p)

    def rhs(state):
        check_state(J0, *state)
        return field(*state)

    state = (np.stack([K.a for K in Js]), np.stack([K.b for K in Js]))
    for _ in range(steps):
        state = rk4_step(rhs, state, h)
    check_state(J0, *state)
    return [K.with_window(state[0][i], state[1][i]) for i, K in enumerate(Js)]


def lax_trajectory(J: JacobiMatrix, p, t: float, steps: int | None = None, every: int = 1):
    """Times and coefficient arrays ``(ts, a[k, n], b[k, n])`` along the flow."""
    steps = default_steps(t, p) if steps is None else int(steps)
    h = t / steps
    field = LaxField(J, p)

    def rhs(state):
        check_state(J, *state)
        return field(*state)

    state = (J.a.copy(), J.b.copy())
    ts, As, Bs = [0.0], [state[0]], [state[1]]
    for i in range(1, steps + 1):
        state = rk4_step(rhs, state, h)
        if i % every == 0 or i == steps:
            ts.append(i * h)
            As.append(state[0])
            Bs.append(state[1])
    return np.array(ts), np.array(As), np.array(Bs)


def picard_flow(J: JacobiMatrix, p, t: float, iterations: int, nodes: int = 401, blowup: float = 1e6) -> JacobiMatrix:
    """Picard iterates ``J_{k+1}(s) = J + int_0^s X(J_k(r)) dr`` on a time grid.

    Independent of :func:`lax_flow`: the integral is a cumulative trapezoid
    rule over ``nodes`` points on ``[0, t]``.
    """
    if iterations == 0 or t == 0:
        return J
    s = np.linspace(0.0, t, nodes)
    a = np.tile(J.a, (nodes, 1))
    b = np.tile(J.b, (nodes, 1))
    prev = 0.0
    field = LaxField(J, p)
    for k in range(iterations):
        ra = np.empty_like(a)
        rb = np.empty_like(b)
        for i in range(nodes):
            if np.any(a[i] <= J.floor) or not np.all(np.isfinite(a[i])):
                raise FlowError(f"Picard iterate {k} left the admissible region")
            ra[i], rb[i] = field(a[i], b[i])
        a_new = J.a + cumulative_trapezoid(ra, s, axis=0, initial=0.0)
        b_new = J.b + cumulative_trapezoid(rb, s, axis=0, initial=0.0)
        diff = float(max(np.abs(a_new - a).max(), np.abs(b_new - b).max()))
        if not math.isfinite(diff) or (k > 3 and diff > blowup * max(prev, 1e-300) and diff > 1.0):
            raise FlowError("Picard iteration is not contracting; reduce t")
        prev = diff
        a, b = a_new, b_new
    check_state(J, a[-1], b[-1])
    return J.with_window(a[-1], b[-1])


def isospectrality_check(J: JacobiMatrix, p, t: float, steps: int | None = None) -> float:
    """Max sorted-eigenvalue drift of the periodic truncation along the flow."""
    if not J.periodic:
        raise ValueError("isospectrality check needs a Periodic matrix")
    before = periodic_spectrum(J)
    after = periodic_spectrum(lax_flow(J, p, t, steps))
    return float(np.max(np.abs(after - before)))


def commutativity_check(J: JacobiMatrix, p, q, t: float, steps: int | None = None) -> float:
    """``d(p.(q.J), q.(p.J))`` with each flow run for time ``t``."""
    pq = lax_flow(lax_flow(J, q, t, steps), p, t, steps)
    qp = lax_flow(lax_flow(J, p, t, steps), q, t, steps)
    return metric(pq, qp)


def shift_equivariance_check(J: JacobiMatrix, p, t: float, steps: int | None = None) -> float:
    """``d(S(p.J), p.(SJ))``."""
    return metric(shift(lax_flow(J, p, t, steps), 1), lax_flow(shift(J, 1), p, t, steps))


def metric_continuity_probe(J: JacobiMatrix, J2: JacobiMatrix, p, t: float, steps: int | None = None) -> float:
    """Expansion ratio ``d(p.J, p.J') / d(J, J')`` of the time-t map."""
    d0 = metric(J, J2)
    if d0 == 0:
        raise ValueError("the two matrices coincide; ratio undefined")
    return metric(lax_flow(J, p, t, steps), lax_flow(J2, p, t, steps)) / d0
