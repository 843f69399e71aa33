"""Explicit time-adaptive variational integrators on R^d.

All four steppers share the physical-time recursion ``qt+ = qt + h g(qt)``
and evaluate the objective gradient exactly once per step. The adaptive
variants are written in terms of ``ratio = p/p_ring`` and ``slope =
p_ring/p`` so that at ``p_ring == p`` every factor collapses to an exact 1.0
and the arithmetic coincides with the direct variants bit for bit.

The LTVI momentum ``r`` is the discrete Legendre momentum ``-D1 L_d``; the
HTVI momentum is the Hamiltonian one. They differ by the monitor factor
(``r_htvi = g(qt) r_ltvi``), so the two methods started from rest trace the
same positions up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bregman import BregmanParams, continuous_el_field_vector
from .errors import NonFinite, NonpositiveTime


@dataclass(frozen=True)
class VectorState:
    q: np.ndarray
    r: np.ndarray
    qt: float
    k: int = 0


def initial_state(q0, params: BregmanParams, r0=None) -> VectorState:
    q0 = np.array(q0, dtype=float)
    r0 = np.zeros_like(q0) if r0 is None else np.array(r0, dtype=float)
    return VectorState(q=q0, r=r0, qt=float(params.t0), k=0)


def _finish(s: VectorState, q1, r1, qt1) -> VectorState:
    if not (math.isfinite(qt1) and np.all(np.isfinite(q1)) and np.all(np.isfinite(r1))):
        raise NonFinite(f"non-finite state after step {s.k + 1}", iteration=s.k + 1)
    return VectorState(q=q1, r=r1, qt=qt1, k=s.k + 1)


def _check_time(qt):
    if not qt > 0:
        raise NonpositiveTime(f"physical time must be positive, got {qt!r}")


def ltvi_adaptive_step(s: VectorState, obj, params: BregmanParams) -> VectorState:
    """One step of the time-adaptive Lagrangian Taylor variational integrator."""
    _check_time(s.qt)
    p, h, c = params.p, params.h, params.c
    ratio, slope = params.ratio, params.slope
    qt = s.qt
    grad = obj.grad(s.q)
    qt1 = qt + h * ratio * qt ** (1.0 - slope)
    q1 = (
        s.q
        + (h * p * ratio**2 / qt ** (p - 1.0 + 2.0 * slope)) * s.r
        - (c * h * h * p * p * ratio**2 * qt ** (p - 2.0 * slope)) * grad
    )
    r1 = (qt ** (p + slope) / (h * p * ratio**2 * qt1 ** (1.0 - slope))) * (q1 - s.q)
    return _finish(s, q1, r1, qt1)


def ltvi_direct_step(s: VectorState, obj, params: BregmanParams) -> VectorState:
    """Direct LTVI: the adaptive scheme with ``g == 1``."""
    _check_time(s.qt)
    p, h, c = params.p, params.h, params.c
    qt = s.qt
    grad = obj.grad(s.q)
    qt1 = qt + h
    q1 = s.q + (h * p / qt ** (p + 1.0)) * s.r - (c * h * h * p * p * qt ** (p - 2.0)) * grad
    r1 = (qt ** (p + 1.0) / (h * p)) * (q1 - s.q)
    return _finish(s, q1, r1, qt1)


def htvi_adaptive_step(s: VectorState, obj, params: BregmanParams) -> VectorState:
    """Adaptive Hamiltonian Taylor variational integrator (kick, then drift)."""
    _check_time(s.qt)
    p, h, c = params.p, params.h, params.c
    ratio, slope = params.ratio, params.slope
    qt = s.qt
    grad = obj.grad(s.q)
    qt1 = qt + h * ratio * qt ** (1.0 - slope)
    r1 = s.r - (h * c * p * ratio * qt ** (2.0 * p - slope)) * grad
    q1 = s.q + (h * p * ratio * qt ** (-p - slope)) * r1
    return _finish(s, q1, r1, qt1)


def htvi_direct_step(s: VectorState, obj, params: BregmanParams) -> VectorState:
    _check_time(s.qt)
    p, h, c = params.p, params.h, params.c
    qt = s.qt
    grad = obj.grad(s.q)
    qt1 = qt + h
    r1 = s.r - (h * c * p * qt ** (2.0 * p - 1.0)) * grad
    q1 = s.q + (h * p * qt ** (-p - 1.0)) * r1
    return _finish(s, q1, r1, qt1)


STEPPERS = {
    ("ltvi", "adaptive"): ltvi_adaptive_step,
    ("ltvi", "direct"): ltvi_direct_step,
    ("htvi", "adaptive"): htvi_adaptive_step,
    ("htvi", "direct"): htvi_direct_step,
}


def integrate(stepper, state: VectorState, obj, params: BregmanParams, n_steps: int):
    """Run ``n_steps`` steps and return every state, the initial one included."""
    states = [state]
    for _ in range(n_steps):
        state = stepper(state, obj, params)
        states.append(state)
    return states


def reference_flow_vector(q0, v0, t0: float, t1: float, n_steps: int, obj, params: BregmanParams):
    """Classical RK4 on the continuous p-Bregman flow from ``t0`` to ``t1``.

    Fixed step ``(t1 - t0) / n_steps`` in physical time. Returns ``(q, v)`` at
    ``t1``. Used as an oracle, so it shares nothing with the steppers above
    except the objective.
    """
    if not 0 < t0 < t1:
        raise ValueError(f"need 0 < t0 < t1, got t0={t0!r}, t1={t1!r}")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    q = np.array(q0, dtype=float)
    v = np.array(v0, dtype=float)
    dt = (t1 - t0) / n_steps
    half = 0.5 * dt
    for i in range(n_steps):
        t = t0 + i * dt
        k1q, k1v = continuous_el_field_vector(q, v, t, obj, params)
        k2q, k2v = continuous_el_field_vector(q + half * k1q, v + half * k1v, t + half, obj, params)
        k3q, k3v = continuous_el_field_vector(q + half * k2q, v + half * k2v, t + half, obj, params)
        k4q, k4v = continuous_el_field_vector(q + dt * k3q, v + dt * k3v, t + dt, obj, params)
        q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise NonFinite(f"reference flow diverged at t = {t + dt!r}", iteration=i + 1)
    return q, v


def reference_flow_at(q0, v0, t0: float, times, obj, params: BregmanParams, max_dt: float = 1e-3):
    """Reference positions at each of the increasing ``times`` (all > ``t0``).

    Chains :func:`reference_flow_vector` between consecutive sample times with
    at most ``max_dt`` per RK4 step.
    """
    q = np.array(q0, dtype=float)
    v = np.array(v0, dtype=float)
    t = float(t0)
    out = []
    for target in times:
        target = float(target)
        if target > t:
            n = max(1, math.ceil((target - t) / max_dt))
            q, v = reference_flow_vector(q, v, t, target, n, obj, params)
            t = target
        out.append(q.copy())
    return np.array(out)
