"""Bregman-family parameters, the time-rescaling monitor and continuous flows.

Physical time ``t`` and fictive time ``tau`` are linked by ``dt/dtau = g(t)``.
The direct approach integrates the p-Bregman dynamics with ``g == 1``; the
adaptive approach uses ``g(t) = (p / p_ring) * t**(1 - p_ring / p)``, which
maps a uniform fictive grid onto physical steps that grow like
``t**(1 - p_ring/p)``.
"""
from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, NonpositiveTime
from .geometry import hat


class MonitorKind(enum.Enum):
    DIRECT = "direct"
    ADAPTIVE_POWER = "adaptive"


@dataclass(frozen=True)
class BregmanParams:
    """One integrator configuration.

    Attributes
    ----------
    p : float
        Order of the target Bregman dynamics (continuous rate ``O(1/t**p)``).
    p_ring : float
        Order actually integrated, ``0 < p_ring <= p``. ``p_ring == p`` is the
        direct approach.
    c : float
        The constant multiplying the potential term.
    h : float
        Fictive-time step.
    t0 : float
        Initial physical time. The flow is singular at ``t = 0``.
    """

    p: float
    p_ring: float
    c: float = 1.0
    h: float = 1e-3
    t0: float = 1.0

    def __post_init__(self):
        for name in ("p", "p_ring", "c", "h", "t0"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Real):
                raise ConfigInvalid(f"{name} must be a real number, got {value!r}")
            if not (math.isfinite(value) and value > 0):
                raise ConfigInvalid(f"{name} must be a finite positive number, got {value!r}")
        if self.p_ring > self.p:
            raise ConfigInvalid(f"p_ring ({self.p_ring}) must not exceed p ({self.p})")

    @property
    def kind(self) -> MonitorKind:
        return MonitorKind.DIRECT if self.p_ring == self.p else MonitorKind.ADAPTIVE_POWER

    @property
    def ratio(self) -> float:
        """``p / p_ring``; exactly 1.0 for the direct approach."""
        return self.p / self.p_ring

    @property
    def slope(self) -> float:
        """``p_ring / p``; exactly 1.0 for the direct approach."""
        return self.p_ring / self.p


def monitor_g(t: float, params: BregmanParams) -> float:
    """Monitor function ``g(t) = (p/p_ring) * t**(1 - p_ring/p)``."""
    if not t > 0:
        raise NonpositiveTime(f"monitor needs t > 0, got {t!r}")
    if params.p_ring == params.p:
        return 1.0
    return params.ratio * t ** (1.0 - params.slope)


def exact_time_map(tau: float, params: BregmanParams) -> float:
    """Exact solution of ``dt/dtau = g(t)`` with ``t(0) = t0``.

    ``t(tau) = (t0**(p_ring/p) + tau)**(p/p_ring)``; affine when ``p_ring == p``.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau!r}")
    if params.p_ring == params.p:
        return params.t0 + tau
    return (params.t0**params.slope + tau) ** params.ratio


def continuous_el_field_vector(q, v, t: float, obj, params: BregmanParams):
    """First-order form of the p-Bregman Euler-Lagrange equation on R^d.

    ``q'' + (p+1)/t q' + C p^2 t^(p-2) grad f(q) = 0`` is returned as
    ``(dq/dt, dv/dt)``.
    """
    if not t > 0:
        raise NonpositiveTime(f"Euler-Lagrange field needs t > 0, got {t!r}")
    p, c = params.p, params.c
    v = np.asarray(v, dtype=float)
    dv = -((p + 1.0) / t) * v - c * p * p * t ** (p - 2.0) * obj.grad(q)
    return v.copy(), dv


def continuous_el_field_so3(R, omega, t: float, obj, params: BregmanParams):
    """p-Bregman Euler-Lagrange equations on SO(3) with unit inertia.

    Returns ``(dR/dt, dOmega/dt)`` where ``dR/dt = R hat(Omega)`` and
    ``dOmega/dt = -(p+1)/t Omega - Omega x Omega - C p^2 t^(p-2) grad_L f(R)``.
    The gyroscopic term vanishes identically for ``J = I`` but is kept so the
    expression mirrors the general one.
    """
    if not t > 0:
        raise NonpositiveTime(f"Euler-Lagrange field needs t > 0, got {t!r}")
    p, c = params.p, params.c
    omega = np.asarray(omega, dtype=float)
    r_dot = np.asarray(R, dtype=float) @ hat(omega)
    w_dot = (
        -((p + 1.0) / t) * omega
        - np.cross(omega, omega)
        - c * p * p * t ** (p - 2.0) * obj.grad_left(R)
    )
    return r_dot, w_dot
