"""Explicit adaptive Lagrangian Lie group variational integrator on SO(3), J = I."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bregman import BregmanParams
from .errors import NonFinite, NonpositiveTime, StepTooLarge
from .geometry import as_rotation, asin_step_map


@dataclass(frozen=True)
class So3State:
    R: np.ndarray
    mu: np.ndarray
    qt: float
    k: int = 0


def llgvi_init(R0, params: BregmanParams, mu0=None) -> So3State:
    R0 = as_rotation(R0)
    mu0 = np.zeros(3) if mu0 is None else np.array(mu0, dtype=float)
    return So3State(R=R0, mu=mu0, qt=float(params.t0), k=0)


def llgvi_update_vector(s: So3State, grad_left, params: BregmanParams):
    """The vector ``a_k`` whose norm is ``sin`` of the rotation angle of ``F_k``.

    Also returns the momentum after the gradient kick, which ``F_k^T`` then
    transports. ``grad_left`` is ``grad_L f(R_k)``.
    """
    p, h, c = params.p, params.h, params.c
    ratio, slope = params.ratio, params.slope
    qt = s.qt
    kicked = s.mu - (c * h * p * qt ** (2.0 * p - 1.0)) * grad_left
    a = (h * p * ratio**2 * qt ** (1.0 - p - 2.0 * slope)) * kicked
    return a, kicked


def llgvi_adaptive_step(s: So3State, obj, params: BregmanParams) -> So3State:
    """Advance ``(R, mu, qt)`` by one fictive step.

    ``R+ = R F`` with ``F`` an exact rotation, so orthogonality only drifts at
    rounding level. Raises :class:`StepTooLarge` if ``|a_k| >= 1``.
    """
    if not s.qt > 0:
        raise NonpositiveTime(f"physical time must be positive, got {s.qt!r}")
    h, ratio, slope = params.h, params.ratio, params.slope
    a, kicked = llgvi_update_vector(s, obj.grad_left(s.R), params)
    try:
        F = asin_step_map(a)
    except StepTooLarge as exc:
        exc.iteration = s.k + 1
        raise
    qt = s.qt
    qt1 = qt + h * ratio * qt ** (1.0 - slope)
    mu1 = (qt ** (1.0 - slope) / qt1 ** (1.0 - slope)) * (F.T @ kicked)
    R1 = s.R @ F
    if not (math.isfinite(qt1) and np.all(np.isfinite(mu1)) and np.all(np.isfinite(R1))):
        raise NonFinite(f"non-finite state after step {s.k + 1}", iteration=s.k + 1)
    return So3State(R=R1, mu=mu1, qt=qt1, k=s.k + 1)
