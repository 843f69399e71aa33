"""Trajectory checks against the discrete extended Euler-Lagrange equations.

The explicit updates are the closed-form solution of a two-point discrete
Lagrangian's Euler-Lagrange equations. Given three consecutive states we
re-evaluate those equations with analytically coded partials of ``L_d`` and
report the defect. On-shell data leaves rounding noise only; perturbing any
state leaves a defect proportional to the perturbation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bregman import BregmanParams, monitor_g
from .errors import NotSkew
from .geometry import vee
from .integrators_so3 import llgvi_update_vector
from .integrators_vector import initial_state, ltvi_adaptive_step, reference_flow_at


@dataclass(frozen=True)
class DelResidual:
    """Defects of one triplet.

    ``position_scale`` is the size of the terms that cancel in the position
    equation; rounding noise grows with it, so tolerances are applied to
    :attr:`relative_position`.
    """

    position_residual: float
    time_residual: float
    position_scale: float = 0.0

    @property
    def relative_position(self) -> float:
        return self.position_residual / (1.0 + self.position_scale)

    def within(self, position_tol: float, time_tol: float) -> bool:
        return self.relative_position <= position_tol and self.time_residual <= time_tol


def _kinetic_weight(qt, params: BregmanParams) -> float:
    # p_ring^2 / (h p^3) * qt^(p - 1 + 2 p_ring/p), written with ratio = p/p_ring
    p = params.p
    return qt ** (p - 1.0 + 2.0 * params.slope) / (params.h * p * params.ratio**2)


def discrete_lagrangian_vector(qk, qtk, qk1, qtk1, obj, params: BregmanParams) -> float:
    """Rectangle-rule discrete Lagrangian of the time-rescaled Bregman Lagrangian.

    ``qtk1`` is accepted for signature symmetry; the rectangle rule anchored at
    the left endpoint does not depend on it.
    """
    dq = np.asarray(qk1, dtype=float) - np.asarray(qk, dtype=float)
    p = params.p
    potential = params.c * params.h * p * qtk ** (2.0 * p - 1.0) * obj.f(qk)
    return 0.5 * _kinetic_weight(qtk, params) * float(dq @ dq) - potential


def lagrangian_partials(qk, qtk, qk1, obj, params: BregmanParams):
    """``(D1 L_d, D3 L_d)``: derivatives in the left and right positions."""
    kin, force = _partial_terms(qk, qtk, qk1, obj, params)
    return -kin - force, kin


def _partial_terms(qk, qtk, qk1, obj, params: BregmanParams):
    # D3 L_d = kin and D1 L_d = -kin - force
    dq = np.asarray(qk1, dtype=float) - np.asarray(qk, dtype=float)
    p = params.p
    kin = _kinetic_weight(qtk, params) * dq
    force = (params.c * params.h * p * qtk ** (2.0 * p - 1.0)) * obj.grad(qk)
    return kin, force


def _time_defect(qt0, qt1, params: BregmanParams) -> float:
    return abs(qt1 - qt0 - params.h * monitor_g(qt0, params))


def _position_equation(triplet, obj, params: BregmanParams, w_k: float, w_km1: float):
    """``w_k D1 L_d(k) + w_km1 D3 L_d(k-1)`` and the largest term in it."""
    s0, s1, s2 = triplet
    kin_k, force_k = _partial_terms(s1.q, s1.qt, s2.q, obj, params)
    kin_km1, _ = _partial_terms(s0.q, s0.qt, s1.q, obj, params)
    terms = (-w_k * kin_k, -w_k * force_k, w_km1 * kin_km1)
    defect = terms[0] + terms[1] + terms[2]
    scale = max(float(np.linalg.norm(t)) for t in terms)
    return float(np.linalg.norm(defect)), scale


def del_residual_vector(triplet, obj, params: BregmanParams) -> DelResidual:
    """Defect of the position and time equations at the middle state.

    Position equation: ``g(qt_k) D1 L_d(k) + g(qt_{k-1}) D3 L_d(k-1) = 0``,
    with the time derivative of the physical clock taken on-shell as ``g``.
    """
    s0, s1, s2 = triplet
    res, scale = _position_equation(
        triplet, obj, params, monitor_g(s1.qt, params), monitor_g(s0.qt, params)
    )
    time_res = max(_time_defect(s0.qt, s1.qt, params), _time_defect(s1.qt, s2.qt, params))
    return DelResidual(res, time_res, scale)


def del_residual_framework2(triplet, obj, params: BregmanParams) -> DelResidual:
    """Same position equation, weighted by the realised clock rates.

    This variant multiplies ``D1``/``D3`` by the finite
    differences ``(qt_{k+1} - qt_k) / h`` instead of ``g(qt_k)``. Off-shell in
    time the two residuals differ; on-shell they agree to rounding.
    """
    s0, s1, s2 = triplet
    h = params.h
    res, scale = _position_equation(triplet, obj, params, (s2.qt - s1.qt) / h, (s1.qt - s0.qt) / h)
    time_res = max(_time_defect(s0.qt, s1.qt, params), _time_defect(s1.qt, s2.qt, params))
    return DelResidual(res, time_res, scale)


def _so3_transition_defects(s0, s1, obj, params: BregmanParams):
    """Defects of one LLGVI transition ``s0 -> s1``.

    Returns ``(momentum_defect, update_defect, momentum_scale)``. The update
    defect compares ``vee((F - F^T)/2) = sin(theta) axis(F)`` with ``a_k``
    recomputed from ``s0``; ``F = R_k^T R_{k+1}`` is recovered from the states.
    """
    F = s0.R.T @ s1.R
    a, kicked = llgvi_update_vector(s0, obj.grad_left(s0.R), params)
    try:
        sin_axis = vee(0.5 * (F - F.T))
    except NotSkew:  # pragma: no cover - 0.5 (F - F^T) is skew by construction
        return math.inf, math.inf, 0.0
    expo = 1.0 - params.slope
    transported = (s0.qt**expo / s1.qt**expo) * (F.T @ kicked)
    return (
        float(np.linalg.norm(s1.mu - transported)),
        float(np.linalg.norm(sin_axis - a)),
        float(np.linalg.norm(transported)),
    )


def del_residual_so3(triplet, obj, params: BregmanParams) -> DelResidual:
    """LLGVI residual over both transitions of a triplet.

    ``position_residual`` is the largest of the momentum-transport defect
    ``mu_{k+1} - (g_k/g_{k+1}) F_k^T [mu_k - C h p qt_k^(2p-1) grad_L f(R_k)]``
    and the ``a_k``/``F_k`` consistency defect, over ``k-1 -> k`` and
    ``k -> k+1``.
    """
    s0, s1, s2 = triplet
    m0, u0, sc0 = _so3_transition_defects(s0, s1, obj, params)
    m1, u1, sc1 = _so3_transition_defects(s1, s2, obj, params)
    time_res = max(_time_defect(s0.qt, s1.qt, params), _time_defect(s1.qt, s2.qt, params))
    return DelResidual(max(m0, u0, m1, u1), time_res, max(sc0, sc1))


def trajectory_residual(states, obj, params: BregmanParams, residual=del_residual_vector) -> DelResidual:
    """Residual of the triplet with the worst relative position defect.

    The time residual reported is the worst over the whole trajectory.
    """
    worst = DelResidual(0.0, 0.0, 0.0)
    tim = 0.0
    for i in range(1, len(states) - 1):
        res = residual((states[i - 1], states[i], states[i + 1]), obj, params)
        if res.relative_position >= worst.relative_position:
            worst = res
        tim = max(tim, res.time_residual)
    return DelResidual(worst.position_residual, tim, worst.position_scale)


def rescaling_check(params: BregmanParams, obj, tau_end: float, h: float, q0=None, max_dt: float = 1e-3) -> float:
    """Max distance between the adaptive trajectory and the p-Bregman flow.

    Runs the adaptive LTVI with fictive step ``h`` up to ``tau_end`` from rest
    and compares ``q_k`` with an RK4 solution of the continuous p-Bregman
    equation evaluated at the physical times ``qt_k`` the integrator reached.
    The result shrinks at first order in ``h``.
    """
    if not tau_end > 0:
        raise ValueError(f"tau_end must be positive, got {tau_end!r}")
    prm = replace(params, h=h)
    q0 = np.zeros(obj.dim) if q0 is None else np.asarray(q0, dtype=float)
    n = max(1, round(tau_end / h))
    state = initial_state(q0, prm)
    qs, ts = [], []
    for _ in range(n):
        state = ltvi_adaptive_step(state, obj, prm)
        qs.append(state.q)
        ts.append(state.qt)
    ref = reference_flow_at(q0, np.zeros_like(q0), prm.t0, ts, obj, prm, max_dt=max_dt)
    return float(np.max(np.linalg.norm(np.array(qs) - ref, axis=1)))


# -- verification suite ---------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


RESIDUAL_TOL = 1e-10
PERTURBATION = 1e-3
DETECTION_FLOOR = 1e-6


def _perturbed_q(triplet, eps=PERTURBATION):
    s0, s1, s2 = triplet
    q = s1.q.copy()
    q[0] += eps
    return (s0, replace(s1, q=q), s2)


def _check_vector_residuals(n_steps: int):
    from .integrators_vector import STEPPERS, integrate
    from .objectives import quartic_objective

    obj = quartic_objective(3)
    out = []
    for p, p_ring, h in ((6.0, 2.0, 1e-3), (6.0, 6.0, 1e-3), (4.0, 2.0, 1e-3), (2.0, 2.0, 1e-2)):
        mode = "direct" if p_ring == p else "adaptive"
        prm = BregmanParams(p=p, p_ring=p_ring, h=h)
        for method in ("ltvi", "htvi"):
            states = integrate(STEPPERS[(method, mode)], initial_state(np.zeros(3), prm), obj, prm, n_steps)
            for label, fn in (("fw1", del_residual_vector), ("fw2", del_residual_framework2)):
                res = trajectory_residual(states, obj, prm, fn)
                mid = len(states) // 2
                probe = fn(_perturbed_q(tuple(states[mid - 1 : mid + 2])), obj, prm)
                ok = res.within(RESIDUAL_TOL, RESIDUAL_TOL) and probe.relative_position >= DETECTION_FLOOR
                out.append(
                    CheckResult(
                        f"del residual {method} {mode} p={p:g}->{p_ring:g} {label}",
                        ok,
                        f"position {res.relative_position:.2e}, time {res.time_residual:.2e}, "
                        f"perturbed {probe.relative_position:.2e}",
                    )
                )
    return out


def _check_so3(n_steps: int, seeds):
    from .geometry import orthogonality_error
    from .integrators_so3 import llgvi_adaptive_step, llgvi_init
    from .objectives import random_wahba_matrix, wahba_objective

    prm = BregmanParams(p=6.0, p_ring=2.0, h=2e-5)
    out = []
    for seed in seeds:
        obj = wahba_objective(random_wahba_matrix(seed))
        states = [llgvi_init(np.eye(3), prm)]
        for _ in range(n_steps):
            states.append(llgvi_adaptive_step(states[-1], obj, prm))
        res = trajectory_residual(states, obj, prm, del_residual_so3)
        orth = max(orthogonality_error(s.R) for s in states)
        s0, s1, s2 = states[n_steps // 2 - 1 : n_steps // 2 + 2]
        bumped = replace(s2, mu=s2.mu + PERTURBATION)
        probe = del_residual_so3((s0, s1, bumped), obj, prm)
        ok = res.within(RESIDUAL_TOL, RESIDUAL_TOL) and orth <= 1e-8 and probe.position_residual >= 1e-4
        out.append(
            CheckResult(
                f"llgvi residual and orthogonality seed={seed}",
                ok,
                f"position {res.position_residual:.2e}, time {res.time_residual:.2e}, "
                f"orth {orth:.2e}, perturbed {probe.position_residual:.2e}",
            )
        )
    return out


def _check_gradients(n_points: int):
    from .objectives import fd_check_so3, fd_check_vector, quartic_objective, random_rotation, wahba_objective

    rng = np.random.default_rng(20240601)
    out = []
    for d in (1, 3, 10):
        obj = quartic_objective(d)
        worst = max(fd_check_vector(obj, rng.uniform(-2.0, 2.0, d)) for _ in range(n_points))
        out.append(CheckResult(f"quartic gradient d={d}", worst <= 1e-6, f"worst {worst:.2e}"))
    worst = 0.0
    for _ in range(n_points):
        obj = wahba_objective(rng.uniform(-1.0, 1.0, (3, 3)))
        worst = max(worst, fd_check_so3(obj, random_rotation(rng)))
    out.append(CheckResult("wahba left-trivialized gradient", worst <= 1e-6, f"worst {worst:.2e}"))
    return out


def _check_direct_identity(n_cases: int):
    from .integrators_vector import STEPPERS, VectorState
    from .objectives import quartic_objective

    rng = np.random.default_rng(7)
    obj = quartic_objective(3)
    worst = 0.0
    for _ in range(n_cases):
        p = float(rng.uniform(1.0, 8.0))
        prm = BregmanParams(p=p, p_ring=p, h=float(rng.uniform(1e-4, 1e-2)), t0=1.0)
        s = VectorState(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3), float(rng.uniform(1.0, 5.0)))
        for method in ("ltvi", "htvi"):
            a = STEPPERS[(method, "adaptive")](s, obj, prm)
            b = STEPPERS[(method, "direct")](s, obj, prm)
            worst = max(worst, float(np.max(np.abs(a.q - b.q))), float(np.max(np.abs(a.r - b.r))), abs(a.qt - b.qt))
    return [CheckResult("adaptive at p_ring = p equals direct", worst <= 1e-15, f"worst {worst:.2e}")]


def _check_rescaling():
    from .objectives import quartic_objective

    prm = BregmanParams(p=4.0, p_ring=2.0)
    obj = quartic_objective(1)
    errs = [rescaling_check(prm, obj, 1.0, h) for h in (0.01, 0.005)]
    ratio = errs[0] / errs[1]
    return [CheckResult("time-dilation first order", 1.6 <= ratio <= 2.4, f"error ratio {ratio:.3f}")]


def run_suite(quick: bool = False) -> list:
    """Residual and property checks; every entry must pass."""
    results = []
    results += _check_gradients(20 if quick else 100)
    results += _check_direct_identity(50 if quick else 200)
    results += _check_vector_residuals(200 if quick else 1000)
    results += _check_so3(1000 if quick else 10_000, (0,) if quick else (0, 1))
    if not quick:
        results += _check_rescaling()
    return results
