import numpy as np
import pytest

from tavi.bregman import BregmanParams, exact_time_map, monitor_g
from tavi.errors import NonFinite, NonpositiveTime
from tavi.integrators_vector import (
    STEPPERS,
    VectorState,
    htvi_adaptive_step,
    htvi_direct_step,
    initial_state,
    integrate,
    ltvi_adaptive_step,
    ltvi_direct_step,
    reference_flow_at,
    reference_flow_vector,
)
from tavi.objectives import Objective, quartic_objective

from conftest import counting, flat, quartic_1d

ALL = list(STEPPERS.values())


def _params(step, p=2.0, p_ring=2.0, **kw):
    if step in (ltvi_direct_step, htvi_direct_step):
        p_ring = p
    return BregmanParams(p=p, p_ring=p_ring, **kw)


@pytest.mark.parametrize("step", ALL)
def test_fixed_point(step):
    prm = _params(step, p=6.0, p_ring=2.0, h=0.01)
    s = VectorState(np.array([0.3, -1.0]), np.zeros(2), 1.7)
    s1 = step(s, flat(2), prm)
    assert np.array_equal(s1.q, s.q) and np.array_equal(s1.r, np.zeros(2))
    assert s1.qt == pytest.approx(1.7 + 0.01 * monitor_g(1.7, prm), rel=1e-15)
    assert s1.k == 1


def test_single_step_values():
    obj = quartic_1d()
    s = VectorState(np.zeros(1), np.zeros(1), 1.0)
    prm = BregmanParams(2.0, 2.0, c=1.0, h=0.1)
    assert ltvi_adaptive_step(s, obj, prm).q[0] == pytest.approx(0.16, rel=1e-15)
    s_moving = VectorState(np.zeros(1), np.ones(1), 1.0)
    out = ltvi_direct_step(s_moving, obj, prm)
    assert out.q[0] == pytest.approx(0.36, rel=1e-15)
    assert out.r[0] == pytest.approx(1.8, rel=1e-14)
    for step in (htvi_adaptive_step, htvi_direct_step):
        out = step(s, obj, prm)
        assert out.r[0] == pytest.approx(0.8, rel=1e-15)
        assert out.q[0] == pytest.approx(0.16, rel=1e-15)


def test_single_step_adaptive_formula():
    # p = 6, p_ring = 2 evaluated straight from the p^3/p_ring^2 form of the update
    obj = quartic_objective(2)
    p, pr, c, h = 6.0, 2.0, 0.7, 0.01
    q, r, t = np.array([0.2, -0.4]), np.array([0.5, 0.1]), 1.3
    g = obj.grad(q)
    t1 = t + h * (p / pr) * t ** (1 - pr / p)
    q1 = q + (h * p**3 / (pr**2 * t ** (p - 1 + 2 * pr / p))) * r - (c * h**2 * p**4 / pr**2) * t ** (p - 2 * pr / p) * g
    r1 = (pr**2 * t ** (p + pr / p) / (h * p**3 * t1 ** (1 - pr / p))) * (q1 - q)
    out = ltvi_adaptive_step(VectorState(q, r, t), obj, BregmanParams(p, pr, c=c, h=h))
    np.testing.assert_allclose(out.q, q1, rtol=1e-14)
    np.testing.assert_allclose(out.r, r1, rtol=1e-13)
    assert out.qt == pytest.approx(t1, rel=1e-15)

    r1h = r - (p**2 / pr) * c * h * t ** (2 * p - pr / p) * g
    q1h = q + (p**2 / pr) * h * t ** (-p - pr / p) * r1h
    out = htvi_adaptive_step(VectorState(q, r, t), obj, BregmanParams(p, pr, c=c, h=h))
    np.testing.assert_allclose(out.r, r1h, rtol=1e-14)
    np.testing.assert_allclose(out.q, q1h, rtol=1e-14)


def test_displacement_from_rest_scales_as_h_squared():
    obj = quartic_1d()
    s = VectorState(np.zeros(1), np.zeros(1), 1.0)
    a = ltvi_adaptive_step(s, obj, BregmanParams(4, 2, h=0.02)).q[0]
    b = ltvi_adaptive_step(s, obj, BregmanParams(4, 2, h=0.01)).q[0]
    assert a / b == pytest.approx(4.0, rel=1e-12)


def test_htvi_is_symplectic_euler_on_quadratic():
    # H(q, r, t) = p/(2 t^(p+1)) |r|^2 + C p t^(2p-1) f(q), with coefficients frozen at t_k
    k = np.diag([1.0, 3.0])
    obj = Objective(f=lambda x: 0.5 * float(x @ k @ x), grad=lambda x: k @ x, dim=2)
    p, c, h, t = 3.0, 1.0, 1e-3, 1.2
    q, r = np.array([1.0, -0.5]), np.array([0.2, 0.4])
    r1 = r - h * c * p * t ** (2 * p - 1) * (k @ q)
    q1 = q + h * (p / t ** (p + 1)) * r1
    out = htvi_direct_step(VectorState(q, r, t), obj, BregmanParams(p, p, c=c, h=h))
    np.testing.assert_allclose(out.r, r1, rtol=1e-15)
    np.testing.assert_allclose(out.q, q1, rtol=1e-15)


@pytest.mark.parametrize("step", ALL)
def test_one_gradient_per_step(step):
    obj = counting(quartic_objective(3))
    prm = _params(step, p=6.0, p_ring=2.0, h=1e-3)
    integrate(step, initial_state(np.zeros(3), prm), obj, prm, 25)
    assert obj.calls == 25


def test_errors():
    prm = BregmanParams(2, 2, h=0.1)
    with pytest.raises(NonpositiveTime):
        ltvi_direct_step(VectorState(np.zeros(1), np.zeros(1), 0.0), quartic_1d(), prm)
    blowup = Objective(f=lambda x: 0.0, grad=lambda x: np.array([np.inf]), dim=1)
    for step in ALL:
        with pytest.raises(NonFinite) as info:
            step(VectorState(np.zeros(1), np.zeros(1), 1.0, k=4), blowup, prm)
        assert info.value.iteration == 5


def test_direct_specialization_identity():
    rng = np.random.default_rng(3)
    obj = quartic_objective(4)
    for _ in range(200):
        p = float(rng.uniform(0.5, 8))
        prm = BregmanParams(p, p, c=float(rng.uniform(0.1, 2)), h=float(rng.uniform(1e-4, 1e-1)))
        s = VectorState(rng.standard_normal(4), rng.standard_normal(4), float(rng.uniform(0.5, 20)))
        for a, b in ((ltvi_adaptive_step, ltvi_direct_step), (htvi_adaptive_step, htvi_direct_step)):
            x, y = a(s, obj, prm), b(s, obj, prm)
            assert np.max(np.abs(x.q - y.q)) <= 1e-15 * max(1.0, np.max(np.abs(y.q)))
            assert np.max(np.abs(x.r - y.r)) <= 1e-15 * max(1.0, np.max(np.abs(y.r)))
            assert x.qt == y.qt


def test_ltvi_htvi_agree():
    obj = quartic_objective(3)
    prm = BregmanParams(6, 2, c=1.0, h=1e-3)
    s0 = initial_state(np.zeros(3), prm)
    a = integrate(ltvi_adaptive_step, s0, obj, prm, 1000)
    b = integrate(htvi_adaptive_step, s0, obj, prm, 1000)
    fa = np.array([obj.f(s.q) for s in a])
    fb = np.array([obj.f(s.q) for s in b])
    assert np.max(np.abs(fa - fb) / (1 + np.abs(fb))) <= 1e-3
    # from rest the two momenta differ exactly by the monitor factor
    for sa, sb in zip(a[1:50], b[1:50]):
        np.testing.assert_allclose(sb.r, monitor_g(sa.qt, prm) * sa.r, rtol=1e-9)


def test_physical_time_law():
    for step in (ltvi_adaptive_step, htvi_adaptive_step):
        ratios = []
        for h in (0.01, 0.005):
            prm = BregmanParams(6, 2, h=h)
            states = integrate(step, initial_state(np.zeros(2), prm), flat(2), prm, round(1 / h))
            ratios.append(max(abs(s.qt - exact_time_map(s.k * h, prm)) for s in states) / h)
        assert ratios[1] == pytest.approx(ratios[0], rel=0.1)


@pytest.mark.parametrize("method", ["ltvi", "htvi"])
@pytest.mark.parametrize("p,p_ring", [(2.0, 2.0), (4.0, 2.0)])
def test_first_order_convergence_to_continuous_flow(method, p, p_ring):
    obj = quartic_objective(2)
    mode = "direct" if p == p_ring else "adaptive"
    step = STEPPERS[(method, mode)]
    errs = []
    for h in (0.004, 0.002, 0.001):
        prm = BregmanParams(p, p_ring, h=h)
        s, qs, ts = initial_state(np.zeros(2), prm), [], []
        while True:
            s = step(s, obj, prm)
            if s.qt > 2.0:
                break
            qs.append(s.q)
            ts.append(s.qt)
        ref = reference_flow_at(np.zeros(2), np.zeros(2), 1.0, ts, obj, prm, max_dt=1e-3)
        errs.append(np.max(np.linalg.norm(np.array(qs) - ref, axis=1)))
    for a, b in zip(errs, errs[1:]):
        assert 1.6 <= a / b <= 2.4


def test_reference_flow_equilibrium():
    prm = BregmanParams(3, 3)
    q0 = np.array([0.4, -2.0])
    q, v = reference_flow_vector(q0, np.zeros(2), 1.0, 3.0, 17, flat(2), prm)
    assert np.array_equal(q, q0) and np.array_equal(v, np.zeros(2))
    with pytest.raises(ValueError):
        reference_flow_vector(q0, np.zeros(2), 2.0, 1.0, 10, flat(2), prm)


def test_reference_flow_fourth_order():
    # smooth quadratic objective so the error is in the asymptotic regime
    obj = Objective(f=lambda x: 0.5 * float((x - 1) @ (x - 1)), grad=lambda x: x - 1.0, dim=2)
    prm = BregmanParams(2, 2)
    z = np.zeros(2)
    ref = reference_flow_vector(z, z, 1.0, 3.0, 20000, obj, prm)[0]
    errs = [np.linalg.norm(reference_flow_vector(z, z, 1.0, 3.0, n, obj, prm)[0] - ref) for n in (25, 50, 100)]
    for a, b in zip(errs, errs[1:]):
        assert 14 <= a / b <= 18


def test_reference_flow_decreases_quartic():
    # f oscillates along the flow, so the check is on the envelope: the
    # largest value in each successive window of [1, 50] keeps falling
    obj = quartic_objective(2)
    prm = BregmanParams(4, 4)
    times = np.linspace(1.0 + 49.0 / 200, 50.0, 200)
    qs = reference_flow_at(np.zeros(2), np.zeros(2), 1.0, times, obj, prm, max_dt=2e-3)
    f = np.array([obj.f(q) for q in qs])
    peaks = [w.max() for w in np.array_split(np.concatenate([[obj.f(np.zeros(2))], f]), 5)]
    assert all(b < a for a, b in zip(peaks, peaks[1:]))


@pytest.mark.parametrize("p", [2.0, 4.0])
def test_quartic_flow_decays_like_t_to_minus_2p(p):
    # With x - 1 = t^(-p/2) u(ln t) the quartic flow becomes an undamped
    # oscillator in u, so f ~ t^(-2p) times a bounded oscillation.
    obj = quartic_objective(2)
    prm = BregmanParams(p, p)
    times = np.geomspace(10.0, 100.0, 200)
    qs = reference_flow_at(np.zeros(2), np.zeros(2), 1.0, times, obj, prm, max_dt=0.01)
    slope = np.polyfit(np.log(times), np.log([obj.f(q) for q in qs]), 1)[0]
    assert abs(slope + 2 * p) <= 0.1 * 2 * p
