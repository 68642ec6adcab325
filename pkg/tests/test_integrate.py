"""Integrator accuracy, event location, and limit-cycle measurement
against analytic solutions and an independent reference integrator."""

import math

import numpy as np
import pytest

from flowcurv.errors import (
    ConvergenceError,
    DivergenceError,
    IntegrationError,
)
from flowcurv.integrate import (
    Trajectory,
    find_zero_crossings,
    integrate,
    limit_cycle,
)
from flowcurv.manifold import ManifoldScalar
from flowcurv.models import builtin, parse_model


# -- accuracy against analytic solutions --------------------------------

def test_linear2_endpoint():
    tr = integrate(builtin("linear2"), [1.0, 1.0], 1.0)
    want = np.array([math.exp(-1.0), math.exp(-2.0)])
    assert np.max(np.abs(tr.states[-1] - want)) <= 1e-6


def test_harmonic_period_return():
    tr = integrate(builtin("harmonic"), [1.0, 0.0], 2.0 * math.pi)
    assert np.max(np.abs(tr.states[-1] - [1.0, 0.0])) <= 1e-6


def test_harmonic_energy_conservation():
    tr = integrate(builtin("harmonic"), [1.0, 0.0], 100.0, rtol=1e-10, atol=1e-13)
    energy = np.sum(tr.states**2, axis=1)
    assert np.max(np.abs(energy - 1.0)) <= 1e-8


def test_lorenz_stays_in_attractor_box():
    tr = integrate(builtin("lorenz"), [1.0, 1.0, 1.0], 50.0, transient=10.0)
    x, y, z = tr.states.T
    assert np.all(np.abs(x) <= 25) and np.all(np.abs(y) <= 35)
    assert np.all((z >= 0) & (z <= 55))


def test_rk4_fourth_order_convergence():
    f = builtin("linear2")
    want = np.array([math.exp(-1.0), math.exp(-2.0)])

    def endpoint_error(step):
        tr = integrate(f, [1.0, 1.0], 1.0, method="rk4", step=step)
        return np.max(np.abs(tr.states[-1] - want))

    e1, e2, e3 = (endpoint_error(h) for h in (0.1, 0.05, 0.025))
    assert 14.0 <= e1 / e2 <= 18.0
    assert 14.0 <= e2 / e3 <= 18.0


def test_rk4_step_rounding():
    f = builtin("harmonic")
    tr = integrate(f, [1.0, 0.0], 1.0, method="rk4", step=0.3)
    # 1.0/0.3 rounds to 3 equal steps covering the duration exactly
    assert len(tr.times) == 4
    assert tr.times[-1] == 1.0
    tr = integrate(f, [1.0, 0.0], 0.1, method="rk4", step=5.0)
    assert len(tr.times) == 2  # never fewer than one step


def test_reference_integrator_agreement():
    scipy_integrate = pytest.importorskip("scipy.integrate")
    f = builtin("lorenz")
    x0 = [1.0, 1.0, 1.0]
    tr = integrate(f, x0, 2.0, rtol=1e-11, atol=1e-13)
    sol = scipy_integrate.solve_ivp(
        lambda t, y: f.velocity(y),
        (0.0, 2.0),
        x0,
        method="RK45",
        rtol=1e-11,
        atol=1e-13,
    )
    assert np.max(np.abs(tr.states[-1] - sol.y[:, -1])) <= 1e-7


# -- Trajectory container ------------------------------------------------

def test_trajectory_invariants_enforced():
    t = np.array([0.0, 1.0, 1.0])
    s = np.zeros((3, 2))
    with pytest.raises(ValueError):
        Trajectory(t, s, s, "rk4", None, None, 0.5, {})
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), s, s, "rk4", None, None, 0.5, {})
    bad = s.copy()
    bad[1, 0] = np.nan
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0, 2.0]), bad, s, "rk4", None, None, 0.5, {})


def test_trajectory_metadata_and_stats():
    tr = integrate(builtin("harmonic"), [1.0, 0.0], 1.0, method="rk4", step=0.1)
    assert tr.method == "rk4" and tr.step == 0.1
    assert tr.dimension == 2
    assert tr.stats["steps_accepted"] == 10
    assert tr.stats["rhs_evaluations"] == 1 + 4 * 10
    tr = integrate(builtin("harmonic"), [1.0, 0.0], 1.0)
    assert tr.method == "rkdp54" and tr.rtol == 1e-9 and tr.atol == 1e-12
    assert tr.stats["rhs_evaluations"] >= 6 * tr.stats["steps_accepted"]


def test_sample_reproduces_knots_and_interpolates():
    f = builtin("harmonic")
    tr = integrate(f, [1.0, 0.0], 5.0)
    got = tr.sample(tr.times)
    assert np.array_equal(got, tr.states)
    mids = 0.5 * (tr.times[:-1] + tr.times[1:])
    vals = tr.sample(mids)
    want = np.column_stack([np.cos(mids), -np.sin(mids)])
    assert np.max(np.abs(vals - want)) <= 1e-5
    single = tr.sample(float(mids[3]))
    assert single.shape == (2,)
    assert np.array_equal(single, vals[3])
    with pytest.raises(ValueError):
        tr.sample(5.1)
    with pytest.raises(ValueError):
        tr.sample(-0.1)


def test_transient_is_integrated_but_unrecorded():
    f = builtin("lorenz")
    head = integrate(f, [1.0, 1.0, 1.0], 10.0)
    tail = integrate(f, [1.0, 1.0, 1.0], 5.0, transient=10.0)
    assert tail.times[0] == 0.0
    assert np.array_equal(tail.states[0], head.states[-1])


# -- failure modes --------------------------------------------------------

def test_input_validation():
    f = builtin("harmonic")
    with pytest.raises(ValueError):
        integrate(f, [1.0, 0.0], -1.0)
    with pytest.raises(ValueError):
        integrate(f, [1.0, 0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        integrate(f, [np.nan, 0.0], 1.0)
    with pytest.raises(ValueError):
        integrate(f, [1.0, 0.0], 1.0, method="euler")
    with pytest.raises(ValueError):
        integrate(f, [1.0, 0.0], 1.0, method="rk4")  # no step given
    with pytest.raises(ValueError):
        integrate(f, [1.0, 0.0], 1.0, transient=-2.0)
    with pytest.raises(ValueError):
        integrate(f, [1.0, 0.0], 1.0, rtol=0.0)


def test_finite_time_blowup_reports_last_time():
    f = parse_model("dim=2\ndx/dt = x*x\ndy/dt = 0")
    with pytest.raises(DivergenceError) as exc_info:
        integrate(f, [1.0, 0.0], 2.0, method="rk4", step=0.05)
    assert exc_info.value.last_time is not None
    assert 0.0 <= exc_info.value.last_time < 2.0
    # adaptive: either the step collapses or the state overflows, and the
    # failure point is the x(t) = 1/(1-t) blow-up time
    with pytest.raises(IntegrationError) as exc_info:
        integrate(f, [1.0, 0.0], 2.0)
    assert exc_info.value.last_time == pytest.approx(1.0, abs=1e-2)


def test_step_budget():
    with pytest.raises(IntegrationError):
        integrate(builtin("harmonic"), [1.0, 0.0], 100.0, max_steps=10)


def test_max_step_is_respected():
    tr = integrate(builtin("harmonic"), [1.0, 0.0], 2.0, max_step=0.01)
    assert np.max(np.diff(tr.times)) <= 0.01 + 1e-12


# -- event location --------------------------------------------------------

def test_event_harmonic_quarter_period():
    f = builtin("harmonic")
    tr = integrate(f, [1.0, 0.0], math.pi)
    events = find_zero_crossings(f, lambda p: p[0], tr, name="x")
    assert len(events) == 1
    ev = events[0]
    assert ev.time == pytest.approx(math.pi / 2.0, abs=1e-8)
    assert ev.direction == -1  # x = cos t falls through zero
    assert ev.name == "x"
    assert abs(ev.state[0]) <= 1e-10  # refined onto the zero set


def test_events_are_time_ordered_and_bracketed():
    f = builtin("harmonic")
    tr = integrate(f, [1.0, 0.0], 20.0)
    events = find_zero_crossings(f, lambda p: p[1], tr)
    # y = -sin t is zero at the starting knot and at every multiple of pi
    assert len(events) == 7
    times = [ev.time for ev in events]
    assert times == sorted(times)
    for k, ev in enumerate(events):
        assert ev.time == pytest.approx(k * math.pi, abs=1e-8)
        assert ev.direction == (-1 if k % 2 == 0 else 1)


def test_constant_sign_scalar_yields_no_events():
    f = builtin("harmonic")
    tr = integrate(f, [1.0, 0.0], 10.0)
    assert find_zero_crossings(f, lambda p: 1.0 + p[0] ** 2, tr) == []


def test_knot_exactly_on_zero_set():
    f = builtin("harmonic")
    tr = integrate(f, [0.0, 1.0], 1.0)  # starts on {x=0}, moving to x>0
    events = find_zero_crossings(f, lambda p: p[0], tr)
    assert events[0].time == 0.0
    assert events[0].direction == 1


def test_vdp_cycle_never_crosses_curvature_zero_set():
    """The converged relaxation cycle is convex: its signed curvature,
    hence m2, keeps one sign, so the zero set is approached near the
    fold landings but never crossed."""
    f = builtin("vdp")
    lc = limit_cycle(f, {"index": 1, "level": 0.0, "direction": 1}, [1.0, 1.0])
    scalar = ManifoldScalar(f)
    assert find_zero_crossings(f, scalar, lc.cycle) == []
    values = scalar.value_many(lc.cycle.states.T)
    assert np.all(values < 0.0)
    assert np.min(np.abs(values)) >= 1.0


# -- limit cycles -----------------------------------------------------------

def test_limit_cycle_harmonic():
    lc = limit_cycle(
        builtin("harmonic"), {"index": 0, "level": 0.0, "direction": 1}, [1.0, 0.0]
    )
    assert lc.period == pytest.approx(2.0 * math.pi, abs=1e-6)
    assert np.max(np.abs(lc.amplitude - 1.0)) <= 1e-6
    assert lc.crossings >= 3
    assert lc.cycle.times[-1] == pytest.approx(lc.period, rel=1e-12)
    assert np.max(np.diff(lc.cycle.times)) <= lc.period / 2048.0 + 1e-12


def test_limit_cycle_vdp():
    lc = limit_cycle(
        builtin("vdp"), {"index": 1, "level": 0.0, "direction": 1}, [1.0, 1.0]
    )
    assert lc.period == pytest.approx(2.428906051, rel=1e-6)
    assert 1.95 <= lc.amplitude[0] <= 2.15
    # cycle closes on itself
    assert np.max(np.abs(lc.cycle.states[-1] - lc.cycle.states[0])) <= 1e-5


def test_limit_cycle_failures():
    with pytest.raises(ValueError):
        limit_cycle(
            builtin("lorenz"), {"index": 0, "level": 0.0, "direction": 1}, [1.0] * 3
        )
    with pytest.raises(ValueError):
        limit_cycle(
            builtin("harmonic"), {"index": 5, "level": 0.0, "direction": 1}, [1.0, 0.0]
        )
    with pytest.raises(ValueError):
        limit_cycle(
            builtin("harmonic"), {"index": 0, "level": 0.0, "direction": 2}, [1.0, 0.0]
        )
    with pytest.raises(ConvergenceError):
        # linear2 decays to the origin: x never recrosses x = 0.5 upward
        limit_cycle(
            builtin("linear2"),
            {"index": 0, "level": 0.5, "direction": 1},
            [1.0, 1.0],
            max_time=40.0,
        )
