"""Trajectory integration and event location.

Two integrators are provided: classic fixed-step RK4 and an embedded
Dormand-Prince 5(4) pair with PI step-size control (the adaptive
default).  Accepted knots store both the state and the velocity, so
cubic Hermite interpolation gives a free dense output used for event
bisection and limit-cycle measurement.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DivergenceError,
    FieldOverflowError,
    IntegrationError,
    StepUnderflowError,
)

__all__ = [
    "Trajectory",
    "Event",
    "LimitCycle",
    "integrate",
    "find_zero_crossings",
    "limit_cycle",
]


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped solution samples with integrator metadata.

    times, states and velocities share the leading axis; states is
    (n, dim) with one row per accepted step.  stats counts right-hand
    side evaluations and accepted/rejected steps.
    """

    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    method: str
    rtol: float | None
    atol: float | None
    step: float | None
    stats: dict

    def __post_init__(self):
        if not (
            len(self.times) == len(self.states) == len(self.velocities)
        ):
            raise ValueError("times, states, velocities must share length")
        if len(self.times) < 1:
            raise ValueError("trajectory is empty")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("states contain non-finite values")

    @property
    def dimension(self):
        return self.states.shape[1]

    def sample(self, t):
        """Cubic Hermite interpolation of the state at time(s) t.

        Accepts a scalar or an array of times inside [times[0],
        times[-1]]; returns (dim,) or (len(t), dim) accordingly.
        """
        t_in = np.asarray(t, dtype=float)
        ts = np.atleast_1d(t_in)
        lo, hi = self.times[0], self.times[-1]
        slack = 1e-12 * max(hi - lo, 1.0)
        if np.any(ts < lo - slack) or np.any(ts > hi + slack):
            raise ValueError("sample time outside the trajectory span")
        tc = np.clip(ts, lo, hi)
        i = np.searchsorted(self.times, tc, side="right") - 1
        i = np.clip(i, 0, len(self.times) - 2)
        ta = self.times[i]
        h = self.times[i + 1] - ta
        s = ((tc - ta) / h)[:, None]
        h_col = h[:, None]
        s2 = s * s
        s3 = s2 * s
        out = (
            (2 * s3 - 3 * s2 + 1) * self.states[i]
            + (s3 - 2 * s2 + s) * h_col * self.velocities[i]
            + (-2 * s3 + 3 * s2) * self.states[i + 1]
            + (s3 - s2) * h_col * self.velocities[i + 1]
        )
        return out[0] if t_in.ndim == 0 else out


@dataclass(frozen=True)
class Event:
    """A located zero crossing of a scalar along a trajectory.

    direction is +1 for a crossing from negative to positive values and
    -1 for the opposite.
    """

    time: float
    state: np.ndarray
    name: str
    direction: int


@dataclass(frozen=True)
class LimitCycle:
    """Converged periodic orbit measurement.

    amplitude[i] is max |x_i| over one period; cycle holds one finely
    sampled period starting on the section.
    """

    period: float
    amplitude: np.ndarray
    cycle: Trajectory
    crossings: int


# Dormand-Prince 5(4) tableau.  The 5th-order weights coincide with the
# last stage row, so k7 = f(y_next) carries over as the next k1 (FSAL).
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_ERR = np.array(
    [
        71 / 57600,
        0.0,
        -71 / 16695,
        71 / 1920,
        -17253 / 339200,
        22 / 525,
        -1 / 40,
    ]
)


def _eval_rhs(field, y, t, stats):
    stats["rhs_evaluations"] += 1
    try:
        v = field.velocity(y)
    except (FieldOverflowError, ValueError) as exc:
        raise DivergenceError(
            f"field evaluation failed during integration: {exc}", last_time=t
        ) from exc
    return v


def _initial_step(field, y0, f0, rtol, atol, max_step, duration, stats):
    # Standard starter: estimate the local Lipschitz scale from one
    # Euler probe, aim the first step at a ~1e-2 local error.
    sk = atol + rtol * np.abs(y0)
    dnf = float(np.sum((f0 / sk) ** 2))
    dny = float(np.sum((y0 / sk) ** 2))
    if dnf <= 1e-10 or dny <= 1e-10:
        h = 1e-6
    else:
        h = 0.01 * math.sqrt(dny / dnf)
    h = min(h, max_step, duration)
    f1 = _eval_rhs(field, y0 + h * f0, 0.0, stats)
    der2 = math.sqrt(float(np.sum(((f1 - f0) / sk) ** 2))) / h
    der12 = max(der2, math.sqrt(dnf))
    if der12 <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / der12) ** 0.2
    return min(100 * h, h1, max_step, duration)


def _run_dp54(field, x0, duration, rtol, atol, max_step, max_steps, stats, record):
    t = 0.0
    y = np.array(x0, dtype=float)
    k1 = _eval_rhs(field, y, t, stats)
    h = _initial_step(field, y, k1, rtol, atol, max_step, duration, stats)
    times, states, vels = [0.0], [y.copy()], [k1.copy()]

    # PI controller constants (error exponent 1/5 softened by the
    # previous step's error; growth clamped to [1/5, 10] per step).
    beta = 0.04
    expo1 = 0.2 - 0.75 * beta
    safe = 0.9
    facold = 1e-4
    rejected = False

    while t < duration:
        if stats["steps_accepted"] + stats["steps_rejected"] >= max_steps:
            raise IntegrationError(
                f"step budget of {max_steps} exhausted at t = {t}", last_time=t
            )
        h = min(h, duration - t)
        if h <= 1e-14 * max(abs(t), 1.0):
            raise StepUnderflowError(
                f"step size underflow at t = {t}", last_time=t
            )
        ks = [k1]
        yi = y
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
            ks.append(_eval_rhs(field, yi, t, stats))
        y_new = yi  # the last stage state already carries the 5th-order weights
        k7 = ks[6]
        err_vec = h * sum(e * k for e, k in zip(_DP_ERR, ks))
        sk = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / sk) ** 2)))

        fac11 = err**expo1 if err > 0 else 0.0
        if err <= 1.0:
            stats["steps_accepted"] += 1
            fac = max(0.1, min(5.0, fac11 / (facold**beta * safe)))
            facold = max(err, 1e-4)
            h_next = h / fac if fac > 0 else 10 * h
            if rejected:
                h_next = min(h_next, h)
            rejected = False
            t += h
            y = y_new
            if not np.all(np.isfinite(y)):
                raise DivergenceError(
                    f"state became non-finite at t = {t}", last_time=times[-1]
                )
            k1 = k7
            if record:
                times.append(t)
                states.append(y.copy())
                vels.append(k1.copy())
            h = min(h_next, max_step)
        else:
            stats["steps_rejected"] += 1
            h = h / min(5.0, fac11 / safe)
            rejected = True

    if not record:
        return y
    return np.array(times), np.array(states), np.array(vels)


def _run_rk4(field, x0, duration, step, stats, record):
    n = max(1, round(duration / step))
    h = duration / n
    y = np.array(x0, dtype=float)
    k1 = _eval_rhs(field, y, 0.0, stats)
    times, states, vels = [0.0], [y.copy()], [k1.copy()]
    for i in range(n):
        t = i * h
        k2 = _eval_rhs(field, y + 0.5 * h * k1, t, stats)
        k3 = _eval_rhs(field, y + 0.5 * h * k2, t, stats)
        k4 = _eval_rhs(field, y + h * k3, t, stats)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(
                f"state became non-finite at t = {(i + 1) * h}", last_time=t
            )
        stats["steps_accepted"] += 1
        k1 = _eval_rhs(field, y, (i + 1) * h, stats)
        if record:
            times.append((i + 1) * h)
            states.append(y.copy())
            vels.append(k1.copy())
    if not record:
        return y
    return np.array(times), np.array(states), np.array(vels)


def integrate(
    field,
    x0,
    duration,
    *,
    method="rkdp54",
    step=None,
    rtol=1e-9,
    atol=1e-12,
    transient=0.0,
    max_step=math.inf,
    max_steps=1_000_000,
):
    """Integrate the field from x0 for the given duration.

    method "rkdp54" (default) is adaptive with local error controlled
    by atol + rtol*|x|; method "rk4" takes fixed steps of size `step`
    (rounded so the duration is an integer number of steps).  A
    positive `transient` is integrated first and discarded; recorded
    times then restart at zero.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (field.dimension,):
        raise ValueError(
            f"initial state has shape {x0.shape}, expected ({field.dimension},)"
        )
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    if not duration > 0:
        raise ValueError("duration must be positive")
    if transient < 0:
        raise ValueError("transient must be non-negative")
    if method not in ("rkdp54", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    if method == "rk4":
        if step is None or not step > 0:
            raise ValueError("rk4 requires a positive step")
    else:
        if not (rtol > 0 and atol > 0):
            raise ValueError("tolerances must be positive")

    stats = {"steps_accepted": 0, "steps_rejected": 0, "rhs_evaluations": 0}
    x = x0
    if transient > 0:
        if method == "rk4":
            x = _run_rk4(field, x, transient, step, stats, record=False)
        else:
            x = _run_dp54(
                field, x, transient, rtol, atol, max_step, max_steps, stats, False
            )
    if method == "rk4":
        times, states, vels = _run_rk4(field, x, duration, step, stats, True)
        return Trajectory(times, states, vels, "rk4", None, None, step, stats)
    times, states, vels = _run_dp54(
        field, x, duration, rtol, atol, max_step, max_steps, stats, True
    )
    return Trajectory(times, states, vels, "rkdp54", rtol, atol, None, stats)


def _bisect_event(traj, scalar, t_lo, t_hi, s_lo, s_hi):
    tol = 1e-10 * max(abs(s_lo), abs(s_hi))
    tm = 0.5 * (t_lo + t_hi)
    xm = traj.sample(tm)
    sm = float(scalar(xm))
    for _ in range(200):
        if abs(sm) <= tol or (t_hi - t_lo) <= 1e-15 * max(1.0, abs(tm)):
            break
        if (sm < 0.0) == (s_lo < 0.0):
            t_lo, s_lo = tm, sm
        else:
            t_hi, s_hi = tm, sm
        tm = 0.5 * (t_lo + t_hi)
        xm = traj.sample(tm)
        sm = float(scalar(xm))
    return tm, xm


def find_zero_crossings(field, scalar, traj, name=None):
    """Locate every sign change of scalar(state) along the trajectory.

    scalar is any callable mapping a state vector to a float.  Each
    bracketing knot pair is refined by bisection on the dense output;
    events come back time-ordered.
    """
    if name is None:
        name = getattr(scalar, "name", None) or getattr(
            scalar, "__name__", "scalar"
        )
        if name == "<lambda>":
            name = "scalar"
    values = np.array([float(scalar(s)) for s in traj.states])
    events = []
    for i in range(len(values) - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            if b != 0.0 and (i == 0 or values[i - 1] * b <= 0.0):
                events.append(
                    Event(
                        float(traj.times[i]),
                        traj.states[i].copy(),
                        name,
                        1 if b > 0 else -1,
                    )
                )
            continue
        if a * b < 0.0:
            t_ev, x_ev = _bisect_event(
                traj, scalar, float(traj.times[i]), float(traj.times[i + 1]), a, b
            )
            events.append(Event(t_ev, x_ev, name, 1 if a < 0 else -1))
    return events


def limit_cycle(
    field,
    section,
    x0,
    *,
    rtol=1e-9,
    atol=1e-12,
    period_rtol=1e-6,
    chunk_time=20.0,
    max_time=2000.0,
):
    """Measure the period and per-coordinate amplitude of a limit cycle.

    section is {"index": i, "level": c, "direction": +1 or -1}: the
    orbit is sampled where coordinate i crosses level c in the given
    direction.  The trajectory from x0 is followed until two successive
    same-direction crossing intervals agree to period_rtol; one period
    is then re-integrated finely (max_step = period/2048) and the
    amplitude is refined at velocity sign changes where coordinate
    extrema occur.
    """
    if field.dimension != 2:
        raise ValueError("limit_cycle handles 2-D fields only")
    idx = int(section["index"])
    if not 0 <= idx < field.dimension:
        raise ValueError("section index out of range")
    level = float(section.get("level", 0.0))
    direction = int(section.get("direction", 1))
    if direction not in (-1, 1):
        raise ValueError("section direction must be +1 or -1")

    def section_scalar(state):
        return state[idx] - level

    x = np.asarray(x0, dtype=float)
    t_offset = 0.0
    cross_times = []
    cross_states = []
    period = None
    while t_offset < max_time and period is None:
        traj = integrate(field, x, chunk_time, rtol=rtol, atol=atol)
        for ev in find_zero_crossings(field, section_scalar, traj, name="section"):
            if ev.direction != direction:
                continue
            t_abs = t_offset + ev.time
            if cross_times and t_abs - cross_times[-1] < 1e-9:
                continue  # same crossing seen at a chunk boundary
            cross_times.append(t_abs)
            cross_states.append(ev.state)
            if len(cross_times) >= 3:
                p_prev = cross_times[-2] - cross_times[-3]
                p_last = cross_times[-1] - cross_times[-2]
                if abs(p_last - p_prev) <= period_rtol * abs(p_last):
                    period = p_last
                    break
        x = traj.states[-1]
        t_offset += traj.times[-1]

    if period is None:
        tail = [f"{b - a:.9g}" for a, b in zip(cross_times[:-1], cross_times[1:])]
        raise ConvergenceError(
            "limit cycle did not converge: "
            f"{len(cross_times)} section crossings in t <= {t_offset:g}, "
            f"period estimates {tail[-4:] or 'none'}"
        )

    cycle = integrate(
        field,
        cross_states[-1],
        period,
        rtol=rtol,
        atol=atol,
        max_step=period / 2048.0,
    )
    amplitude = np.max(np.abs(cycle.states), axis=0)
    for i in range(field.dimension):
        extrema = find_zero_crossings(
            field, lambda p, i=i: field.velocity(p)[i], cycle, name=f"v{i}"
        )
        for ev in extrema:
            amplitude[i] = max(amplitude[i], abs(ev.state[i]))
    return LimitCycle(period, amplitude, cycle, len(cross_times))
