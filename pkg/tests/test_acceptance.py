"""End-to-end checks of the documented guarantees, one per numbered
criterion, each printing a single pass/fail line with the measured
quantity.  Tolerances here are contractual; they must not be loosened
to make a run green."""

import json
import math
import time

import numpy as np

from flowcurv import cli
from flowcurv.integrate import integrate, limit_cycle
from flowcurv.kinematics import kinematics_many
from flowcurv.levelset import extract_levelset, sample_grid
from flowcurv.manifold import ManifoldScalar, vdp_closed_form
from flowcurv.models import builtin

EPS = 0.05


def report(capsys, n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    with capsys.disabled():
        print(flush=True)
        print(line, flush=True)
    return line


def seeded_points_2d(n=1000):
    rng = np.random.default_rng(42)
    return rng.uniform(-3.0, 3.0, size=(2, n))


def seeded_points_3d(n=1000):
    rng = np.random.default_rng(42)
    return np.vstack(
        [
            rng.uniform(-20.0, 20.0, size=(2, n)),
            rng.uniform(0.0, 50.0, size=(1, n)),
        ]
    )


def test_criterion_1_closed_form_equals_scaled_determinant(capsys):
    t0 = time.perf_counter()
    field = builtin("vdp")
    pts = seeded_points_2d()
    m = ManifoldScalar(field).value_many(pts)
    closed = vdp_closed_form(pts[0], pts[1], EPS)
    err = float(
        np.max(np.abs(closed.poly + 9.0 * EPS**2 * m) / (1.0 + np.abs(closed.poly)))
    )
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-9 and elapsed < 1.0
    line = report(capsys, 1, ok, f"max rel {err:.2e} <= 1e-9, {elapsed:.2f} s")
    assert ok, line


def test_criterion_2_squared_combination_and_report(capsys):
    field = builtin("vdp")
    pts = seeded_points_2d()
    scalar = ManifoldScalar(field)
    m = scalar.value_many(pts)
    lie = scalar.lie_many(pts)
    trace = kinematics_many(field, pts).trace_J
    combo = -9.0 * EPS**2 * (lie - trace * m)
    closed = vdp_closed_form(pts[0], pts[1], EPS)
    err = float(
        np.max(np.abs(combo - closed.residual) / (1.0 + closed.residual))
    )
    checks = {
        c["name"]: c for c in cli._verify_checks(field, "vdp", 1000, 42, 1e-8)
    }
    rejected = checks["unsquared_form_rejected"]
    ok = err <= 1e-8 and rejected["passed"] and rejected["ratio_spread"] > 10.0
    line = report(
        capsys,
        2,
        ok,
        f"max rel {err:.2e} <= 1e-8, unsquared-form ratio spread "
        f"{rejected['ratio_spread']:.1f}x",
    )
    assert ok, line


def test_criterion_3_plane_invariance_identity(capsys):
    field = builtin("vdp")
    pts = seeded_points_2d()
    scalar = ManifoldScalar(field)
    m = scalar.value_many(pts)
    lie = scalar.lie_many(pts)
    b = kinematics_many(field, pts)
    JdotV = np.einsum("ij...,j...->i...", b.Jdot, b.V)
    expected = b.V[0] * JdotV[1] - b.V[1] * JdotV[0]
    trace_term = b.trace_J * m
    err = float(
        np.max(np.abs(lie - trace_term - expected) / (1.0 + np.abs(trace_term)))
    )
    linear_err = 0.0
    for name in ("harmonic", "linear2"):
        lf = builtin(name)
        ls = ManifoldScalar(lf)
        lm = ls.value_many(pts)
        llie = ls.lie_many(pts)
        ltr = kinematics_many(lf, pts).trace_J
        linear_err = max(linear_err, float(np.max(np.abs(llie - ltr * lm))))
    ok = err <= 1e-8 and linear_err <= 1e-12
    line = report(
        capsys,
        3,
        ok,
        f"vdp max rel {err:.2e} <= 1e-8, linear residual {linear_err:.2e} <= 1e-12",
    )
    assert ok, line


def test_criterion_4_space_invariance_identity_and_fd_order(capsys):
    field = builtin("lorenz")
    pts = seeded_points_3d()
    scalar = ManifoldScalar(field)
    m = scalar.value_many(pts)
    lie = scalar.lie_many(pts)
    b = kinematics_many(field, pts)
    JdotV = np.einsum("ij...,j...->i...", b.Jdot, b.V)
    bracket = (
        -b.trace_J * JdotV
        + np.einsum("ij...,j...->i...", b.J, JdotV)
        + 2.0 * np.einsum("ij...,j...->i...", b.Jdot, b.gamma)
        + np.einsum("ij...,j...->i...", b.Jddot, b.V)
    )
    w = np.cross(b.gamma, b.V, axis=0)
    expected = np.sum(bracket * w, axis=0)
    err = float(
        np.max(np.abs(lie - b.trace_J * m - expected) / (1.0 + np.abs(expected)))
    )

    # independent check: centered differences of m3 along trajectories
    # must converge at second order to the analytic Lie derivative
    def endpoint(x0, T):
        return integrate(field, x0, T, rtol=1e-12, atol=1e-14).states[-1]

    min_order = math.inf
    for x0 in ([1.0, 2.0, 20.0], [-5.0, 10.0, 15.0], [10.0, -4.0, 30.0]):
        errs = []
        for h in (1e-3, 5e-4):
            mid = endpoint(x0, h)
            far = endpoint(x0, 2.0 * h)
            fd = (scalar.value(far) - scalar.value(x0)) / (2.0 * h)
            errs.append(abs(fd - scalar.lie(mid)))
        min_order = min(min_order, math.log2(errs[0] / errs[1]))
    ok = err <= 1e-8 and min_order >= 1.9
    line = report(
        capsys,
        4,
        ok,
        f"max rel {err:.2e} <= 1e-8, FD order {min_order:.2f} >= 1.9",
    )
    assert ok, line


def test_criterion_5_residual_vanishes_near_slow_curve(capsys):
    field = builtin("vdp")
    rng = np.random.default_rng(42)
    xs = rng.uniform(-2.5, 2.5, size=100)
    pts = np.vstack([xs, xs**3 / 3.0 - xs])
    scalar = ManifoldScalar(field)
    m = scalar.value_many(pts)
    lie = scalar.lie_many(pts)
    grad = scalar.gradient_many(pts)
    b = kinematics_many(field, pts)
    scale = (
        np.sqrt(np.sum(grad**2, axis=0)) * np.sqrt(np.sum(b.V**2, axis=0))
        + np.abs(b.trace_J * m)
        + 1e-300
    )
    err = float(np.max(np.abs(lie - b.trace_J * m) / scale))
    ok = err <= 1e-8
    line = report(capsys, 5, ok, f"max scaled residual {err:.2e} <= 1e-8")
    assert ok, line


def test_criterion_6_branch_distance_scales_linearly(capsys):
    distances = {}
    for eps in (0.1, 0.05, 0.01):
        field = builtin("vdp", {"eps": eps})
        grid = sample_grid(ManifoldScalar(field), [(-3, 3), (-3, 3)], 512)
        pts = np.vstack(extract_levelset(grid).polylines)
        x, y = pts[:, 0], pts[:, 1]
        u = x + y - x**3 / 3.0
        on_branch = (
            (x >= 1.2) & (x <= 2.0) & (np.abs(u) < 0.5 * np.abs(x - x**3))
        )
        assert on_branch.sum() > 50
        distances[eps] = float(np.abs(u[on_branch]).max())
    decreasing = distances[0.1] > distances[0.05] > distances[0.01]
    ratios = [distances[e] / e for e in (0.1, 0.05, 0.01)]
    spread = max(ratios) / min(ratios)
    ok = decreasing and spread <= 5.0
    line = report(
        capsys,
        6,
        ok,
        "d(eps) = "
        + ", ".join(f"{distances[e]:.3f}" for e in (0.1, 0.05, 0.01))
        + f" decreasing, d/eps spread {spread:.2f} <= 5",
    )
    assert ok, line


def test_criterion_7_relaxation_cycle_amplitude_and_period(capsys):
    t0 = time.perf_counter()
    field = builtin("vdp")
    lc = limit_cycle(field, {"index": 1, "level": 0.0, "direction": 1}, [1.0, 1.0])
    elapsed = time.perf_counter() - t0
    target = 3.0 - 2.0 * math.log(2.0)
    amp_ok = 1.95 <= lc.amplitude[0] <= 2.15
    period_off = abs(lc.period - target) / target
    period_ok = period_off <= 0.15
    ok = amp_ok and period_ok and elapsed < 10.0
    line = report(
        capsys,
        7,
        ok,
        f"max|x| {lc.amplitude[0]:.4f} in [1.95, 2.15], period {lc.period:.4f} "
        f"vs {target:.4f} target is {100 * period_off:.1f}% off (limit 15%), "
        f"{elapsed:.1f} s",
    )
    assert ok, line


def test_criterion_8_torsion_mesh_meets_equilibria(capsys):
    t0 = time.perf_counter()
    field = builtin("lorenz")
    box = [(-25.0, 25.0), (-35.0, 35.0), (0.0, 55.0)]
    grid = sample_grid(ManifoldScalar(field), box, 64)
    mesh = extract_levelset(grid)
    diag = grid.cell_diagonal()
    r = math.sqrt(72.0)
    gaps = []
    for eq in ([0.0, 0.0, 0.0], [r, r, 27.0], [-r, -r, 27.0]):
        gaps.append(
            float(np.min(np.linalg.norm(mesh.vertices - np.array(eq), axis=1)))
        )
    traj = integrate(field, [1.0, 1.0, 1.0], 50.0, transient=10.0)
    x, y, z = traj.states.T
    inside = (
        bool(np.all(np.abs(x) <= 25.0))
        and bool(np.all(np.abs(y) <= 35.0))
        and bool(np.all((z >= 0.0) & (z <= 55.0)))
    )
    elapsed = time.perf_counter() - t0
    ok = max(gaps) <= diag and inside and elapsed < 60.0
    line = report(
        capsys,
        8,
        ok,
        f"equilibrium gaps {', '.join(f'{g:.3f}' for g in gaps)} <= cell "
        f"diagonal {diag:.3f}, attractor in box: {inside}, {elapsed:.1f} s",
    )
    assert ok, line


def test_criterion_9_integrator_and_extraction_convergence(capsys):
    field = builtin("linear2")
    want = np.array([math.exp(-1.0), math.exp(-2.0)])

    def endpoint_error(step):
        tr = integrate(field, [1.0, 1.0], 1.0, method="rk4", step=step)
        return np.max(np.abs(tr.states[-1] - want))

    e1, e2, e3 = (endpoint_error(h) for h in (0.1, 0.05, 0.025))
    rk4_ok = 14.0 <= e1 / e2 <= 18.0 and 14.0 <= e2 / e3 <= 18.0

    harm = builtin("harmonic")
    tr = integrate(harm, [1.0, 0.0], 100.0, rtol=1e-10)
    m = ManifoldScalar(harm).value_many(tr.states.T)
    drift = float(np.max(np.abs(m - m[0])))
    drift_ok = drift <= 1e-6

    def circle(p):
        return p[0] ** 2 + p[1] ** 2 - 1.0

    def sphere(p):
        return p[0] ** 2 + p[1] ** 2 + p[2] ** 2 - 1.0

    window2 = [(-1.6, 1.4), (-1.5, 1.7)]
    window3 = [(-1.6, 1.4), (-1.5, 1.7), (-1.55, 1.45)]
    errs2, errs3, diags2 = {}, {}, {}
    for res in (64, 128):
        g = sample_grid(circle, window2, res)
        pts = np.vstack(extract_levelset(g).polylines)
        errs2[res] = np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0).max()
        diags2[res] = g.cell_diagonal()
    for res in (32, 64):
        g = sample_grid(sphere, window3, res)
        ls = extract_levelset(g)
        errs3[res] = np.abs(np.linalg.norm(ls.vertices, axis=1) - 1.0).max()
    ratio2 = errs2[64] / errs2[128]
    ratio3 = errs3[32] / errs3[64]
    extract_ok = (
        errs2[64] <= diags2[64]
        and 3.0 <= ratio2 <= 5.0
        and 3.0 <= ratio3 <= 5.0
    )
    ok = rk4_ok and drift_ok and extract_ok
    line = report(
        capsys,
        9,
        ok,
        f"rk4 ratios {e1 / e2:.2f}, {e2 / e3:.2f} in [14, 18]; "
        f"first-integral drift {drift:.2e} <= 1e-6; halving gains "
        f"{ratio2:.2f}x (curve), {ratio3:.2f}x (surface) in [3, 5]",
    )
    assert ok, line


def test_criterion_10_verify_reports_are_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["verify", "--model", "vdp", "--seed", "42"]
    code_a = cli.main(argv + ["--out", str(a)])
    code_b = cli.main(argv + ["--out", str(b)])
    capsys.readouterr()
    identical = a.read_bytes() == b.read_bytes()
    passed = json.loads(a.read_text())["passed"]
    ok = identical and passed and code_a == 0 and code_b == 0
    line = report(
        capsys,
        10,
        ok,
        f"two seeded runs byte-identical: {identical}, all checks green: {passed}",
    )
    assert ok, line
