"""Command-line front end.

Subcommands: analyze (pointwise report), trace (trajectory CSV),
manifold (zero-set extraction to CSV/OBJ), verify (seeded identity
checks with a machine-readable report), figure (ready-to-plot dataset
bundles).  Exit codes: 0 success, 1 verification check failed, 2 usage
or configuration error, 3 runtime failure (integration, extraction,
evaluation).

All numeric output uses the shortest round-tripping decimal form and
LF line endings, so identical inputs and seeds give byte-identical
files.  Random samples come from numpy's seeded PCG64 generator.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .errors import (
    FlowCurvError,
    ModelDefinitionError,
    ModelSyntaxError,
    NonAutonomousError,
    UndeclaredSymbolError,
    UndefinedCurvatureError,
    UndefinedTorsionError,
)
from .integrate import integrate, limit_cycle
from .kinematics import bundle_with_tensors, flow_jet, kinematics_at
from .levelset import extract_levelset, sample_grid
from .manifold import (
    ManifoldScalar,
    curvature,
    darboux_residual,
    torsion,
    vdp_closed_form,
)
from .models import BUILTIN_MODELS, builtin, parse_model

_USAGE_ERRORS = (
    ModelSyntaxError,
    ModelDefinitionError,
    UndeclaredSymbolError,
    NonAutonomousError,
)


def _fmt(x):
    return repr(float(x))


def _write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


class _LieScalar:
    """Adapter giving L_X m the sampling interface of ManifoldScalar."""

    name = "lie_m"

    def __init__(self, scalar):
        self._scalar = scalar

    def __call__(self, X):
        return self._scalar.lie(X)

    def value_many(self, XS):
        return self._scalar.lie_many(XS)


# -- argument handling -------------------------------------------------

def _parse_overrides(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ModelDefinitionError(
                f"parameter override {item!r} is not of the form name=value"
            )
        key, _, value = item.partition("=")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ModelDefinitionError(
                f"parameter override {item!r} has a non-numeric value"
            ) from None
    return out


def _load_model(args):
    overrides = _parse_overrides(getattr(args, "set", None))
    name = args.model
    if name in BUILTIN_MODELS:
        return builtin(name, overrides or None), name
    if not os.path.exists(name):
        raise ModelDefinitionError(
            f"model {name!r} is neither a builtin ({', '.join(BUILTIN_MODELS)}) "
            "nor a readable file"
        )
    with open(name) as fh:
        field = parse_model(fh.read())
    if overrides:
        field = field.with_parameters(**overrides)
    return field, os.path.basename(name)


def _parse_point(text, dim):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != dim:
        raise ModelDefinitionError(
            f"point {text!r} has {len(parts)} components, model needs {dim}"
        )
    return np.array([float(p) for p in parts])


def _parse_bounds(text, dim):
    axes = [a for a in text.split(",") if a.strip()]
    if len(axes) != dim:
        raise ModelDefinitionError(
            f"bounds {text!r} give {len(axes)} axes, model needs {dim}"
        )
    out = []
    for axis in axes:
        lo, sep, hi = axis.partition(":")
        if not sep:
            raise ModelDefinitionError(
                f"axis bound {axis!r} is not of the form lo:hi"
            )
        out.append((float(lo), float(hi)))
    return out


def _add_common(sub):
    sub.add_argument("--model", required=True, help="builtin name or model file")
    sub.add_argument(
        "--set",
        action="append",
        metavar="NAME=VALUE",
        help="override a model parameter (repeatable)",
    )


# -- analyze -------------------------------------------------------------

def _analyze_payload(field, X):
    bundle = kinematics_at(field, X)
    scalar = ManifoldScalar(field)
    res = darboux_residual(field, X)
    payload = {
        "point": [float(v) for v in X],
        "velocity": bundle.V.tolist(),
        "acceleration": bundle.gamma.tolist(),
        "jerk": bundle.jerk.tolist(),
        "snap": bundle.snap.tolist(),
        "jacobian": bundle.J.tolist(),
        "trace_jacobian": float(bundle.trace_J),
        "m": float(res.m),
        "lie_m": float(res.lie_m),
        "trace_term": float(res.trace_term),
        "identity_residual": float(res.residual - res.expected),
        "scalar_convention": scalar.convention,
    }
    try:
        c = curvature(field, X)
        payload["curvature"] = float(c.kappa)
        payload["radius"] = None if math.isinf(c.radius) else float(c.radius)
    except UndefinedCurvatureError:
        payload["curvature"] = None
        payload["radius"] = None
    if field.dimension == 3:
        try:
            t = torsion(field, X)
            payload["torsion"] = float(t.tau)
            payload["torsion_radius"] = (
                None if math.isinf(t.torsion_radius) else float(t.torsion_radius)
            )
        except UndefinedTorsionError:
            payload["torsion"] = None
            payload["torsion_radius"] = None
    return payload


def _cmd_analyze(args):
    field, name = _load_model(args)
    X = _parse_point(args.point, field.dimension)
    payload = _analyze_payload(field, X)
    payload["model"] = name
    payload["parameters"] = {k: float(v) for k, v in field.parameters.items()}
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
        return 0
    vec = ", ".join(field.variables)
    print(f"model {name} ({vec}), parameters {payload['parameters']}")
    print(f"point            {payload['point']}")
    print(f"velocity         {payload['velocity']}")
    print(f"acceleration     {payload['acceleration']}")
    print(f"jerk             {payload['jerk']}")
    print(f"snap             {payload['snap']}")
    print(f"trace J          {_fmt(payload['trace_jacobian'])}")
    print(f"{payload['scalar_convention']:<16} {_fmt(payload['m'])}")
    print(f"L_X m            {_fmt(payload['lie_m'])}")
    print(f"identity defect  {_fmt(payload['identity_residual'])}")
    if payload["curvature"] is None:
        print("curvature        undefined (equilibrium)")
    else:
        radius = "inf" if payload["radius"] is None else _fmt(payload["radius"])
        print(f"curvature        {_fmt(payload['curvature'])} (radius {radius})")
    if field.dimension == 3:
        if payload["torsion"] is None:
            print("torsion          undefined (degenerate)")
        else:
            print(f"torsion          {_fmt(payload['torsion'])}")
    return 0


# -- trace ---------------------------------------------------------------

def _trace_csv(field, traj):
    scalar = ManifoldScalar(field)
    XS = traj.states.T
    m = scalar.value_many(XS)
    lie = scalar.lie_many(XS)
    header = ["t", *field.variables, "m", "lie_m"]
    lines = [",".join(header)]
    for i in range(len(traj.times)):
        row = [_fmt(traj.times[i])]
        row += [_fmt(v) for v in traj.states[i]]
        row += [_fmt(m[i]), _fmt(lie[i])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _cmd_trace(args):
    field, _ = _load_model(args)
    x0 = _parse_point(args.x0, field.dimension)
    traj = integrate(
        field,
        x0,
        args.T,
        method=args.method,
        step=args.step,
        rtol=args.rtol,
        atol=args.atol,
        transient=args.transient,
    )
    text = _trace_csv(field, traj)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# -- manifold --------------------------------------------------------------

def _polylines_csv(polylines, variables):
    lines = [",".join(variables)]
    for k, poly in enumerate(polylines):
        if k:
            lines.append("")
        for row in poly:
            lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _obj_text(vertices, triangles):
    lines = []
    for v in vertices:
        lines.append("v " + " ".join(_fmt(c) for c in v))
    for a, b, c in triangles:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    return "\n".join(lines) + "\n"


def _cmd_manifold(args):
    field, _ = _load_model(args)
    scalar = ManifoldScalar(field)
    if args.scalar == "lie":
        scalar = _LieScalar(scalar)
    bounds = _parse_bounds(args.bounds, field.dimension)
    grid = sample_grid(scalar, bounds, args.res)
    ls = extract_levelset(grid, level=args.level)
    if ls.is_empty:
        print("warning: level set is empty over the requested window", file=sys.stderr)
    if field.dimension == 2:
        _write_text(args.out, _polylines_csv(ls.polylines or [], field.variables))
    else:
        _write_text(args.out, _obj_text(ls.vertices, ls.triangles))
    return 0


# -- verify ------------------------------------------------------------------

def _check(name, max_error, tolerance, **extra):
    entry = {
        "name": name,
        "max_error": float(max_error),
        "tolerance": float(tolerance),
        "passed": bool(max_error <= tolerance),
    }
    entry.update(extra)
    return entry


def _verify_checks(field, name, samples, seed, tol):
    rng = np.random.default_rng(seed)
    dim = field.dimension
    if dim == 2:
        pts = rng.uniform(-3.0, 3.0, size=(2, samples))
    else:
        pts = np.vstack(
            [
                rng.uniform(-20.0, 20.0, size=(2, samples)),
                rng.uniform(0.0, 50.0, size=(1, samples)),
            ]
        )
    bundle, tensors = bundle_with_tensors(field, pts)
    checks = []

    # Taylor recurrence and direct chain-rule stacks must agree
    coeffs = flow_jet(field, pts, order=4)
    facts = np.array([1.0, 1.0, 2.0, 6.0, 24.0])
    derivs = np.stack([pts, bundle.V, bundle.gamma, bundle.jerk, bundle.snap])
    rebuilt = coeffs * facts[:, None, None]
    err = np.max(
        np.abs(rebuilt - derivs) / (1.0 + np.abs(derivs))
    )
    checks.append(_check("taylor_vs_chain_rule", err, 1e-10))

    scalar = ManifoldScalar(field)
    m, _, lie, trace_term, expected = scalar._full(pts)
    residual = np.abs(lie - trace_term - expected)
    if dim == 2:
        err = np.max(residual / (1.0 + np.abs(trace_term)))
        checks.append(_check("lie_identity_2d", err, tol))
    else:
        err = np.max(residual / (1.0 + np.abs(expected)))
        checks.append(_check("lie_identity_3d", err, tol))

    if not np.any(tensors.H) and not np.any(tensors.T3):
        # linear field: the correction term vanishes identically and the
        # cofactor is exactly Tr J
        checks.append(
            _check("linear_residual_exact", np.max(np.abs(lie - trace_term)), 1e-12)
        )
        checks.append(
            _check("linear_correction_zero", np.max(np.abs(expected)), 1e-12)
        )

    if name == "vdp":
        eps = field.parameters["eps"]
        closed = vdp_closed_form(pts[0], pts[1], eps)
        err = np.max(
            np.abs(closed.poly + 9.0 * eps**2 * m) / (1.0 + np.abs(closed.poly))
        )
        checks.append(_check("closed_form_proportionality", err, 1e-9))

        combo = -9.0 * eps**2 * (lie - trace_term)
        err = np.max(np.abs(combo - closed.residual) / (1.0 + closed.residual))
        checks.append(_check("squared_combination_identity", err, 1e-8))

        unsquared = (2.0 * pts[0] ** 2 / eps) * (
            pts[0] ** 3 - 3.0 * pts[0] - 3.0 * pts[1]
        )
        usable = np.abs(unsquared) > 1e-6
        ratios = np.abs(combo[usable] / unsquared[usable])
        spread = float(np.max(ratios) / np.min(ratios))
        deviation = np.max(
            np.abs(combo[usable] - unsquared[usable])
            / (1.0 + np.abs(unsquared[usable]))
        )
        checks.append(
            _check(
                "unsquared_form_rejected",
                # passes when the unsquared variant demonstrably differs:
                # its point-to-point ratio spread must exceed 10x
                10.0 / spread,
                1.0,
                ratio_spread=spread,
                max_relative_deviation=float(deviation),
            )
        )

        xs = rng.uniform(-2.5, 2.5, size=100)
        on_null = np.vstack([xs, xs**3 / 3.0 - xs])
        m2, g2, lie2, tt2, _ = scalar._full(on_null)
        vel = field.velocity_many(on_null)
        local = (
            np.sqrt(np.sum(g2**2, axis=0)) * np.sqrt(np.sum(vel**2, axis=0))
            + np.abs(tt2)
            + 1e-300
        )
        err = np.max(np.abs(lie2 - tt2) / local)
        checks.append(_check("slow_curve_residual", err, 1e-8))

    return checks


def _cmd_verify(args):
    field, name = _load_model(args)
    checks = _verify_checks(field, name, args.samples, args.seed, args.tol)
    report = {
        "model": name,
        "dimension": field.dimension,
        "parameters": {k: float(v) for k, v in sorted(field.parameters.items())},
        "samples": int(args.samples),
        "seed": int(args.seed),
        "generator": "numpy PCG64",
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        _write_text(args.out, text)
    if args.json:
        sys.stdout.write(text)
    else:
        width = max(len(c["name"]) for c in checks)
        for c in checks:
            status = "PASS" if c["passed"] else "FAIL"
            print(
                f"{c['name']:<{width}}  {status}  "
                f"max_error {c['max_error']:.3e}  tolerance {c['tolerance']:.1e}"
            )
        print(f"verify {name}: {'PASS' if report['passed'] else 'FAIL'}")
    return 0 if report["passed"] else 1


# -- figure --------------------------------------------------------------------

_FIG1_SCRIPT = """\
# gnuplot script: relaxation oscillator, zero-curvature curve, slow curve
set datafile separator comma
set key outside
set xlabel 'x'
set ylabel 'y'
set xrange [-3:3]
set yrange [-3:3]
plot 'manifold_curve.csv' skip 1 using 1:2 with lines lc rgb 'blue' title 'curvature manifold', \\
     'lie_zero.csv' skip 1 using 1:2 with lines lc rgb 'magenta' title 'Lie-derivative zero set', \\
     'singular_approx.csv' skip 1 using 1:2 with lines lc rgb 'green' title 'slow curve', \\
     'limit_cycle.csv' skip 1 using 2:3 with lines lc rgb 'red' title 'limit cycle'
"""

_FIG2_SCRIPT = """\
# gnuplot script: chaotic attractor over the torsion manifold mesh
# (convert the OBJ meshes with your mesh viewer of choice, or splot the
# attractor alone)
set datafile separator comma
set xlabel 'x'
set ylabel 'y'
set zlabel 'z'
splot 'attractor.csv' skip 1 using 2:3:4 with lines lc rgb 'red' title 'attractor'
"""


def _cmd_figure(args):
    os.makedirs(args.out, exist_ok=True)
    overrides = _parse_overrides(args.set)
    if args.which == "fig1":
        field = builtin("vdp", overrides or None)
        scalar = ManifoldScalar(field)
        lc = limit_cycle(
            field, {"index": 1, "level": 0.0, "direction": 1}, [1.0, 1.0]
        )
        rows = ["t,x,y"]
        for i in range(len(lc.cycle.times)):
            rows.append(
                ",".join(
                    [_fmt(lc.cycle.times[i])]
                    + [_fmt(v) for v in lc.cycle.states[i]]
                )
            )
        _write_text(os.path.join(args.out, "limit_cycle.csv"), "\n".join(rows) + "\n")

        window = [(-3.0, 3.0), (-3.0, 3.0)]
        grid = sample_grid(scalar, window, 512)
        curve = extract_levelset(grid)
        _write_text(
            os.path.join(args.out, "manifold_curve.csv"),
            _polylines_csv(curve.polylines, field.variables),
        )
        lie_grid = sample_grid(_LieScalar(scalar), window, 512)
        lie_curve = extract_levelset(lie_grid)
        _write_text(
            os.path.join(args.out, "lie_zero.csv"),
            _polylines_csv(lie_curve.polylines, field.variables),
        )
        xs = np.linspace(-3.0, 3.0, 513)
        rows = ["x,y"]
        rows += [f"{_fmt(x)},{_fmt(x**3 / 3.0 - x)}" for x in xs]
        _write_text(
            os.path.join(args.out, "singular_approx.csv"), "\n".join(rows) + "\n"
        )
        _write_text(os.path.join(args.out, "fig1.gp"), _FIG1_SCRIPT)
        extracted_empty = curve.is_empty or lie_curve.is_empty
    else:
        field = builtin("lorenz", overrides or None)
        scalar = ManifoldScalar(field)
        traj = integrate(field, [1.0, 1.0, 1.0], 50.0, transient=10.0)
        rows = ["t,x,y,z"]
        for i in range(len(traj.times)):
            rows.append(
                ",".join(
                    [_fmt(traj.times[i])] + [_fmt(v) for v in traj.states[i]]
                )
            )
        _write_text(os.path.join(args.out, "attractor.csv"), "\n".join(rows) + "\n")

        box = [(-25.0, 25.0), (-35.0, 35.0), (0.0, 55.0)]
        grid = sample_grid(scalar, box, 64)
        mesh = extract_levelset(grid)
        _write_text(
            os.path.join(args.out, "torsion_manifold.obj"),
            _obj_text(mesh.vertices, mesh.triangles),
        )
        lie_grid = sample_grid(_LieScalar(scalar), box, 64)
        lie_mesh = extract_levelset(lie_grid)
        _write_text(
            os.path.join(args.out, "lie_manifold.obj"),
            _obj_text(lie_mesh.vertices, lie_mesh.triangles),
        )
        _write_text(os.path.join(args.out, "fig2.gp"), _FIG2_SCRIPT)
        extracted_empty = mesh.is_empty or lie_mesh.is_empty
    if extracted_empty:
        print("warning: an extracted zero set came back empty", file=sys.stderr)
    return 0


# -- entry point ------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="flowcurv",
        description="curvature/torsion manifolds of plane and space flows",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="kinematics and invariance at one point")
    _add_common(p)
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--json", action="store_true", help="structured output")
    p.set_defaults(run=_cmd_analyze)

    p = sub.add_parser("trace", help="integrate a trajectory to CSV")
    _add_common(p)
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--T", type=float, required=True, help="duration")
    p.add_argument("--method", choices=("rkdp54", "rk4"), default="rkdp54")
    p.add_argument("--step", type=float, default=None, help="rk4 step size")
    p.add_argument("--rtol", type=float, default=1e-9)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--transient", type=float, default=0.0)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(run=_cmd_trace)

    p = sub.add_parser("manifold", help="extract {m = level} to CSV/OBJ")
    _add_common(p)
    p.add_argument(
        "--bounds",
        required=True,
        help="lo:hi per axis, comma-separated; write --bounds=-3:3,-3:3 "
        "(with the equals sign) when the first bound is negative",
    )
    p.add_argument("--res", type=int, default=256, help="cells per axis")
    p.add_argument("--level", type=float, default=0.0)
    p.add_argument(
        "--scalar",
        choices=("m", "lie"),
        default="m",
        help="extract the manifold scalar or its Lie derivative",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(run=_cmd_manifold)

    p = sub.add_parser("verify", help="run the seeded identity checks")
    _add_common(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, default=1e-8, help="identity tolerance")
    p.add_argument("--json", action="store_true", help="print the JSON report")
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.set_defaults(run=_cmd_verify)

    p = sub.add_parser("figure", help="emit a ready-to-plot dataset bundle")
    p.add_argument("which", choices=("fig1", "fig2"))
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(run=_cmd_figure)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except _USAGE_ERRORS as exc:
        print(f"flowcurv: {exc}", file=sys.stderr)
        return 2
    except FlowCurvError as exc:
        extra = ""
        last_time = getattr(exc, "last_time", None)
        if last_time is not None:
            extra = f" (last valid time {last_time:g})"
        print(f"flowcurv: {exc}{extra}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"flowcurv: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
