"""``shadowtrace`` command line front end.

Every subcommand writes its artifacts (CSV, JSON, SVG) plus a
``manifest.json`` into ``--out`` and prints a short JSON summary.  Exit
codes: 0 success, 2 invalid input, 3 numerical failure, 4 unmet hypothesis.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import circle_oracle
from .dynamics import IntegrationConfig, integrate_rse
from .errors import HypothesisError, NumericalError, ShadowError, ValidationError
from .geometry import TWO_PI, curve_from_spec
from .outputs import RunManifest, cusp_report, dumps, write_json, write_sweep_csv, write_trajectory_csv
from .plotting import sweep_figure, trace_figure
from .rotation import (critical_distance, find_distance_for_rotation, locate_periodic_orbit,
                       rotation_sweep, turning_distance)
from .singularities import distinct_cusps, classify_cusp, detect_singular_times
from .validation import run_oracle_battery

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Float literal or simple arithmetic in ``pi`` (``4*pi``, ``-pi/2``)."""
    src = text.strip().replace("π", "pi")
    src = re.sub(r"(\d)\s*pi", r"\1*pi", src)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError
    try:
        val = ev(ast.parse(src, mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise ValidationError(f"cannot parse number {text!r}") from None
    if not math.isfinite(val):
        raise ValidationError(f"number {text!r} is not finite")
    return val


def parse_span(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValidationError(f"--t-span must look like a:b, got {text!r}")
    return parse_number(parts[0]), parse_number(parts[1])


def load_curve_spec(arg: str) -> dict:
    s = arg.strip()
    if s.startswith("{"):
        try:
            spec = json.loads(s)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid inline curve JSON: {exc}") from None
    else:
        p = Path(s)
        if not p.is_file():
            raise ValidationError(f"--curve is neither inline JSON nor an existing file: {arg!r}")
        try:
            spec = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid curve JSON in {p}: {exc}") from None
    curve_from_spec(spec)       # validate early
    return spec


def _config(args) -> IntegrationConfig:
    return IntegrationConfig(steps_per_period=args.steps_per_period)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(summary: dict):
    sys.stdout.write(dumps(summary))


def _trace_artifacts(curve, traj, out, stem, cfg, title=None):
    events = [classify_cusp(curve, traj.R, e, cfg) for e in detect_singular_times(curve, traj)]
    csv = write_trajectory_csv(traj, out / f"{stem}.csv")
    svg = trace_figure(curve, traj, events, out / f"{stem}.svg", title=title)
    cj = write_json(cusp_report(events), out / f"{stem}_cusps.json")
    return events, [csv, svg, cj]


def cmd_trace(args) -> int:
    spec = load_curve_spec(args.curve)
    curve = curve_from_spec(spec)
    cfg = _config(args)
    span = parse_span(args.t_span)
    R, theta0 = parse_number(args.R), parse_number(args.theta0)
    t_init = parse_number(args.t_init) if args.t_init is not None else None
    traj = integrate_rse(curve, R, theta0, span, cfg, t_init=t_init)
    out = _outdir(args)
    events, paths = _trace_artifacts(curve, traj, out, "trajectory", cfg)
    man = RunManifest("trace", spec, {"R": R, "theta0": theta0, "t_span": list(span),
                                      "t_init": traj.t_init, "steps_per_period": cfg.steps_per_period},
                      paths)
    man.write(out / "manifest.json")
    _emit({"samples": int(traj.t.size), "cusps": len(events), "distance_error": traj.distance_error(),
           "config_hash": man.config_hash, "outputs": [str(p) for p in paths]})
    return 0


def cmd_sweep(args) -> int:
    spec = load_curve_spec(args.curve)
    curve = curve_from_spec(spec)
    cfg = _config(args)
    lo, hi = parse_number(args.R_min), parse_number(args.R_max)
    if not 0 < lo <= hi or (args.n_points > 1 and lo == hi):
        raise ValidationError("need 0 < R_min < R_max")
    if args.n_points < 1:
        raise ValidationError("--n-points must be >= 1")
    grid = np.linspace(lo, hi, args.n_points) if args.n_points > 1 else np.array([lo])
    pts = rotation_sweep(curve, grid, cfg, args.n_periods)
    out = _outdir(args)
    oracle = None
    if spec.get("type") == "circle":
        r = float(spec.get("radius", 1.0))
        oracle = lambda R: circle_oracle.rotation_number_circle(R / r)  # noqa: E731
    csv = write_sweep_csv(pts, out / "sweep.csv")
    svg = sweep_figure(pts, out / "sweep.svg", oracle=oracle)
    man = RunManifest("sweep", spec, {"R_min": lo, "R_max": hi, "n_points": args.n_points,
                                      "n_periods": args.n_periods,
                                      "steps_per_period": cfg.steps_per_period}, [csv, svg])
    man.write(out / "manifest.json")
    _emit({"points": len(pts), "failed": [p.R for p in pts if p.estimate is None],
           "config_hash": man.config_hash, "outputs": [str(csv), str(svg)]})
    return 0


def cmd_critical(args) -> int:
    spec = load_curve_spec(args.curve)
    curve = curve_from_spec(spec)
    cfg = _config(args)
    tol = parse_number(args.tol)
    crit = critical_distance(curve, tol, cfg, args.n_periods)
    out = _outdir(args)
    paths = [write_json(crit.to_dict(), out / "critical.json")]
    summary = {"critical": crit.estimate, "bracket": list(crit.bracket),
               "upper_bound": crit.notes["upper_bound"]}
    if args.turning:
        turn = turning_distance(curve, tol, cfg, args.n_periods, critical=crit)
        paths.append(write_json(turn.to_dict(), out / "turning.json"))
        summary.update(turning=turn.estimate, turning_bracket=list(turn.bracket),
                       difference=turn.estimate - crit.estimate)
    man = RunManifest("critical", spec, {"tol": tol, "n_periods": args.n_periods,
                                         "turning": args.turning,
                                         "steps_per_period": cfg.steps_per_period}, paths)
    man.write(out / "manifest.json")
    summary.update(config_hash=man.config_hash, outputs=[str(p) for p in paths])
    _emit(summary)
    return 0


def cmd_subharmonic(args) -> int:
    spec = load_curve_spec(args.curve)
    curve = curve_from_spec(spec)
    cfg = _config(args)
    p, q = args.p, args.q
    if not p > q >= 1 or math.gcd(p, q) != 1:
        raise ValidationError("need co-prime integers p > q >= 1")
    w0 = curve.metrics.rotation_index
    if w0 <= 0 or Fraction(q, p) >= w0:
        raise HypothesisError(f"q/p must be below the rotation index {w0}")
    target = Fraction(w0 * p - q, p)
    tol = parse_number(args.tol)
    rep = find_distance_for_rotation(curve, target, tol=tol, cfg=cfg, n_periods=args.n_periods)
    R = rep.bracket[1]          # the edge where a periodic orbit of this type exists
    theta_star = locate_periodic_orbit(curve, R, target, cfg=cfg)
    T = TWO_PI * p
    traj = integrate_rse(curve, R, theta_star, (0.0, T), cfg)
    closure = float(np.linalg.norm(traj.positions[-1] - traj.positions[0]))
    one_turn = float(np.linalg.norm(traj.position_at(np.array([TWO_PI]))[0] - traj.positions[0]))
    out = _outdir(args)
    events, paths = _trace_artifacts(curve, traj, out, "orbit", cfg,
                                     title=f"rho = {target}, R = {R:.10g}")
    events = distinct_cusps([e for e in events if e.time < T - 1e-9])
    warning = None
    if closure > 1e-8:
        warning = "closure is sensitive to the shadowing distance; the periodic orbit is poorly isolated"
    result = {"R": R, "bracket": list(rep.bracket), "target_rotation": str(target),
              "theta_star": theta_star, "period": T, "closure": closure,
              "displacement_after_one_period": one_turn, "cusps": len(events),
              "outer": sum(e.branch == "outer" for e in events),
              "inner": sum(e.branch == "inner" for e in events),
              # the 2q count is only guaranteed beyond the largest radius of curvature
              "expected_cusps": 2 * q if curve.metrics.convex and R > curve.metrics.r_max else None,
              "warning": warning}
    paths.append(write_json(result, out / "subharmonic.json"))
    man = RunManifest("subharmonic", spec, {"p": p, "q": q, "tol": tol, "n_periods": args.n_periods,
                                            "steps_per_period": cfg.steps_per_period}, paths)
    man.write(out / "manifest.json")
    result.update(config_hash=man.config_hash)
    _emit(result)
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_oracle_check(args) -> int:
    cfg = _config(args)
    card = run_oracle_battery(args.n_periods, cfg, seed=args.seed, rotation_grid=args.grid_points)
    out = _outdir(args)
    path = write_json(card, out / "scorecard.json")
    RunManifest("oracle-check", {"type": "circle", "radius": 1.0},
                {"n_periods": args.n_periods, "seed": args.seed, "grid_points": args.grid_points,
                 "steps_per_period": cfg.steps_per_period}, [path]).write(out / "manifest.json")
    for c in card["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: {c['value']} (threshold {c['threshold']})")
    if not card["passed"]:
        print("oracle check failed", file=sys.stderr)
        return NumericalError.exit_code
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shadowtrace", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, curve=True):
        if curve:
            p.add_argument("--curve", required=True, help="curve spec: inline JSON or a JSON file")
        p.add_argument("--steps-per-period", type=int, default=4096)
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("trace", help="integrate one shadowing curve")
    common(p)
    p.add_argument("--R", required=True)
    p.add_argument("--theta0", default="0")
    p.add_argument("--t-span", default="0:2*pi")
    p.add_argument("--t-init", default=None, help="time at which theta equals theta0 (default: span start)")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("sweep", help="rotation number over a range of distances")
    common(p)
    p.add_argument("--R-min", required=True)
    p.add_argument("--R-max", required=True)
    p.add_argument("--n-points", type=int, default=100)
    p.add_argument("--n-periods", type=int, default=512)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("critical", help="critical (and optionally turning) distance")
    common(p)
    p.add_argument("--tol", default="1e-3")
    p.add_argument("--n-periods", type=int, default=512)
    p.add_argument("--turning", action="store_true")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("subharmonic", help="distance and orbit with rotation w0 - q/p")
    common(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--tol", default="1e-10")
    p.add_argument("--n-periods", type=int, default=512)
    p.set_defaults(func=cmd_subharmonic)

    p = sub.add_parser("oracle-check", help="cross-check integrators against circle closed forms")
    common(p, curve=False)
    p.add_argument("--n-periods", type=int, default=512)
    p.add_argument("--grid-points", type=int, default=50)
    p.add_argument("--seed", type=int, default=20240611)
    p.set_defaults(func=cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ShadowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
