"""everse command line: generate, verify, events, intersect, schedule-check."""
import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import algebra, events, intersections, meshio, smoothness
from .errors import EverseError, ScheduleError, SmoothnessError
from .surface import StageParams, damp_map, family_point, inversion_map

PRESETS = {
    # Fig. 7 style closing parameters
    "halfway": dict(n=2, t=0.0, xi=1.0, eta=1.0, alpha=1.0, beta=1 / 25, omega=2.0),
    "boy": dict(n=3, t=0.0, xi=1.0, eta=1.0, alpha=1.0, beta=1 / 4, omega=2.0),
    "wormhole": dict(n=2, t=1.5, xi=1.0, eta=1.0, alpha=1.0, beta=1 / 25, omega=2.0),
    "sphere": dict(n=2, t=1.5, q=2 / 3, xi=0.0, eta=1.0, alpha=0.0, beta=1.0, omega=2.0, lam=0.0),
}


class UsageError(Exception):
    pass


def _resolution(text):
    try:
        r, c = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("resolution must look like ROWSxCOLS") from None
    return r, c


def _stage_args(p):
    g = p.add_argument_group("stage overrides")
    for name in ("n",):
        g.add_argument(f"--{name}", type=int)
    for name in ("t", "p", "q", "xi", "eta", "alpha", "beta", "omega", "lam", "epsilon"):
        g.add_argument(f"--{name}", type=float)


def _stage_from(args):
    base = dict(PRESETS[args.stage])
    for k in ("n", "t", "p", "q", "xi", "eta", "alpha", "beta", "omega", "lam", "epsilon"):
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
    return StageParams.make(**base)


def build_parser():
    ap = argparse.ArgumentParser(prog="everse", description=__doc__)
    ap.add_argument("--config", help="JSON file whose keys override command-line flags")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write mesh frames and a manifest for a schedule")
    g.add_argument("--schedule", default="default", help="'default' or a schedule JSON file")
    g.add_argument("--frames", type=int, help="frames per leg (default 60)")
    g.add_argument("--out", "-o", required=True, help="output directory")
    g.add_argument("--format", choices=["obj", "ply"], default="obj")
    g.add_argument("--resolution", type=_resolution, default=meshio.DEFAULT_RESOLUTION)
    g.add_argument("--direction", choices=["forward", "reverse"])
    g.add_argument("--Q", type=float, help="Q of the built-in schedule")
    g.add_argument("--extra-d1-t", type=float, help="time of the independent D1 event")
    g.add_argument("--threads", type=int, help="worker threads (default EVERSE_THREADS or 1)")

    v = sub.add_parser("verify", help="smoothness and implicit-equation checks for one stage")
    v.add_argument("--stage", choices=sorted(PRESETS), default="halfway")
    _stage_args(v)
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tolerance", type=float, default=1e-8, help="implicit residual tolerance")
    v.add_argument("--fd-tolerance", type=float, default=1e-6)
    v.add_argument("--grid", type=_resolution, default=(200, 200))
    v.add_argument("--implicit", action="store_true", help="implicit residuals only")
    v.add_argument("--out", help="write the JSON report here instead of stdout")

    e = sub.add_parser("events", help="event timeline as JSON")
    e.add_argument("--direction", choices=["forward", "reverse"], default="forward")
    e.add_argument("--Q", type=float, default=2 / 3)
    e.add_argument("--extra-d1-t", type=float)
    e.add_argument("--triple-t", type=float, action="append", default=[],
                   help="also report triple points at this t (repeatable)")
    e.add_argument("--out")

    i = sub.add_parser("intersect", help="analytic and mesh self-intersections, compared")
    i.add_argument("--stage", choices=["halfway", "boy", "wormhole"], default="halfway")
    _stage_args(i)
    i.add_argument("--resolution", type=_resolution, default=(200, 628))
    i.add_argument("--H", type=float, default=meshio.DEFAULT_H)
    i.add_argument("--samples", type=int, default=2000)
    i.add_argument("--out", help="JSON output file")
    i.add_argument("--obj", help="write analytic polylines as OBJ line elements")

    s = sub.add_parser("schedule-check", help="validate a schedule document")
    s.add_argument("--schedule", default="default")
    s.add_argument("--out")
    return ap


def _emit(report, out):
    text = json.dumps(report, indent=1, sort_keys=True, default=_json_default) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o))


def _apply_config(args):
    if not args.config:
        return args
    cfg = json.loads(Path(args.config).read_text())
    for k, v in cfg.items():
        k = k.replace("-", "_")
        if not hasattr(args, k):
            raise UsageError(f"config key {k!r} is not a flag of {args.command}")
        if k in ("resolution", "grid") and isinstance(v, str):
            v = _resolution(v)
        setattr(args, k, v)
    return args


# ---------------------------------------------------------------- commands

def cmd_generate(args):
    if args.schedule != "default" and (args.Q is not None):
        raise UsageError("--Q only applies to the built-in schedule")
    if args.schedule == "default":
        sched = meshio.default_schedule(frames_per_leg=args.frames or 60,
                                        Q=args.Q or 2 / 3, direction=args.direction or "forward")
    else:
        sched = meshio.parse_schedule(Path(args.schedule))
        if args.frames:
            sched.frames_per_leg = args.frames
        if args.direction:
            sched.direction = args.direction
        sched.validate()
    rows, cols = args.resolution
    files = meshio.frame_sequence(sched, args.out, fmt=args.format, rows=rows, cols=cols,
                                  threads=args.threads, extra_d1_t=args.extra_d1_t)
    _emit({"frames": len(files) - 1, "manifest": str(files[-1])}, None)
    return 0


def _fd_checks(stage, rng, samples, tol):
    params = stage.surface
    h = rng.uniform(-3, 3, samples)
    phi = rng.uniform(-np.pi, np.pi, samples)
    an = smoothness.normal_vector(params, h, phi)
    fd = smoothness.fd_normal(params, h, phi)
    nerr = float(np.max(np.linalg.norm(an - fd, axis=-1) / np.linalg.norm(an, axis=-1)))
    r = family_point(params, h, phi)
    jd = smoothness.jacobian_damp(r, stage)
    jd_fd = np.linalg.det(smoothness.fd_jacobian(lambda x: damp_map(x, stage), r))
    derr = float(np.max(np.abs(jd - jd_fd) / np.abs(jd)))
    rp = damp_map(r, stage)
    out = {"normal_rel_err": nerr, "damp_jacobian_rel_err": derr}
    if stage.alpha + stage.beta > 0 and stage.beta > 0:
        ji = smoothness.jacobian_inversion(rp, stage)
        ji_fd = np.linalg.det(smoothness.fd_jacobian(lambda x: inversion_map(x, stage), rp))
        out["inversion_jacobian_rel_err"] = float(np.max(np.abs(ji - ji_fd) / np.abs(ji)))
    out["passed"] = all(v < tol for k, v in out.items() if k.endswith("err"))
    return out


def _implicit(stage, rng, samples, tol):
    params = stage.surface
    h = rng.uniform(-3, 3, samples)
    phi = rng.uniform(-np.pi, np.pi, samples)
    pts = family_point(params, h, phi)
    res = {}
    if params.n == 2 and params.t == 0 and params.q == 0 and params.p == 1:
        res["sextic_halfway"] = float(np.max(algebra.sextic_residual_halfway(pts).relative))
    if params.n == 3 and params.t == 0 and params.p == 1:
        res["boy_quintic"] = float(np.max(algebra.boy_quintic_residual(pts).relative))
    if params.n == 2 and params.p == 1:
        res["resultant"] = float(np.max(algebra.reduced_sextic_residual_t(pts, params.t, params.q).relative))
    if not res:
        return {"note": "no implicit equation for these parameters (needs p = 1)", "passed": True}
    return {"max_relative": res, "tolerance": tol, "passed": all(v < tol for v in res.values())}


def cmd_verify(args):
    stage = _stage_from(args)
    rng = np.random.default_rng(args.seed)
    report = {"stage": stage.as_dict()}
    ok = True
    report["implicit"] = _implicit(stage, rng, args.samples, args.tolerance)
    ok &= report["implicit"]["passed"]
    if not args.implicit:
        rep = smoothness.stage_report(stage, grid=args.grid)
        report["smoothness"] = rep.to_dict()
        ok &= rep.passed
        if stage.lam == 1.0:
            report["finite_differences"] = _fd_checks(stage, rng, args.samples, args.fd_tolerance)
            ok &= report["finite_differences"]["passed"]
        if stage.eta > 0 and stage.beta > 0 and (stage.alpha > 0 or stage.xi > 0):
            pole = smoothness.pole_regularity_check(stage)
            report["pole_regularity"] = pole.to_dict()
            ok &= pole.passed
    report["passed"] = bool(ok)
    _emit(report, args.out)
    return 0 if ok else 1


def cmd_events(args):
    sched = meshio.default_schedule(frames_per_leg=1, Q=args.Q, direction=args.direction)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tl = events.event_timeline(sched, extra_d1_t=args.extra_d1_t)
    report = {"encoding": events.encoding(tl), "events": [e.to_dict() for e in tl],
              "warnings": [str(w.message) for w in caught]}
    if args.triple_t:
        report["triple_points"] = {str(t): [s.to_dict() for s in events.triple_points(t)]
                                   for t in args.triple_t}
    _emit(report, args.out)
    return 0


def analytic_branches(stage, H, samples):
    params = stage.surface
    if params.n == 3 and params.t == 0:
        brs = [intersections.trifolium_curve(samples, p=params.p)]
    else:
        brs = intersections.general_curve(params, samples=samples // 4)
    return intersections.clip_to_domain(brs, H)


def cmd_intersect(args):
    stage = _stage_from(args)
    rows, cols = args.resolution
    mesh = meshio.tessellate(stage, rows, cols, mode="raw", H=args.H)
    cloud = intersections.mesh_self_intersections(mesh)
    brs = analytic_branches(stage, args.H, args.samples)
    ana = intersections.branch_points(brs)
    d = intersections.hausdorff(cloud.points, ana)
    tol = 2 * mesh.max_edge()
    report = {"stage": stage.as_dict(), "resolution": [rows, cols],
              "mesh_segments": len(cloud), "candidate_pairs": cloud.candidate_pairs,
              "analytic_branches": [{"kind": b.kind, "note": b.note, "samples": len(b),
                                     "polyline": b.points} for b in brs],
              "hausdorff": d, "tolerance": tol, "passed": bool(d < tol)}
    if args.obj:
        lines, base = [], 1
        for b in brs:
            lines += ["v %.17g %.17g %.17g" % tuple(p) for p in b.points.tolist()]
            lines.append("l " + " ".join(str(base + k) for k in range(len(b))))
            base += len(b)
        Path(args.obj).write_text("\n".join(lines) + "\n")
    _emit(report, args.out)
    return 0 if report["passed"] else 1


def cmd_schedule_check(args):
    sched = meshio.parse_schedule(args.schedule if args.schedule == "default" else Path(args.schedule))
    _emit({"valid": True, "rows": [r.to_dict() for r in sched.rows],
           "legs": [l.name for l in sched.legs()], "frames": sched.frame_count}, args.out)
    return 0


COMMANDS = {"generate": cmd_generate, "verify": cmd_verify, "events": cmd_events,
            "intersect": cmd_intersect, "schedule-check": cmd_schedule_check}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args = _apply_config(args)
    except SystemExit as e:
        return int(e.code or 0) if e.code in (0, None) else 2
    except (UsageError, OSError, json.JSONDecodeError) as e:
        print(f"everse: {e}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"everse: {e}", file=sys.stderr)
        return 2
    except (ScheduleError, SmoothnessError, EverseError, ValueError, OSError) as e:
        print(f"everse: {e}", file=sys.stderr)
        return 1


def run(argv=None):
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
