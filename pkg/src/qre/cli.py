"""Command line front end.

One binary, five subcommands (eval, levelset, solve, aspirational,
bench), stable file formats documented in docs/formats.md.  Exit codes:
0 success, 2 usage or input validation error, 3 infeasible model,
4 solver failure.  Every numeric cell is printed with 9 significant
digits so reruns diff cleanly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .aspirational import AcceptanceFamily, eval_target_representation, from_family
from .bench import (CobbDouglas, cobb_value, contour_polylines,
                    estimate_lipschitz, fit_concave_regression,
                    fit_piecewise_constant, l1_error, run_gap_experiment,
                    runtime_study, true_optimum, _draw_sample)
from .envelope import eval_psi, eval_psi_milp
from .errors import (BigMTooSmall, DegenerateCluster, EmptySample,
                     GroupCountTooLarge, InfeasibleDecisionSet, InternalError,
                     IterationLimit, LevelAboveMax, MalformedProgram, NodeLimit,
                     NonFiniteInput, NonMonotoneUnsupported, OutOfDomain,
                     ShapeMismatch, SpecViolation)
from .level_function import solve_level_function
from .levelsets import levelset_contains, levelset_hrep
from .perminv import GroupShape, eval_psi_perm, solve_robust_perm
from .sample import (RawSample, build_sorted_sample, load_sample_csv,
                     load_sample_json)
from .solver import load_problem_json, solve_robust

_USAGE = (EmptySample, NonFiniteInput, ShapeMismatch, SpecViolation, OutOfDomain,
          GroupCountTooLarge, MalformedProgram, LevelAboveMax,
          NonMonotoneUnsupported, DegenerateCluster, json.JSONDecodeError,
          OSError, ValueError, KeyError)
_INFEASIBLE = (InfeasibleDecisionSet,)
_FAILURE = (IterationLimit, NodeLimit, BigMTooSmall, InternalError)


def _fmt(v) -> str:
    return f"{float(v):.9g}"


def _g9(v) -> float:
    return float(_fmt(v))


def _round(obj):
    """Apply the 9-significant-digit contract recursively."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    return _g9(obj)


def _load_points(path: str) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for k, line in enumerate(csv.reader(fh)):
            if not line:
                continue
            try:
                rows.append([float(c) for c in line])
            except ValueError:
                if k == 0:
                    continue
                raise
    if not rows:
        raise SpecViolation(f"no points in {path}")
    return np.asarray(rows)


def _load_sample(args):
    if args.sample.endswith(".csv"):
        if args.lipschitz is None:
            raise SpecViolation("CSV samples need --lipschitz")
        raw = load_sample_csv(args.sample, lipschitz=args.lipschitz,
                              monotone=args.monotone)
    else:
        raw = load_sample_json(args.sample)
    return build_sorted_sample(raw)


def _emit(rows: list[dict], header: list[str], args):
    if args.json:
        text = json.dumps(_round(rows), indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r[h] if isinstance(r[h], (str, int)) else _fmt(r[h])
                        for h in header])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, args):
    text = json.dumps(_round(obj), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _group_shape(args, dim: int) -> GroupShape | None:
    if args.groups is None:
        return None
    size = args.group_size if args.group_size else dim // args.groups
    return GroupShape(args.groups, size)


def _cmd_eval(args) -> int:
    s = _load_sample(args)
    pts = _load_points(args.points)
    if pts.shape[1] != s.dim:
        raise ShapeMismatch(f"points are {pts.shape[1]}-d, sample is {s.dim}-d")
    shape = _group_shape(args, s.dim)
    rows = []
    for x in pts:
        if args.milp:
            v = eval_psi_milp(s, x, bigM=args.bigm)
        elif shape is not None:
            v = eval_psi_perm(s, shape, x).value
        else:
            v = eval_psi(s, x).value
        rows.append({"psi": v})
    _emit(rows, ["psi"], args)
    return 0


def _cmd_levelset(args) -> int:
    s = _load_sample(args)
    if args.hrep:
        ls = levelset_hrep(s, args.level)
        obj = {"level": ls.level, "index": ls.index,
               "generators": ls.generators.tolist(), "shift": ls.shift,
               "boundary": None if ls.boundary is None else ls.boundary.tolist()}
        _emit_json(obj, args)
        return 0
    if not args.points:
        raise SpecViolation("levelset needs --points or --hrep")
    pts = _load_points(args.points)
    if pts.shape[1] != s.dim:
        raise ShapeMismatch(f"points are {pts.shape[1]}-d, sample is {s.dim}-d")
    rows = [{"contains": int(levelset_contains(s, args.level, x))} for x in pts]
    _emit(rows, ["contains"], args)
    return 0


def _cmd_solve(args) -> int:
    s = _load_sample(args)
    rp = load_problem_json(args.problem)
    shape = _group_shape(args, s.dim)
    if args.method == "level-function":
        if not rp.identity:
            raise SpecViolation("the level-function method needs identity G")
        if shape is not None:
            raise SpecViolation("the level-function method has no group mode")
        res = solve_level_function(s, rp.Z, eps=args.eps, max_iter=args.max_iter)
        obj = {"method": "level-function", "z_star": res.x.tolist(),
               "psi_star": res.value, "iterations": res.iterations,
               "milp_solves": res.milp_solves, "converged": res.converged,
               "delta": res.delta, "deltas": list(res.deltas)}
    else:
        rep = (solve_robust_perm(s, shape, rp) if shape is not None
               else solve_robust(s, rp))
        obj = {"method": "binary", **rep.to_dict()}
    _emit_json(obj, args)
    return 0


def _cmd_aspirational(args) -> int:
    s = _load_sample(args)
    fam = AcceptanceFamily(s)
    if args.export:
        spec = from_family(fam)
        obj = {"breakpoints": spec.breakpoints.tolist(),
               "top_value": spec.top_value,
               "segments": [{"family_size": seg.family_size,
                             "generators": seg.generators.tolist(),
                             "tau_base": seg.tau_base.tolist(),
                             "tau_dir": seg.tau_dir.tolist()}
                            for seg in spec.segments]}
        with open(args.export, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(_round(obj), indent=2) + "\n")
    if args.points:
        pts = _load_points(args.points)
        if pts.shape[1] != s.dim:
            raise ShapeMismatch(f"points are {pts.shape[1]}-d, sample is {s.dim}-d")
        rows = [{"value": eval_target_representation(s, x, fam=fam)} for x in pts]
        _emit(rows, ["value"], args)
    elif not args.export:
        raise SpecViolation("aspirational needs --points or --export")
    return 0


def _write_table(rows: list[dict], header: list[str], path: str, as_json: bool):
    if as_json:
        with open(path.replace(".csv", ".json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(_round(rows), indent=2) + "\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r[h] if isinstance(r[h], (str, int)) else _fmt(r[h])
                        for h in header])


def _cmd_bench(args) -> int:
    if args.target != "cobb-douglas":
        raise SpecViolation(f"unknown benchmark {args.target!r}")
    t_start = time.time()
    cd = CobbDouglas()
    J_list = args.J or [32, 128]
    os.makedirs(args.out, exist_ok=True)
    as_json = args.json

    gaps = run_gap_experiment(cd, J_list=J_list, reps=args.reps, seed=args.seed,
                              lipschitz=args.lipschitz, workers=args.workers)
    _write_table([{"method": r.method, "J": r.J, "mean_gap_pct": r.mean,
                   "std_gap_pct": r.std, "max_gap_pct": r.max} for r in gaps],
                 ["method", "J", "mean_gap_pct", "std_gap_pct", "max_gap_pct"],
                 os.path.join(args.out, "gaps.csv"), as_json)

    def _fits(J: int):
        pts, vals = _draw_sample(cd, J, 0, args.seed)
        s = build_sorted_sample(RawSample(points=pts, values=vals,
                                          lipschitz=args.lipschitz, monotone=False))
        return {"envelope": lambda p, s=s: eval_psi(s, p).value,
                "piecewise_constant": fit_piecewise_constant(pts, vals),
                "concave_regression":
                    fit_concave_regression(pts, vals, seed=args.seed)}

    l1_rows = []
    for J in J_list:
        for name, fn in _fits(J).items():
            l1_rows.append({"method": name, "J": int(J),
                            "l1": l1_error(cd, fn, args.density)})
    _write_table(l1_rows, ["method", "J", "l1"],
                 os.path.join(args.out, "l1.csv"), as_json)

    rt = runtime_study(cd, J_list=J_list, reps=min(args.reps, 5), seed=args.seed,
                       lipschitz=args.lipschitz)
    # wall clock stays out of the tables so reruns are byte-identical
    _write_table(rt, ["J", "lp_solves_mean", "milp_nodes_mean"],
                 os.path.join(args.out, "runtime.csv"), as_json)

    truth = cobb_value(cd, cd.grid(args.contour_density))
    levels = [float(np.quantile(truth, q)) for q in (0.25, 0.5, 0.75)]
    fits = _fits(max(J_list))
    fits["true"] = lambda p: cobb_value(cd, p)
    for name, fn in fits.items():
        rows = contour_polylines(fn, cd.box, levels, density=args.contour_density)
        _write_table(rows, ["level", "segment", "x1", "x2"],
                     os.path.join(args.out, f"contours_{name}.csv"), as_json)

    x_star, f_star = true_optimum(cd)
    meta = {"command": "bench cobb-douglas", "version": __version__,
            "J_list": [int(J) for J in J_list], "reps": args.reps,
            "seed": args.seed, "lipschitz": args.lipschitz,
            "density": args.density, "contour_density": args.contour_density,
            "alpha": list(cd.alpha), "costs": list(cd.costs),
            "box": list(cd.box), "x_star": x_star.tolist(), "f_star": f_star,
            "lipschitz_estimate": estimate_lipschitz(cd),
            "workers": args.workers, "qre_threads": os.environ.get("QRE_THREADS"),
            "wall_time_s": time.time() - t_start,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
    with open(os.path.join(args.out, "meta.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_round(meta), indent=2) + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qre",
                                description="Lipschitz quasiconcave envelopes: "
                                            "evaluate, export level sets, solve "
                                            "robust maximization, benchmark.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def sample_opts(sp):
        sp.add_argument("--sample", required=True, help="sample JSON or CSV")
        sp.add_argument("--lipschitz", type=float, default=None,
                        help="Lipschitz constant (CSV samples only)")
        sp.add_argument("--monotone", action="store_true",
                        help="monotone mode (CSV samples only)")

    def io_opts(sp):
        sp.add_argument("--json", action="store_true", help="JSON instead of CSV")
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    sp = sub.add_parser("eval", help="envelope values at points")
    sample_opts(sp)
    sp.add_argument("--points", required=True, help="CSV, one point per row")
    sp.add_argument("--milp", action="store_true",
                    help="use the exact disjunctive program instead")
    sp.add_argument("--bigm", type=float, default=None)
    sp.add_argument("--groups", type=int, default=None,
                    help="permutation-invariant mode: number of groups")
    sp.add_argument("--group-size", type=int, default=None)
    io_opts(sp)
    sp.set_defaults(fn=_cmd_eval)

    sp = sub.add_parser("levelset", help="membership tests or H-representation")
    sample_opts(sp)
    sp.add_argument("--level", type=float, required=True)
    sp.add_argument("--points", default=None, help="CSV, one point per row")
    sp.add_argument("--hrep", action="store_true",
                    help="export the polyhedral description instead")
    io_opts(sp)
    sp.set_defaults(fn=_cmd_levelset)

    sp = sub.add_parser("solve", help="maximize the envelope over G(Z)")
    sample_opts(sp)
    sp.add_argument("--problem", required=True, help="problem JSON")
    sp.add_argument("--method", choices=["binary", "level-function"],
                    default="binary")
    sp.add_argument("--eps", type=float, default=1e-6)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.add_argument("--groups", type=int, default=None)
    sp.add_argument("--group-size", type=int, default=None)
    io_opts(sp)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("aspirational", help="target-representation values/export")
    sample_opts(sp)
    sp.add_argument("--points", default=None, help="CSV, one point per row")
    sp.add_argument("--export", default=None, help="write the TargetSpec here")
    io_opts(sp)
    sp.set_defaults(fn=_cmd_aspirational)

    sp = sub.add_parser("bench", help="benchmark studies")
    sp.add_argument("target", choices=["cobb-douglas"])
    sp.add_argument("--J", type=int, action="append", default=None)
    sp.add_argument("--reps", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--lipschitz", type=float, default=0.30)
    sp.add_argument("--density", type=int, default=25, help="L1 grid density")
    sp.add_argument("--contour-density", type=int, default=40)
    sp.add_argument("--workers", type=int, default=None,
                    help="pool size (default: QRE_THREADS or CPU count)")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(fn=_cmd_bench)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except _INFEASIBLE as exc:
        print(f"qre: infeasible model: {exc}", file=sys.stderr)
        return 3
    except _FAILURE as exc:
        print(f"qre: solver failure: {exc}", file=sys.stderr)
        return 4
    except _USAGE as exc:
        print(f"qre: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
