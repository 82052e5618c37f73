"""Command-line interface: ``adaptedot <command> ...``.

Failures print a JSON object ``{"error": kind, "message": ...}`` on stderr
and exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as aio
from .analytics import StoppingCost, coin_gap_cost, doob, martingale_deviation, snell
from .approximation import covering_grid, quantize_with_bound
from .canonical import NestedAtom, canonical_process, nested_distribution
from .geometry import BarycenterProblem, InterpolationFamily, barycenter, check_constant_speed, crr_model
from .logic import af_from_json, equivalent_rank
from .metric import adapted_distance, flatten
from .process import validate

NAMED_COSTS = {"coin-gap": coin_gap_cost}


class CliError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _emit(text, out=None):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _as_process(obj):
    return canonical_process(obj) if isinstance(obj, NestedAtom) else obj


def _check_p(p, strict=False):
    if strict and p <= 1:
        raise CliError("p-range", f"p must be > 1 for this command, got {p}")
    if p < 1:
        raise CliError("p-range", f"p must be >= 1, got {p}")


def cmd_validate(a):
    proc_obj = aio.load_json(a.input)
    try:
        proc = aio.process_from_json(proc_obj)
        rep = validate(proc)
        report = {"ok": rep.ok, "violations": rep.violations, "pruned": rep.pruned}
    except aio.SchemaError as exc:
        report = {"ok": False, "violations": [str(exc)], "pruned": []}
    _emit(json.dumps(report, indent=2), a.out)
    return 0 if report["ok"] else 1


def cmd_canon(a):
    nd = nested_distribution(_as_process(aio.load_any(a.input)))
    _emit(json.dumps(aio.nested_to_json(nd), indent=2), a.out)
    return 0


def _coupling_rows(raw):
    for i, j in zip(*np.nonzero(raw.matrix)):
        yield [int(i), int(j), float(raw.matrix[i, j]),
               json.dumps(raw.x.paths[i].tolist()), json.dumps(raw.y.paths[j].tolist())]


def cmd_dist(a):
    _check_p(a.p)
    x, y = aio.load_any(a.a), aio.load_any(a.b)
    try:
        value, plan = adapted_distance(x, y, a.p, threads=a.threads)
    except ValueError as exc:
        raise CliError("dimension", str(exc)) from exc
    sys.stdout.write(aio.fmt(value) + "\n")
    if a.out:
        aio.write_csv(_coupling_rows(flatten(plan)), ["x_atom", "y_atom", "mass", "x_path", "y_path"], a.out)
    return 0


def _load_cost(source, horizon):
    if source in NAMED_COSTS:
        cost = NAMED_COSTS[source]()
    else:
        obj = aio.load_json(source)
        try:
            cost = StoppingCost([af_from_json(c) for c in obj["costs"]])
        except (KeyError, TypeError) as exc:
            raise CliError("schema", f"cost JSON needs a 'costs' list: {exc}") from exc
    if cost.horizon != horizon:
        raise CliError("dimension", f"cost has horizon {cost.horizon}, process has {horizon}")
    return cost


def cmd_stop(a):
    _check_p(a.p)
    proc = _as_process(aio.load_any(a.input))
    res = snell(proc, _load_cost(a.cost, proc.horizon))
    sys.stdout.write(aio.fmt(res.value) + "\n")
    if a.out:
        rows = ([k, int(res.rule[k])] + [float(v) for v in res.envelope[k]] for k in range(proc.n_atoms))
        aio.write_csv(rows, ["atom", "stop_time"] + [f"S_{t}" for t in range(1, proc.horizon + 1)], a.out)
    return 0


def cmd_doob(a):
    proc = _as_process(aio.load_any(a.input))
    D = doob(proc)
    obj = {
        "martingale": D.martingale.tolist(),
        "drift": D.drift.tolist(),
        "martingale_deviation_of_input": martingale_deviation(proc),
    }
    _emit(json.dumps(obj, indent=2), a.out)
    return 0


def _marginal_means(proc):
    return [float(v) for v in np.tensordot(proc.probs, proc.paths, axes=(0, 0))[:, 0]]


def cmd_geodesic(a):
    _check_p(a.p, strict=True)
    x, y = _as_process(aio.load_any(a.a)), _as_process(aio.load_any(a.b))
    fam = InterpolationFamily(x, y, a.p)
    us = [float(u) for u in a.samples.split(",")]
    rows = []
    for u in us:
        Z = fam(u)
        rows.append([u, adapted_distance(x, Z, a.p)[0]] + _marginal_means(Z))
    header = ["u", "distance_from_x"] + [f"mean_{t}" for t in range(1, x.horizon + 1)]
    text = aio.write_csv(rows, header, a.out)
    if not a.out:
        sys.stdout.write(text)
    rep = check_constant_speed(fam, us)
    sys.stderr.write(json.dumps({"distance": fam.distance, "constant_speed": rep.ok,
                                 "violations": rep.violations}) + "\n")
    return 0 if rep.ok else 1


def cmd_barycenter(a):
    _check_p(a.p, strict=True)
    if a.inputs:
        inputs = [_as_process(aio.load_any(f)) for f in a.inputs]
    else:
        inputs = [crr_model(4, 1.0, 1.1, 0.9, 0.5), crr_model(4, 1.0, 1.2, 0.85, 0.4),
                  crr_model(4, 1.0, 1.05, 0.95, 0.6)]
    weights = [float(w) for w in a.weights.split(",")] if a.weights else None
    try:
        prob = BarycenterProblem(inputs, weights, a.p)
    except ValueError as exc:
        raise CliError("input", str(exc)) from exc
    res = barycenter(prob, max_iters=a.max_iters, tol=a.tol, threads=a.threads)
    means = _marginal_means(res.process)
    rows = [[k, v] + (means if k == len(res.trace) - 1 else [""] * len(means)) for k, v in enumerate(res.trace)]
    header = ["iter", "objective"] + [f"mean_{t}" for t in range(1, res.process.horizon + 1)]
    text = aio.write_csv(rows, header, a.out)
    if not a.out:
        sys.stdout.write(text)
    return 0


def cmd_quantize(a):
    _check_p(a.p)
    proc = _as_process(aio.load_any(a.input))
    if a.grid:
        grid = aio.load_grid(a.grid)
    elif a.eps:
        grid = covering_grid(proc, a.eps, a.p)
    else:
        raise CliError("usage", "quantize needs --grid or --eps")
    q, bound = quantize_with_bound(proc, grid, a.p)
    obj = aio.process_to_json(q)
    obj["certified_bound"] = bound
    obj["distance"] = adapted_distance(proc, q, a.p)[0]
    _emit(json.dumps(obj, indent=2), a.out)
    return 0


def cmd_rank(a):
    x, y = _as_process(aio.load_any(a.a)), _as_process(aio.load_any(a.b))
    if x.horizon != y.horizon or x.dim != y.dim:
        raise CliError("dimension", "processes differ in horizon or dim")
    orders = [a.n] if a.n is not None else list(range(x.horizon))
    res = {str(n): equivalent_rank(x, y, n) for n in orders}
    _emit(json.dumps(res), a.out)
    return 0


def cmd_demo(a):
    from .demo import run_checks

    checks = run_checks()
    rows = [["PASS" if c.passed else "FAIL", c.name, c.expected, c.got] for c in checks]
    width = max(len(c.name) for c in checks)
    lines = [f"{r[0]}  {r[1]:<{width}}  expected={r[2]}  got={r[3]}" for r in rows]
    _emit("\n".join(lines))
    if a.out:
        aio.write_csv(rows, ["status", "check", "expected", "got"], a.out)
    return 0 if all(c.passed for c in checks) else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=1.0, help="exponent p (default 1)")
    common.add_argument("--out", help="write the main artifact here")
    common.add_argument("--threads", type=int, default=None, help="bound on worker threads")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized inputs")
    common.add_argument("--tol", type=float, default=1e-12, help="tolerance override")

    ap = argparse.ArgumentParser(prog="adaptedot", description="Adapted Wasserstein toolkit for finite filtered processes.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a process file")
    s.add_argument("input")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("canon", parents=[common], help="nested distribution of a process")
    s.add_argument("input")
    s.set_defaults(func=cmd_canon)

    s = sub.add_parser("dist", parents=[common], help="adapted Wasserstein distance")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("stop", parents=[common], help="optimal stopping value")
    s.add_argument("input")
    s.add_argument("--cost", required=True, help=f"named cost ({', '.join(NAMED_COSTS)}) or cost JSON file")
    s.set_defaults(func=cmd_stop)

    s = sub.add_parser("doob", parents=[common], help="Doob decomposition")
    s.add_argument("input")
    s.set_defaults(func=cmd_doob)

    s = sub.add_parser("geodesic", parents=[common], help="interpolation family as CSV")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--samples", default="0,0.25,0.5,0.75,1")
    s.set_defaults(func=cmd_geodesic, p=2.0)

    s = sub.add_parser("barycenter", parents=[common], help="barycenter trace as CSV")
    s.add_argument("inputs", nargs="*", help="process files (default: three binomial models)")
    s.add_argument("--weights", help="comma-separated convex weights")
    s.add_argument("--max-iters", type=int, default=100)
    s.set_defaults(func=cmd_barycenter, p=2.0)

    s = sub.add_parser("quantize", parents=[common], help="quantize onto a grid")
    s.add_argument("input")
    s.add_argument("--grid", help="grid JSON file")
    s.add_argument("--eps", type=float, help="build a covering grid with AW_p <= eps")
    s.set_defaults(func=cmd_quantize)

    s = sub.add_parser("rank", parents=[common], help="prediction-process equivalence")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--n", type=int, default=None)
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("demo", parents=[common], help="reproduce the worked examples")
    s.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads is not None:
        os.environ["ADAPTED_OT_THREADS"] = str(max(1, args.threads))
    try:
        return args.func(args)
    except CliError as exc:
        err = {"error": exc.kind, "message": str(exc)}
    except aio.SchemaError as exc:
        err = {"error": "schema", "message": str(exc)}
    except FileNotFoundError as exc:
        err = {"error": "io", "message": str(exc)}
    except ValueError as exc:
        err = {"error": "value", "message": str(exc)}
    sys.stderr.write(json.dumps(err) + "\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
