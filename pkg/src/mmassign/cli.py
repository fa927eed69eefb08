"""Command line runner: validate, paths, solve, compare, verify, oracle.

Every run writes a manifest whose hash covers the scenario content (after
``--set`` overrides), the solver options and the principle(s).  Timestamps are
recorded in the manifest but kept out of the hash, so reruns of the same
manifest produce byte-identical CSV files.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import pathlib
import sys
import time
from importlib import resources

from . import __version__
from .analysis import (aggregate_link_flows, modal_share, price_of_anarchy, scenario_poa_bound, sms_demand,
                       system_cost, verify_equilibrium)
from .costs import FlowState, generalized_path_cost
from .model import ModelOptions, build_program, provenance_rows
from .network import ScenarioError, apply_override, load_scenario, parse_value, serialize_scenario, validate_scenario
from .oracle import CapExceeded, brute_force_solve
from .paths import build_catalog, catalog_rows
from .pipeline import solve as run_solve
from .solver import SolverOptions, export_mps


class CliError(Exception):
    def __init__(self, kind, message, code=2, **extra):
        super().__init__(message)
        self.kind, self.code, self.extra = kind, code, extra


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


# -- scenario loading -------------------------------------------------------

def _scenario_text(arg: str) -> tuple[str, str]:
    """Read a scenario from a path, falling back to the shipped fixtures."""
    p = pathlib.Path(arg)
    if p.is_file():
        return p.read_text(encoding="utf-8"), str(p)
    data = resources.files("mmassign") / "data"
    for cand in (data / arg, data / f"{arg}.json", data / "micro" / arg, data / "micro" / f"{arg}.json"):
        if cand.is_file():
            return cand.read_text(encoding="utf-8"), f"mmassign:data/{arg}"
    raise CliError("not_found", f"scenario {arg!r} not found")


def load(args):
    text, where = _scenario_text(args.scenario)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("parse", f"line {exc.lineno} col {exc.colno}: {exc.msg}", path=where) from None
    for item in args.set or []:
        if "=" not in item:
            raise CliError("usage", f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        apply_override(doc, key.strip(), parse_value(val.strip()))
    try:
        s = load_scenario(json.dumps(doc))
    except ScenarioError as exc:
        raise CliError("scenario", str(exc), path=exc.path) from None
    return s, where


def solver_options(args) -> SolverOptions:
    kw = {}
    if getattr(args, "gap", None) is not None:
        kw["gap_tol"] = args.gap
    if getattr(args, "time_limit", None) is not None:
        kw["time_limit"] = args.time_limit
    if getattr(args, "nodes", None) is not None:
        kw["node_limit"] = args.nodes
    if getattr(args, "threads", None) is not None:
        kw["threads"] = args.threads
    try:
        return SolverOptions(**kw)
    except ValueError as exc:
        raise CliError("usage", str(exc)) from None


def manifest(args, s, where, principles, opts: SolverOptions | None, started):
    canon = serialize_scenario(s)
    body = {
        "scenario": where,
        "scenario_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "toggles": s.toggles.to_doc(),
        "solver": None if opts is None else {
            "gap_tol": opts.gap_tol, "feas_tol": opts.feas_tol, "int_tol": opts.int_tol,
            "node_limit": opts.node_limit, "time_limit": opts.time_limit, "threads": opts.threads,
            "branching": opts.branching, "seed": opts.seed},
        "principles": list(principles),
        "overrides": list(args.set or []),
        "sweep": getattr(args, "sweep", None),
        "version": __version__,
    }
    h = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
    out = dict(body)
    out["hash"] = h
    out["output_dir"] = str(args.out) if getattr(args, "out", None) else None
    out["started"] = started
    out["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    return out


def _write_csv(path: pathlib.Path, header, rows, mhash):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header) + ["manifest"])
    for r in rows:
        w.writerow([_fmt(v) for v in r] + [mhash])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path: pathlib.Path, obj):
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n", encoding="utf-8")


def _outdir(args) -> pathlib.Path:
    out = pathlib.Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _checked_solve(s, principle, opts, catalog=None):
    a = run_solve(s, principle, opts, None, catalog)
    if a.solution.values is None:
        raise CliError("solve", f"{principle} solve ended {a.solution.status} without a solution", code=3,
                       status=a.solution.status)
    return a


# -- report rows ------------------------------------------------------------

def link_flow_rows(a):
    lf = aggregate_link_flows(a)
    rows = [(lid, "total", x) for lid, x in lf.x.items() if x]
    rows += [(lid, m, v) for (lid, m), v in sorted(lf.xm.items()) if v]
    return rows


def share_rows(a):
    if a.scenario.Q == 0:
        return []
    return [(m, a.principle, v) for m, v in modal_share(a).items()]


def paths_used_rows(a):
    lf = aggregate_link_flows(a)
    state = FlowState(lf.x, sms_demand(a))
    rows = []
    for opt, f in a.option_flows():
        if f <= 1e-9:
            continue
        c = generalized_path_cost(opt.path, a.scenario, state, a.principle).total
        rows.append((f"{opt.od[0]}-{opt.od[1]}", opt.path.mode, opt.path.label(), f, c))
    return rows


def solution_doc(a, mhash):
    sol = a.solution
    return {
        "manifest": mhash,
        "principle": a.principle,
        "status": sol.status,
        "objective": sol.objective,
        "bound": sol.bound,
        "gap": sol.gap,
        "nodes": sol.nodes,
        "wall_time": sol.wall_time,
        "system_cost": system_cost(a).total,
        "values": {n: float(v) for n, v in zip(sol.names, sol.values)},
    }


# -- subcommands ------------------------------------------------------------

def cmd_validate(args):
    s, where = load(args)
    viol = validate_scenario(s)
    print(json.dumps({"scenario": where, "valid": not viol, "nodes": len(s.nodes), "links": len(s.links),
                      "od_pairs": len(s.demand), "Q": s.Q,
                      "violations": [{"code": v.code, "message": v.message} for v in viol]}, indent=1))
    return 0 if not viol else 1


def cmd_paths(args):
    s, _ = load(args)
    od = None
    if args.od:
        parts = args.od.split(",")
        if len(parts) != 2:
            raise CliError("usage", "--od expects i,j")
        od = tuple(parse_value(p) for p in parts)
        if od[0] == od[1]:
            raise CliError("usage", "origin and destination must differ")
    cat = build_catalog(s, with_vehicles=False)
    rows = catalog_rows(cat, od, args.mode)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["od", "mode", "path_links", "length", "transfer_node"])
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if args.out:
        out = pathlib.Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_solve(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    s, where = load(args)
    opts = solver_options(args)
    principle = args.principle.upper()
    out = _outdir(args)
    h = manifest(args, s, where, [principle], opts, started)["hash"]
    cat = build_catalog(s)
    if args.export_mps or args.dump_model:
        bm = build_program(s, cat, principle, ModelOptions())
        if args.export_mps:
            export_mps(bm.program, args.export_mps)
        if args.dump_model:
            _write_csv(pathlib.Path(args.dump_model), ["constraint", "family", "description"],
                       provenance_rows(bm.program), h)
    a = _checked_solve(s, principle, opts, cat)
    man = manifest(args, s, where, [principle], opts, started)
    _write_json(out / "solution.json", solution_doc(a, h))
    _write_csv(out / "link_flows.csv", ["link", "mode", "flow"], link_flow_rows(a), h)
    _write_csv(out / "modal_share.csv", ["mode", "principle", "share"], share_rows(a), h)
    _write_csv(out / "paths_used.csv", ["od", "mode", "path", "flow", "generalized_cost"], paths_used_rows(a), h)
    _write_json(out / "manifest.json", man)
    print(json.dumps({"status": a.solution.status, "objective": a.solution.objective,
                      "gap": a.solution.gap, "out": str(out)}))
    return 0


def _sweep(spec: str):
    if ":" not in spec:
        raise CliError("usage", "--sweep expects demand:LO..HI or demand:a,b,c")
    what, rng = spec.split(":", 1)
    if what != "demand":
        raise CliError("usage", f"cannot sweep {what!r}; only demand is supported")
    if ".." in rng:
        lo, hi = rng.split("..")
        vals = list(range(int(lo), int(hi) + 1))
    else:
        vals = [parse_value(v) for v in rng.split(",")]
    if not vals:
        raise CliError("usage", "empty sweep")
    for v in vals:
        if not isinstance(v, (int, float)) or v <= 0:
            raise CliError("usage", f"demand multiplier {v!r} rejected: PoA is undefined without demand")
    return vals


def cmd_compare(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    s, where = load(args)
    opts = solver_options(args)
    mults = _sweep(args.sweep) if args.sweep else None
    out = _outdir(args)
    cat = build_catalog(s)
    ue = _checked_solve(s, "UE", opts, cat)
    so = _checked_solve(s, "SO", opts, cat)
    man = manifest(args, s, where, ["UE", "SO"], opts, started)
    h = man["hash"]
    both_opt = ue.solution.status == so.solution.status == "Optimal"
    poa = price_of_anarchy(ue, so) if both_opt else None
    c_ue, c_so = system_cost(ue).total, system_cost(so).total
    _write_json(out / "poa.json", {"manifest": h, "poa": poa, "bound": scenario_poa_bound(s),
                                   "C_ue": c_ue, "C_so": c_so, "status_ue": ue.solution.status,
                                   "status_so": so.solution.status})
    _write_csv(out / "modal_share.csv", ["mode", "principle", "share"], share_rows(ue) + share_rows(so), h)
    if mults:
        rows = []
        for k in mults:
            sk = s.with_demand_scale(k)
            cat_k = build_catalog(sk)
            a_ue = _checked_solve(sk, "UE", opts, cat_k)
            a_so = _checked_solve(sk, "SO", opts, cat_k)
            ok = a_ue.solution.status == a_so.solution.status == "Optimal"
            rows.append((k, system_cost(a_ue).total, system_cost(a_so).total,
                         price_of_anarchy(a_ue, a_so) if ok else ""))
        _write_csv(out / "poa_sweep.csv", ["multiplier", "C_ue", "C_so", "poa"], rows, h)
    _write_json(out / "manifest.json", man)
    print(json.dumps({"poa": poa, "C_ue": c_ue, "C_so": c_so, "out": str(out)}))
    return 0


def cmd_verify(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    s, where = load(args)
    opts = solver_options(args)
    principle = args.principle.upper()
    out = _outdir(args)
    a = _checked_solve(s, principle, opts)
    rep = verify_equilibrium(a, args.tol)
    man = manifest(args, s, where, [principle], opts, started)
    h = man["hash"]
    rows = [(f"{r.od[0]}-{r.od[1]}", r.option, r.cost, r.min_cost,
             "" if r.best_gain == float("-inf") else r.best_gain, r.verdict) for r in rep.rows]
    _write_csv(out / "equilibrium.csv", ["od", "option", "cost", "min_cost", "deviation_best_gain", "verdict"],
               rows, h)
    _write_json(out / "manifest.json", man)
    print(json.dumps({"passed": rep.passed, "kkt_consistent": rep.kkt_consistent,
                      "deviations": sum(r.verdict == "deviation" for r in rep.rows),
                      "informational": len(rep.informational), "out": str(out)}))
    return 0


def cmd_oracle(args):
    s, _ = load(args)
    try:
        res = brute_force_solve(s, args.principle, cap=args.cap)
    except CapExceeded as exc:
        raise CliError("cap_exceeded", str(exc), code=2) from None
    print(json.dumps({"principle": args.principle.upper(), "objective": res.objective,
                      "optima": len(res.optima), "candidates": res.candidates}))
    return 0


# -- parser -----------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="mmassign", description="Multimodal traffic assignment (UE / SO).")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, principle=True, solver=True):
        p.add_argument("--scenario", required=True, help="scenario document or shipped fixture name")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override, e.g. params.TF.RS=0.9")
        p.add_argument("--out", help="output directory (file for 'paths')")
        if principle:
            p.add_argument("--principle", type=str.lower, choices=["ue", "so"], default="ue")
        if solver:
            p.add_argument("--gap", type=float, help="relative optimality gap")
            p.add_argument("--time-limit", type=float, dest="time_limit", help="seconds")
            p.add_argument("--nodes", type=int, help="branch-and-bound node limit")
            p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")

    p = sub.add_parser("validate", help="check a scenario document")
    common(p, principle=False, solver=False)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("paths", help="print the path catalog as CSV")
    common(p, principle=False, solver=False)
    p.add_argument("--od", help="restrict to one OD pair, i,j")
    p.add_argument("--mode", help="restrict to one mode")
    p.set_defaults(fn=cmd_paths)

    p = sub.add_parser("solve", help="solve one principle and write the reports")
    common(p)
    p.add_argument("--export-mps", dest="export_mps", help="also write the program in MPS format")
    p.add_argument("--dump-model", dest="dump_model", help="write constraint provenance as CSV")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("compare", help="solve UE and SO, report the price of anarchy")
    common(p, principle=False)
    p.add_argument("--sweep", help="demand:1..10 runs both principles per demand multiplier")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("verify", help="solve and audit the equilibrium conditions")
    common(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force optimum of a micro instance")
    common(p, solver=False)
    p.add_argument("--cap", type=int, default=10 ** 7, help="maximum candidates to enumerate")
    p.set_defaults(fn=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        err = {"error": exc.kind, "message": str(exc), **exc.extra}
        print(json.dumps(err), file=sys.stderr)
        return exc.code
    except (ValueError, KeyError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
