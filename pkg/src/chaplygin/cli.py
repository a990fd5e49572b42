"""Command line entry point.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import verify
from .integrate import ConstraintBlowup
from .monitors import format_report
from .scenario import RANDOM_INERTIA, Scenario, run_scenario, write_csv
from .systems import ScenarioError

WORKERS_ENV = "CHAPLYGIN_WORKERS"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _workers(arg):
    if arg is not None:
        return max(1, arg)
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ScenarioError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _map(fn, items, workers):
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _run_one(job):
    """Run one scenario and write its outputs; returns a summary row (never raises on check failure)."""
    sc_dict, out_dir = job
    sc = Scenario.from_dict(sc_dict)
    out = Path(out_dir)
    try:
        traj, report = run_scenario(sc)
    except ConstraintBlowup as exc:
        return {"name": sc.name, "passed": False, "error": str(exc), "failure_time": exc.t, "checks": []}
    write_csv(traj, out / f"{sc.name}.csv")
    (out / f"{sc.name}.report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def _emit_summary(rows, out_dir, title):
    rows = sorted(rows, key=lambda r: r["name"])
    passed = all(r["passed"] for r in rows)
    summary = {"command": title, "passed": passed, "results": rows}
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return passed


def cmd_run(args):
    scenarios = [Scenario.load(p) for p in args.scenario]
    for sc in scenarios:
        sc.build()  # validate everything before running anything
    names = [sc.name for sc in scenarios]
    if len(set(names)) != len(names):
        raise ScenarioError("scenario names must be unique within one run")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = _map(_run_one, [(sc.to_dict(), str(out)) for sc in scenarios], _workers(args.workers))
    for r in sorted(rows, key=lambda r: r["name"]):
        print(f"== {r['name']}: {'PASS' if r['passed'] else 'FAIL'}")
        if "error" in r:
            print(f"   {r['error']}")
        else:
            print(format_report(r))
    return _emit_summary(rows, out, "run")


def _print_result(res, keys):
    verdict = "PASS" if res["passed"] else "FAIL"
    body = " ".join(f"{k}={res[k]:.3e}" if isinstance(res[k], float) else f"{k}={res[k]}" for k in keys)
    print(f"{verdict}  {body}")


def cmd_verify_measure(args):
    rows = []
    for eps in args.eps:
        if args.negative_control:
            res = verify.negative_control(args.n, eps, args.samples, args.seed)
            _print_result(res, ["system", "n", "eps", "median_div_wrong", "max_div_right", "threshold"])
        else:
            res = verify.measure_check(args.system, args.n, eps, args.samples, args.seed, fd_step=args.fd_step)
            _print_result(res, ["system", "n", "eps", "max_div", "threshold"])
        res["name"] = f"{res['system']}-n{args.n}-eps{eps:g}"
        rows.append(res)
    return _emit_summary(rows, args.out, "verify-measure")


def cmd_verify_hamiltonization(args):
    rows = []
    for eps in args.eps:
        res = verify.hamiltonization_check(args.n, eps, args.samples, args.seed)
        _print_result(res, ["n", "eps", "max_residual", "threshold"])
        res["name"] = f"hamiltonization-n{args.n}-eps{eps:g}"
        rows.append(res)
    return _emit_summary(rows, args.out, "verify-hamiltonization")


def cmd_verify_equivalence(args):
    rows = []
    for eps in args.eps:
        res = verify.reparametrization_check(args.n, eps, args.seed, t_end=args.t_end, h=args.h)
        _print_result(res, ["n", "eps", "max_gamma_error", "threshold"])
        res["name"] = f"reparametrization-n{args.n}-eps{eps:g}"
        rows.append(res)
    return _emit_summary(rows, args.out, "verify-equivalence")


def cmd_sweep(args):
    base_sc = Scenario.load(args.scenario)
    D = base_sc.build()[0].geom.D
    base = base_sc.to_dict()
    jobs = []
    for eps in args.eps:
        for kind in args.inertia:
            d = json.loads(json.dumps(base))
            d["geometry"] = {"eps": eps, "D": D}
            d["inertia"] = {"kind": kind}
            d["name"] = f"{base['name']}-eps{eps:g}-{kind}"
            if d.get("checks"):
                # eps-specific integrals are re-derived per grid point
                d["checks"] = [c for c in d["checks"] if c not in ("F4", "F4_tilde")]
            Scenario.from_dict(d).build()
            jobs.append(d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = _map(_run_one, [(d, str(out)) for d in jobs], _workers(args.workers))
    for r in sorted(rows, key=lambda r: r["name"]):
        failed = [c["name"] for c in r["checks"] if c["status"] == "fail"]
        extra = f"  failed: {', '.join(failed)}" if failed else ""
        extra += f"  {r['error']}" if "error" in r else ""
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}{extra}")
    return _emit_summary(rows, out, "sweep")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaplygin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate scenario files and check monitors")
    r.add_argument("--scenario", nargs="+", required=True, help="scenario JSON file(s)")
    r.add_argument("--out", default="out", help="output directory for CSV and reports")
    r.add_argument("--workers", type=int, default=None, help=f"parallel scenarios (default ${WORKERS_ENV} or 1)")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("verify-measure", help="divergence test of an invariant measure at random points")
    m.add_argument("--system", choices=verify.MEASURE_SYSTEMS, default="nonrubber-reduced")
    m.add_argument("--n", type=int, default=3)
    m.add_argument("--eps", type=float, nargs="+", default=[-1.0, 0.3, 1.0, 2.0])
    m.add_argument("--samples", type=int, default=50)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--fd-step", type=float, default=1e-5)
    m.add_argument("--negative-control", action="store_true", help="use a density with a wrong exponent")
    m.add_argument("--out", default=None, help="optional directory for summary.json")
    m.set_defaults(func=cmd_verify_measure)

    h = sub.add_parser("verify-hamiltonization", help="pointwise check of the time-rescaled Hamiltonian field")
    h.add_argument("--n", type=int, default=3)
    h.add_argument("--eps", type=float, nargs="+", default=[-1.0, 0.3, 0.5, 1.0, 2.0])
    h.add_argument("--samples", type=int, default=200)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", default=None)
    h.set_defaults(func=cmd_verify_hamiltonization)

    e = sub.add_parser("verify-equivalence", help="compare reduced and reparametrized Hamiltonian trajectories")
    e.add_argument("--n", type=int, default=3)
    e.add_argument("--eps", type=float, nargs="+", default=[-1.0, 0.3, 1.0, 2.0])
    e.add_argument("--t-end", type=float, default=1.0)
    e.add_argument("--h", type=float, default=1e-3)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_verify_equivalence)

    s = sub.add_parser("sweep", help="run a base scenario over a grid of eps and inertia families")
    s.add_argument("--scenario", required=True)
    s.add_argument("--eps", type=float, nargs="+", required=True)
    s.add_argument("--inertia", nargs="+", choices=sorted(RANDOM_INERTIA), default=["random-generic"])
    s.add_argument("--out", default="out")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "samples", 1) < 1:
            raise ScenarioError("--samples must be >= 1")
        ok = args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
