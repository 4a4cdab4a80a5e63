"""Command-line surface: generate instances, solve them, check plans, run benches.

Exit codes: 0 on success, 1 on invalid input, 2 when the solver could not
produce a usable answer (numerical breakdown, or no plan within budget).
The VMC_LOG environment variable (error, info, debug) controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .bench import BenchConfig, run_bench, write_report_csv, write_report_json
from .generator import GenParams, generate_with_meta
from .kernel import KsParams, run_kernel_search
from .lp import NumericalBreakdown
from . import mip
from .mip import SolveConfig, solve_mip
from .model import build_mip, check_plan, extract_plan, plan_cost
from . import serialize

log = logging.getLogger("vmcons.cli")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    """argparse's default exit code for bad flags is 2; this surface uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="vmcons", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write one instance file")
    g.add_argument("--servers", type=int, required=True)
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--beta", type=float, required=True)
    g.add_argument("--gamma", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default=None, help="path (default: stdout)")

    s = sub.add_parser("solve", help="run one algorithm on one instance")
    s.add_argument("instance", help="instance JSON path")
    s.add_argument("--algo", choices=["exact", "ksf", "ksfv", "ksfvg"],
                   default="exact")
    s.add_argument("--time-limit", type=float, default=60.0)
    s.add_argument("--gap-tol", type=float, default=0.0)
    s.add_argument("--nbar", type=int, default=None)
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--epsilon", type=float, default=1e-4)
    s.add_argument("-o", "--output", default=None, help="write the plan here")

    c = sub.add_parser("check", help="validate a plan file against an instance")
    c.add_argument("instance")
    c.add_argument("plan")

    b = sub.add_parser("bench", help="run a benchmark grid and write reports")
    b.add_argument("--servers", default="10",
                   help="comma-separated server counts (grid axis)")
    b.add_argument("--beta", default="0.2,0.4",
                   help="comma-separated beta values (grid axis)")
    b.add_argument("--alpha", type=float, default=0.5)
    b.add_argument("--gamma", type=float, default=0.5)
    b.add_argument("--instances", type=int, default=50, help="instances per cell")
    b.add_argument("--algo", default="exact,ksfvg",
                   help="comma-separated algorithms")
    b.add_argument("--time-limit", type=float, default=60.0)
    b.add_argument("--seed", type=int, default=0, help="seed base")
    b.add_argument("--nbar", type=int, default=None)
    b.add_argument("--omega", type=float, default=1.0)
    b.add_argument("--epsilon", type=float, default=1e-4)
    b.add_argument("--save-instances", default=None, metavar="DIR")
    b.add_argument("-o", "--output", default=None,
                   help="report path prefix (writes PREFIX.json and PREFIX.csv)")
    return p


def cmd_generate(args) -> int:
    params = GenParams(num_servers=args.servers, alpha=args.alpha,
                       beta=args.beta, gamma=args.gamma, seed=args.seed)
    inst, meta = generate_with_meta(params)
    doc = serialize.dumps(serialize.instance_to_dict(inst, meta))
    if args.output is None:
        sys.stdout.write(doc)
    else:
        with open(args.output, "w") as fh:
            fh.write(doc)
        log.info("wrote %s", args.output)
    return 0


def cmd_solve(args) -> int:
    inst, _ = serialize.read_instance(args.instance)
    record = {"instance": args.instance, "algo": args.algo}
    plan = None
    if args.algo == "exact":
        prob, vmap = build_mip(inst)
        res = solve_mip(prob, SolveConfig(time_limit=args.time_limit,
                                          gap_tol=args.gap_tol))
        if res.incumbent is not None:
            plan = extract_plan(vmap, res.incumbent)
        record.update(status=res.status, objective=res.objective,
                      best_bound=res.best_bound, nodes=res.nodes,
                      time=res.wall_time)
        failed = res.status == mip.NO_SOLUTION_TIME_LIMIT
    else:
        params = KsParams(t_max=args.time_limit, n_bar=args.nbar,
                          omega=args.omega, epsilon=args.epsilon,
                          variant=args.algo)
        res = run_kernel_search(inst, params)
        plan = res.plan
        record.update(status=res.status,
                      objective=res.ub_min if plan is not None else None,
                      solves=len(res.trace), fixing_stats=res.fixing_stats,
                      time=res.wall_time)
        failed = res.status == "no_solution"
    print(json.dumps(record, sort_keys=True))
    if plan is not None and args.output is not None:
        meta = {k: v for k, v in record.items() if k != "instance"}
        serialize.write_plan(args.output, plan, meta)
        log.info("wrote %s", args.output)
    return 2 if failed else 0


def cmd_check(args) -> int:
    inst, _ = serialize.read_instance(args.instance)
    plan = serialize.read_plan(args.plan)
    violations = check_plan(inst, plan)
    for v in violations:
        print(f"violation: {v.family} at {v.index} slack {v.slack:g}")
    if violations:
        return 1
    print(f"ok: plan cost {plan_cost(inst, plan):g}")
    return 0


def cmd_bench(args) -> int:
    try:
        servers = [int(tok) for tok in args.servers.split(",") if tok]
        betas = [float(tok) for tok in args.beta.split(",") if tok]
    except ValueError:
        print("bench: --servers and --beta must be comma-separated numbers",
              file=sys.stderr)
        return 1
    cells = tuple((k, b) for k in servers for b in betas)
    config = BenchConfig(cells=cells, instances_per_cell=args.instances,
                         alpha=args.alpha, gamma=args.gamma,
                         algorithms=tuple(tok for tok in args.algo.split(",") if tok),
                         t_max=args.time_limit, seed_base=args.seed,
                         epsilon=args.epsilon, n_bar=args.nbar, omega=args.omega)
    report = run_bench(config, out_dir=args.save_instances)
    for row in report.aggregates:
        print(f"K={row['num_servers']} beta={row['beta']:g} {row['algo']:6s} "
              f"GP={row['GP']:.4f} WGP={row['WGP']:.4f} TT={row['TT']:.3f}s "
              f"n={row['n_instances']}")
    if args.output is not None:
        write_report_json(args.output + ".json", report)
        write_report_csv(args.output + ".csv", report)
        log.info("wrote %s.json and %s.csv", args.output, args.output)
    return 0


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("VMC_LOG", "error").lower())
    if level is None:
        print("vmcons: VMC_LOG must be one of error, info, debug", file=sys.stderr)
        return 1
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    args = _build_parser().parse_args(argv)
    handlers = {"generate": cmd_generate, "solve": cmd_solve,
                "check": cmd_check, "bench": cmd_bench}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"vmcons: {exc}", file=sys.stderr)
        return 1
    except NumericalBreakdown as exc:
        print(f"vmcons: solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
