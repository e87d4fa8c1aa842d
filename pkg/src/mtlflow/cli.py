"""Command-line entry point: ``mtlflow <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .flow import FlowEncoding, relaxed_occupancy
from .formula import FormulaSyntaxError, HorizonError, IntervalError, in_convex_fragment, parse
from .milp import (INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, SolverOptions,
                   export_lp, relax, solve_lp)
from .oracle import BudgetExceeded, oracle_solve
from .system import PlacementError, Scenario, TransitionSystem

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INPUT = 3
EXIT_LIMIT = 4


class InputError(Exception):
    pass


def _status_code(status: str) -> int:
    if status == OPTIMAL:
        return EXIT_OK
    if status == INFEASIBLE:
        return EXIT_INFEASIBLE
    if status in (NODE_LIMIT, TIME_LIMIT):
        return EXIT_LIMIT
    return EXIT_INPUT


def _load(args) -> tuple[Scenario, TransitionSystem, object, int]:
    try:
        sc = Scenario.load(args.scenario)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read scenario {args.scenario}: {e}") from None
    text = args.spec if args.spec is not None else sc.spec
    if text is None:
        raise InputError("no --spec given and the scenario carries none")
    f = parse(text)
    T = args.horizon if args.horizon is not None else sc.horizon
    return sc, sc.system(), f, T


def _options(args) -> SolverOptions:
    return SolverOptions(engine=args.engine, max_nodes=args.max_nodes,
                         max_seconds=args.max_seconds)


def cmd_solve(args) -> int:
    sc, ts, f, T = _load(args)
    opts = _options(args)
    rec = bench.run_instance(ts, f, T, args.encoding, opts,
                             scenario_id=Path(args.scenario).stem, seed=sc.seed,
                             relaxation=args.relax)
    if args.export_lp:
        enc = bench.encode(ts, f, T, args.encoding)
        Path(args.export_lp).write_text(export_lp(enc.model, Path(args.export_lp).stem))
    if args.out == "csv":
        sys.stdout.write(bench.emit_report([rec], "csv"))
    else:
        meta = {"spec": str(f), "horizon": T, "n": sc.n}
        if args.relax and args.encoding == "flow":
            enc = bench.encode(ts, f, T, "flow")
            meta["relaxed_occupancy"] = _occupancy_table(enc, sc.n, opts)
        sys.stdout.write(bench.emit_report([rec], "json", meta) + "\n")
    return _status_code(rec.status)


def _occupancy_table(enc: FlowEncoding, n: int, opts: SolverOptions) -> list:
    """Per step, an n x n grid of relaxed occupancy values."""
    lp = solve_lp(relax(enc.model), opts)
    if lp.status != OPTIMAL:
        return []
    occ = relaxed_occupancy(enc, lp)
    return [[[round(occ[(r * n + c, t)], 9) for c in range(n)] for r in range(n)]
            for t in range(enc.T + 1)]


def cmd_gap(args) -> int:
    sc, ts, f, T = _load(args)
    rec = bench.run_instance(ts, f, T, args.encoding, _options(args),
                             scenario_id=Path(args.scenario).stem, seed=sc.seed)
    print(json.dumps({"encoding": args.encoding, "status": rec.status,
                      "j_star": rec.objective, "j_tilde_star": rec.relaxed_objective,
                      "r_gap": rec.r_gap}))
    return _status_code(rec.status)


def cmd_bench(args) -> int:
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"bad --values {args.values!r}") from None
    if not values:
        raise InputError("--values is empty")
    res = bench.run_sweep(args.mode, values, args.trials, args.seed, _options(args),
                          sequential=not args.concurrent)
    fmt = "json" if args.out.endswith(".json") else "csv"
    Path(args.out).write_text(bench.emit_report(res.records, fmt, res.metadata))
    for (value, enc), s in bench.summarize(res.records).items():
        print(f"{args.mode}={value} {enc}: median {s['median']:.3f}s "
              f"[q1 {s['q1']:.3f}, q3 {s['q3']:.3f}]")
    if any(r.status in (NODE_LIMIT, TIME_LIMIT) for r in res.records):
        return EXIT_LIMIT
    return EXIT_OK


def cmd_oracle(args) -> int:
    _, ts, f, T = _load(args)
    res = oracle_solve(ts, f, T, budget=args.budget)
    print(json.dumps({"feasible": res.feasible, "cost": res.cost if res.feasible else None,
                      "path": res.path, "paths_checked": res.paths_checked}))
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_fragment_check(args) -> int:
    f = parse(args.spec)
    inside = in_convex_fragment(f, allow_negated_atoms=args.allow_negated_atoms)
    print("inside" if inside else "outside")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which here means infeasible
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_problem_args(p: argparse.ArgumentParser, encoding: bool = True) -> None:
    p.add_argument("--scenario", required=True)
    p.add_argument("--spec", help="formula text (defaults to the scenario's own)")
    p.add_argument("--horizon", type=int, help="defaults to the scenario's horizon")
    if encoding:
        p.add_argument("--encoding", choices=bench.ENCODINGS, default="flow")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--engine", choices=("auto", "simplex", "highs"), default="auto")
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--max-seconds", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mtlflow",
                 description="Minimum-cost MTL planning on grid worlds.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--relax", action="store_true", help="also solve the LP relaxation")
    p.add_argument("--export-lp", metavar="FILE")
    p.add_argument("--out", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gap", help="relaxation gap of one encoding")
    _add_problem_args(p)
    _add_solver_args(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("bench", help="run a random-scenario sweep")
    p.add_argument("--mode", choices=("complexity", "length"), required=True)
    p.add_argument("--values", required=True, help="comma separated, e.g. 1,2,3")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--sequential", action="store_true", default=True,
                      help="run trials one at a time (default)")
    mode.add_argument("--concurrent", action="store_true",
                      help="run trials in worker processes; timings are flagged")
    p.add_argument("--out", required=True, help="report path (.csv or .json)")
    _add_solver_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="brute-force minimum-cost path")
    _add_problem_args(p, encoding=False)
    p.add_argument("--budget", type=int, default=5_000_000)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fragment-check", help="is the formula in the convex fragment")
    p.add_argument("--spec", required=True)
    p.add_argument("--allow-negated-atoms", action="store_true")
    p.set_defaults(func=cmd_fragment_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FormulaSyntaxError as e:
        print(f"error: bad formula: {e}", file=sys.stderr)
    except BudgetExceeded as e:
        print(f"error: enumeration budget exhausted: {e}", file=sys.stderr)
        return EXIT_LIMIT
    except (InputError, HorizonError, IntervalError, PlacementError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
