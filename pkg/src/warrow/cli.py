"""Command-line driver.

Subcommands::

    warrow solve FILE.eq --solver srr --box warrow [--budget N] [--trace]
    warrow analyze FILE.c --solver slr3 [--query UNKNOWN]
    warrow compare FILE --solvers slr3,slr2,twophase
    warrow wto FILE.eq

Exit codes: 0 solved, 1 usage or input error, 2 budget exhausted.
Reports are tab-separated ``unknown<TAB>value`` lines in a deterministic
order with values in canonical form (``[lo,hi]``, ``bot``, ``inf``).
"""

from __future__ import annotations

import argparse
import re
import sys

from . import frontend, solvers, wto as wto_mod
from .eqfile import EqParseError, load_equations
from .equations import Contrib, PurityViolation
from .frontend import ParseError
from .lattice import format_value
from .solvers import LOCAL_SOLVERS, SOLVERS, SolverConfig, Status


class _CliError(Exception):
    pass


def _config(args) -> SolverConfig:
    cfg = SolverConfig()
    if getattr(args, "box", None):
        cfg.box = args.box
    if getattr(args, "budget", None):
        cfg.budget = args.budget
    if getattr(args, "policy", None):
        cfg.worklist_policy = args.policy
    if getattr(args, "box_points", None):
        cfg.box_points = frozenset(args.box_points.split(","))
    if getattr(args, "switch_bound", None):
        cfg.switch_bound = args.switch_bound
    return cfg


def _run_solver(name: str, system, config, query=None):
    if name in SOLVERS:
        return SOLVERS[name](system, None, config)
    if name == "rec":
        return wto_mod.solve_rec(system, None, None, config)
    if name in LOCAL_SOLVERS:
        if query is None:
            if not system.unknowns:
                raise _CliError("a query unknown is required for local solvers")
            query = system.unknowns[-1]
        return LOCAL_SOLVERS[name](system, None, query, config)
    raise _CliError(f"unknown solver {name!r}")


def _print_report(out, solver_name: str, outcome, trace: bool) -> None:
    print(f"solver\t{solver_name}", file=out)
    print(f"status\t{outcome.status.value}", file=out)
    print(f"rhs_evals\t{outcome.rhs_evals}", file=out)
    print(f"updates\t{outcome.updates}", file=out)
    for u in sorted(outcome.assignment.dom, key=str):
        print(f"{u}\t{format_value(outcome.assignment.get(u))}", file=out)
    if trace:
        for x, old, new in outcome.trace:
            print(f"trace\t{x}\t{format_value(old)}\t{format_value(new)}", file=out)


def cmd_solve(args, out) -> int:
    system, _ = load_equations(args.file)
    config = _config(args)
    outcome = _run_solver(args.solver, system, config, args.query)
    _print_report(out, args.solver, outcome, args.trace)
    return 0 if outcome.status is Status.SOLVED else 2


def _analysis_system(path: str, init_first: bool = True):
    with open(path, "r", encoding="utf-8") as fh:
        program = frontend.parse(fh.read())
    if program.globals:
        system = frontend.equations_with_globals(program, init_first=init_first)
        query = frontend.ROOT_UNKNOWN
    else:
        cfg = frontend.build_cfg(program)
        system = frontend.equations_from_cfg(cfg)
        query = cfg.exit
    return system, query


def cmd_analyze(args, out) -> int:
    system, query = _analysis_system(args.file)
    if args.query:
        query = args.query
    config = _config(args)
    outcome = _run_solver(args.solver, system, config, query)
    _print_report(out, args.solver, outcome, args.trace)
    return 0 if outcome.status is Status.SOLVED else 2


def _program_points(system, assignment) -> list:
    universe = system.unknowns if system.unknowns is not None else list(assignment.dom)
    names = [u for u in universe
             if isinstance(u, str) and not u.startswith("$")]
    nodes = [u for u in names if re.match(r"n\d", u)]
    return nodes or names


def compare_assignments(system, left, right) -> dict[str, int]:
    """Pointwise classification of two results over the program points."""
    ops = system.ops
    counts = {"better": 0, "equal": 0, "worse": 0, "incomparable": 0}
    for u in _program_points(system, left):
        a = left.get(u)
        b = right.get(u)
        below = ops.leq(a, b)
        above = ops.leq(b, a)
        if below and above:
            counts["equal"] += 1
        elif below:
            counts["better"] += 1
        elif above:
            counts["worse"] += 1
        else:
            counts["incomparable"] += 1
    return counts


def cmd_compare(args, out) -> int:
    names = args.solvers.split(",")
    if args.file.endswith(".eq"):
        system, _ = load_equations(args.file)
        query = system.unknowns[-1] if system.unknowns else None
    else:
        system, query = _analysis_system(args.file)
    config = _config(args)
    outcomes = {}
    for name in names:
        outcomes[name] = _run_solver(name, system, config, query)
    exhausted = False
    for name in names:
        oc = outcomes[name]
        print(f"evals\t{name}\t{oc.rhs_evals}", file=out)
        if oc.status is not Status.SOLVED:
            print(f"status\t{name}\t{oc.status.value}", file=out)
            exhausted = True
    for a, b in zip(names, names[1:]):
        counts = compare_assignments(system, outcomes[a].assignment,
                                     outcomes[b].assignment)
        total = sum(counts.values()) or 1
        print(f"pair\t{a}\t{b}", file=out)
        for key in ("better", "equal", "worse", "incomparable"):
            pct = 100.0 * counts[key] / total
            print(f"{key}\t{pct:.2f}\t{counts[key]}", file=out)
    return 2 if exhausted else 0


def cmd_wto(args, out) -> int:
    system, _ = load_equations(args.file)
    if system.static_deps is None:
        raise _CliError("the equation system carries no dependency information")
    ordering = wto_mod.build_wto(system.static_deps, system.unknowns)
    print(str(ordering), file=out)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="warrow", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, local_ok=True):
        sp.add_argument("--solver", default="sw")
        sp.add_argument("--box", default=None,
                        choices=["join", "widen", "narrow", "warrow"])
        sp.add_argument("--budget", type=int, default=None)
        sp.add_argument("--policy", default=None, choices=["lifo", "fifo"])
        sp.add_argument("--box-points", dest="box_points", default=None)
        sp.add_argument("--switch-bound", dest="switch_bound", type=int, default=None)
        sp.add_argument("--query", default=None)
        sp.add_argument("--trace", action="store_true")

    sp = sub.add_parser("solve", help="solve an equation file")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("analyze", help="interval-analyze a mini-language program")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(fn=cmd_analyze, solver="slr3")

    sp = sub.add_parser("compare", help="compare solvers on one input")
    sp.add_argument("file")
    sp.add_argument("--solvers", required=True)
    sp.add_argument("--box", default=None,
                    choices=["join", "widen", "narrow", "warrow"])
    sp.add_argument("--budget", type=int, default=None)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("wto", help="print a weak topological ordering")
    sp.add_argument("file")
    sp.set_defaults(fn=cmd_wto)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args, sys.stdout)
    except (_CliError, EqParseError, ParseError, PurityViolation,
            solvers.RequiresFiniteSystem, solvers.RequiresStaticDeps,
            solvers.SideEffectsUnsupported, wto_mod.RequiresValidWto,
            frontend.HasGlobals, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
