"""Command-line interface.

Exit codes: 0 success (optimal where applicable), 3 time limit hit with a
feasible drawing, 4 invalid instance or drawing, 5 parse error, 6 backend
error.  The STORYLINES_BACKEND environment variable picks the default MILP
backend.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .backends import ENV_BACKEND, BackendError, backend_names
from .core import DrawingError, InstanceError, total_crossings, validate
from .fileio import (
    ParseError,
    convert_book,
    parse_instance,
    read_solution,
    write_instance,
    write_solution,
)
from .generate import GenParams, generate_instance
from .render import RenderSpec, render_svg
from .solver import SolveOptions, solve_exact

EXIT_OK = 0
EXIT_TIMEOUT_FEASIBLE = 3
EXIT_INVALID_INPUT = 4
EXIT_PARSE_ERROR = 5
EXIT_BACKEND_ERROR = 6


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storylines",
        description="Exact and heuristic crossing minimization for storyline drawings.",
        epilog=f"Backends: {', '.join(backend_names())} (override with ${ENV_BACKEND}).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="minimize crossings exactly")
    p.add_argument("instance")
    p.add_argument("--formulation", choices=("lin", "qdr", "plo"), default="plo")
    p.add_argument("--sbc", type=_onoff, default=True, metavar="on|off")
    p.add_argument("--init", type=_onoff, default=True, metavar="on|off")
    p.add_argument("--rnd", type=_onoff, default=True, metavar="on|off")
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--node-limit", type=int, help="search-node cap, where the backend supports one")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", default="auto")
    p.add_argument("--out", help="write the solution file here")
    p.add_argument("--timings", action="store_true", help="include wall time in the solution file")
    p.add_argument("--lp-out", help="export the built model in LP format")
    p.add_argument("--drop-empty-layers", action="store_true")

    p = sub.add_parser("heuristic", help="compute a drawing without optimality")
    p.add_argument("instance")
    p.add_argument("--method", choices=("slicing", "greedy", "improve"), default="slicing")
    p.add_argument("--in", dest="solution_in", help="drawing to improve (for --method improve)")
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--stride", type=int, default=5)
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", default="auto")
    p.add_argument("--out", help="write the solution file here")
    p.add_argument("--drop-empty-layers", action="store_true")

    p = sub.add_parser("check", help="validate a solution and recount crossings")
    p.add_argument("instance")
    p.add_argument("solution")

    p = sub.add_parser("render", help="render a solution to SVG")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--style", choices=("orthogonal", "smooth"), default="orthogonal")
    p.add_argument("--no-labels", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="run a benchmark manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="runs CSV path")
    p.add_argument("--summary", help="summary CSV path (medians; speedups beside it)")

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--n", type=int, required=True, help="number of characters")
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-per-layer", type=int, default=1)
    p.add_argument("--min-size", type=int, default=2)
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--p-empty", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("convert", help="import a plain-text book chapter file")
    p.add_argument("book", help="chapter records like '1.2:AB,CD;EF'")
    p.add_argument("--out", required=True)
    p.add_argument("--drop-empty-layers", action="store_true")

    return parser


def _cmd_solve(args) -> int:
    inst = parse_instance(args.instance, drop_empty_layers=args.drop_empty_layers)
    opts = SolveOptions(
        sbc=args.sbc,
        init=args.init,
        rnd=args.rnd,
        time_limit=args.time_limit,
        node_limit=args.node_limit,
        seed=args.seed,
        backend=args.backend,
    )
    if args.lp_out:
        from .models import add_sbc, build_model

        model = build_model(inst, args.formulation)
        if args.sbc:
            model = add_sbc(inst, model)
        Path(args.lp_out).write_text(model.export_lp(), encoding="utf-8")
    drawing, report = solve_exact(inst, args.formulation, opts)
    print(
        f"{args.formulation}{'+sbc' if args.sbc else ''}: status={report.status} "
        f"crossings={report.best_crossings} bound={report.bound:g} "
        f"rounds={report.separation_rounds} lop_added={report.lop_added} "
        f"time={report.wall_time:.2f}s"
    )
    if args.out:
        write_solution(args.out, inst, drawing, report, include_timings=args.timings)
    return EXIT_OK if report.status == "optimal" else EXIT_TIMEOUT_FEASIBLE


def _cmd_heuristic(args) -> int:
    from .heuristics import SliceConfig, greedy_baseline, improve, initial_slicing

    inst = parse_instance(args.instance, drop_empty_layers=args.drop_empty_layers)
    if args.method == "greedy":
        drawing = greedy_baseline(inst)
    elif args.method == "slicing":
        drawing = initial_slicing(
            inst,
            SliceConfig(window=args.window, stride=args.stride),
            SolveOptions(
                init=False, rnd=False, time_limit=args.time_limit, seed=args.seed, backend=args.backend
            ),
        )
    else:
        if not args.solution_in:
            print("--method improve needs --in SOLUTION", file=sys.stderr)
            return EXIT_INVALID_INPUT
        drawing, _ = read_solution(args.solution_in, inst)
        drawing = improve(inst, drawing)
    crossings = total_crossings(inst, drawing).total
    print(f"heuristic={args.method}: crossings={crossings}")
    if args.out:
        write_solution(args.out, inst, drawing, {"status": f"heuristic-{args.method}"})
    return EXIT_OK


def _cmd_check(args) -> int:
    inst = parse_instance(args.instance)
    drawing, report = read_solution(args.solution)
    violations = validate(inst, drawing)
    if violations:
        for v in violations:
            print(f"violation[{v.kind}] layer {v.layer}: {v.message}")
        return EXIT_INVALID_INPUT
    count = total_crossings(inst, drawing)
    recorded = report.get("crossings")
    if recorded is not None and recorded != count.total:
        print(f"recorded crossings {recorded} != recount {count.total}")
        return EXIT_INVALID_INPUT
    print(f"ok: {count.total} crossings over {inst.n_layers} layers")
    return EXIT_OK


def _cmd_render(args) -> int:
    inst = parse_instance(args.instance)
    drawing, _ = read_solution(args.solution, inst)
    spec = RenderSpec(curve=args.style, labels=not args.no_labels)
    Path(args.out).write_text(render_svg(inst, drawing, spec), encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench import run_bench

    rows, _ = run_bench(args.manifest, args.out, args.summary)
    print(f"wrote {len(rows)} runs to {args.out}")
    return EXIT_OK


def _cmd_gen(args) -> int:
    params = GenParams(
        n_chars=args.n,
        n_layers=args.layers,
        max_interactions_per_layer=args.max_per_layer,
        min_interaction_size=args.min_size,
        max_interaction_size=args.max_size,
        p_empty_layer=args.p_empty,
    )
    inst = generate_instance(params, args.seed)
    write_instance(args.out, inst)
    print(f"wrote {args.out}: {inst.n_chars} characters, {inst.n_layers} layers, {inst.n_interactions} interactions")
    return EXIT_OK


def _cmd_convert(args) -> int:
    inst = convert_book(args.book, drop_empty_layers=args.drop_empty_layers)
    write_instance(args.out, inst)
    print(f"wrote {args.out}: {inst.n_chars} characters, {inst.n_layers} layers, {inst.n_interactions} interactions")
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "heuristic": _cmd_heuristic,
    "check": _cmd_check,
    "render": _cmd_render,
    "bench": _cmd_bench,
    "gen": _cmd_gen,
    "convert": _cmd_convert,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except (InstanceError, DrawingError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND_ERROR


if __name__ == "__main__":
    sys.exit(main())
