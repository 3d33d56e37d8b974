"""Command-line front door: transpile annotated C, simulate scenarios,
evaluate the analytic cost model."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import List, Optional, Sequence

from .costsim import (
    LoopLevel,
    SimProgram,
    analytic_inner,
    analytic_outer,
    simulate,
    sweep_crossing,
    threshold_outer_work,
)
from .decider import DeciderKind
from .descriptors import validate
from .diagnostics import ParseError, has_errors
from .emit import emit_c
from .parser import parse_unit
from .scenario import load_scenario, render_csv, render_report
from .transform import GenerationMode, transform


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="preomp",
        description="Directive-driven loop parallelisation: transpiler, deciders, cost simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "transpile",
        help="rewrite '#pragma preomp parallel for' loops into decision-guarded OpenMP C",
    )
    p.add_argument("input", help="C source file")
    p.add_argument(
        "-o",
        "--output",
        help="output file (stdout when omitted); the site manifest goes to OUTPUT.manifest",
    )
    p.add_argument(
        "--mode",
        choices=[m.value for m in GenerationMode],
        default=GenerationMode.DUPLICATE.value,
        help="duplicate: if/else over serial and parallel copies; ompif: one loop with an if clause",
    )
    p.set_defaults(func=run_transpile)

    p = sub.add_parser("simulate", help="run a scenario file under the virtual-time simulator")
    p.add_argument("scenario", help="scenario TOML file")
    p.add_argument(
        "--threads",
        default=os.environ.get("PREOMP_THREADS", "1"),
        help="thread count; a comma list sweeps (needs --format csv). Default: $PREOMP_THREADS or 1",
    )
    p.add_argument(
        "--decider",
        default=DeciderKind.HEURISTIC.value,
        help="decision policy (%s); a comma list sweeps (needs --format csv)"
        % ", ".join(k.value for k in DeciderKind),
    )
    p.add_argument("--mode", choices=[m.value for m in GenerationMode], default=GenerationMode.DUPLICATE.value)
    p.add_argument("--threshold", type=float, default=1.0, help="iterations-per-thread threshold (default 1.0)")
    p.add_argument(
        "--force-level",
        type=int,
        default=None,
        metavar="INDEX",
        help="skip the deciders: always parallelise this level, keep the rest serial",
    )
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a scenario key (dotted path, e.g. levels.1.count=32); repeatable",
    )
    p.add_argument("--trace", action="store_true", help="include the decision trace in the report")
    p.add_argument("--format", choices=["report", "csv"], default="report")
    p.add_argument("-o", "--output", help="output file (stdout when omitted)")
    p.set_defaults(func=run_simulate)

    p = sub.add_parser("model", help="evaluate the closed-form cost model")
    p.add_argument("--outer-iters", type=int, required=True)
    p.add_argument("--inner-iters", type=int, required=True)
    p.add_argument("--t-outer", type=float, default=0.0, help="work between the loops (default 0)")
    p.add_argument("--t-inner", type=float, required=True, help="work per innermost iteration")
    p.add_argument("--outer-threads", type=int, required=True)
    p.add_argument("--inner-threads", type=int, required=True)
    p.add_argument(
        "--sweep",
        metavar="START:STOP:STEP",
        help="also sweep t_outer over a grid and report the strategy crossing point",
    )
    p.set_defaults(func=run_model)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run_transpile(args: argparse.Namespace) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        source = fh.read()
    try:
        tree = parse_unit(source)
    except ParseError as exc:
        print(f"{args.input}:{exc}", file=sys.stderr)
        return 1
    diagnostics = validate(tree)
    for diag in diagnostics:
        print(diag.format(args.input), file=sys.stderr)
    if has_errors(diagnostics):
        return 1
    unit = emit_c(transform(tree, GenerationMode(args.mode)))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(unit.text)
        manifest = [dataclasses.asdict(entry) for entry in unit.manifest]
        with open(args.output + ".manifest", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    else:
        sys.stdout.write(unit.text)
    return 0


def run_simulate(args: argparse.Namespace) -> int:
    program = load_scenario(args.scenario, args.set)
    threads_list = _parse_int_list(args.threads, "--threads")
    deciders = [DeciderKind(name.strip()) for name in args.decider.split(",")]
    mode = GenerationMode(args.mode)
    reports = [
        simulate(
            program,
            threads=threads,
            decider=kind,
            mode=mode,
            threshold=args.threshold,
            force_level=args.force_level,
        )
        for threads in threads_list
        for kind in deciders
    ]
    if args.format == "csv":
        text = render_csv(reports)
    else:
        if len(reports) != 1:
            print(
                "error: the report format shows a single run; use --format csv for sweeps",
                file=sys.stderr,
            )
            return 1
        text = render_report(reports[0], include_trace=args.trace)
    _write_output(text, args.output)
    return 0


def run_model(args: argparse.Namespace) -> int:
    outer_time = analytic_outer(
        args.outer_iters, args.inner_iters, args.t_outer, args.t_inner, args.outer_threads
    )
    inner_time = analytic_inner(
        args.outer_iters, args.inner_iters, args.t_outer, args.t_inner, args.inner_threads
    )
    break_even = threshold_outer_work(
        args.inner_iters, args.t_inner, args.outer_threads, args.inner_threads
    )
    lines = [
        f"outer_parallel_time = {outer_time!r}",
        f"inner_parallel_time = {inner_time!r}",
        f"threshold_outer_work = {break_even!r}",
    ]
    if args.sweep:
        grid = _parse_grid(args.sweep)
        template = SimProgram(
            levels=(
                LoopLevel("outer", count=args.outer_iters, parallelisable=True),
                LoopLevel("inner", count=args.inner_iters, body_work=args.t_inner, parallelisable=True),
            )
        )
        lines.append("")
        lines.append("t_outer,outer_parallel_time,inner_parallel_time")
        for t_outer in grid:
            program = dataclasses.replace(
                template,
                levels=(dataclasses.replace(template.levels[0], pre_work=t_outer), template.levels[1]),
            )
            o = simulate(program, args.outer_threads, force_level=0).total_time
            i = simulate(program, args.inner_threads, force_level=1).total_time
            lines.append(f"{t_outer!r},{o!r},{i!r}")
        crossing = sweep_crossing(template, args.outer_threads, args.inner_threads, grid)
        lines.append("")
        lines.append(f"crossing = {crossing!r}")
    print("\n".join(lines))
    return 0


def _parse_int_list(text: str, flag: str) -> List[int]:
    try:
        values = [int(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"{flag} expects an integer or a comma-separated list, got {text!r}")
    if not values:
        raise ValueError(f"{flag} expects at least one value")
    return values


def _parse_grid(spec: str) -> List[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"--sweep expects START:STOP:STEP, got {spec!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"--sweep expects an ascending grid, got {spec!r}")
    points = round((stop - start) / step)
    return [start + k * step for k in range(points + 1)]


def _write_output(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    raise SystemExit(main())
