"""Command-line front end: simulate, check, replay, serve.

Exit codes: simulate returns 0 on stable rendezvous, 2 when the event
bound ran out, 1 on errors; check returns 0 when every explored run
rendezvouses, 3 when a counterexample loop was found (the witness file is
written next to it), 2 when the search budget left the question open.
Diagnostics verbosity comes from the LUMI_LOG environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from fractions import Fraction

from .algorithms import Algorithm
from .checker import check_phase_milestones, explore_all
from .engine import (
    Scenario,
    ScenarioError,
    SeededRandom,
    Verdict,
    VerdictKind,
    run,
)
from .files import (
    FileFormatError,
    load_trace,
    read_scenario,
    write_trace,
    write_witness,
)
from .geometry import point, rational, rational_str
from .model import Color, Movement, MovementKind, RIGID
from .scheduler import IllegalEventError, Scheduler

log = logging.getLogger("lumi")

_SCHEDULER_FLAGS = {
    "async": Scheduler.ASYNC,
    "ssync": Scheduler.SSYNC,
    "fsync": Scheduler.FSYNC,
    "lc-atomic": Scheduler.LC_ATOMIC_ASYNC,
    "move-atomic": Scheduler.MOVE_ATOMIC_ASYNC,
}
_MOVEMENT_FLAGS = {
    "rigid": MovementKind.RIGID,
    "non-rigid": MovementKind.NON_RIGID,
    "non-rigid-known-delta": MovementKind.NON_RIGID_KNOWN_DELTA,
}
_ALGORITHM_FLAGS = {
    "rendezvous": Algorithm.RENDEZVOUS,
    "rendezvous-with-delta": Algorithm.RENDEZVOUS_WITH_DELTA,
}


def _setup_logging() -> None:
    level = os.environ.get("LUMI_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_positions(text: str):
    pairs = text.split(";")
    if len(pairs) != 2:
        raise ScenarioError("positions: expected two points separated by ';'")
    out = []
    for raw in pairs:
        coords = raw.split(",")
        if len(coords) == 1:
            out.append(point(rational(coords[0].strip())))
        elif len(coords) == 2:
            out.append(point(rational(coords[0].strip()), rational(coords[1].strip())))
        else:
            raise ScenarioError(f"positions: bad point {raw!r}")
    return (out[0], out[1])


def _parse_lights(text: str):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or any(p not in ("A", "B") for p in parts):
        raise ScenarioError("lights: expected two of 'A'/'B', e.g. A,A")
    return (Color(parts[0]), Color(parts[1]))


def _parse_fractions(text: str) -> tuple[Fraction, ...]:
    return tuple(rational(p.strip()) for p in text.split(","))


def _scenario_from_args(args) -> Scenario:
    if args.scenario:
        scenario = read_scenario(args.scenario)
    else:
        required = [args.algorithm, args.scheduler, args.movement, args.lights, args.positions]
        if any(v is None for v in required):
            raise ScenarioError(
                "either a scenario file or all of --algorithm/--scheduler/--movement/--lights/--positions"
            )
        scenario = Scenario(
            algorithm=_ALGORITHM_FLAGS[args.algorithm],
            scheduler=_SCHEDULER_FLAGS[args.scheduler],
            movement=_movement_from_args(args.movement, args.delta),
            lights=_parse_lights(args.lights),
            positions=_parse_positions(args.positions),
        )
    # flag overrides on top of the file
    if args.scenario:
        if args.algorithm:
            scenario = replace(scenario, algorithm=_ALGORITHM_FLAGS[args.algorithm])
        if args.scheduler:
            scenario = replace(scenario, scheduler=_SCHEDULER_FLAGS[args.scheduler])
        if args.movement:
            scenario = replace(scenario, movement=_movement_from_args(args.movement, args.delta))
        if args.lights:
            scenario = replace(scenario, lights=_parse_lights(args.lights))
        if args.positions:
            scenario = replace(scenario, positions=_parse_positions(args.positions))
    if args.max_events:
        scenario = replace(scenario, max_events=args.max_events)
    if getattr(args, "seed", None) is not None:
        fractions = _parse_fractions(args.fractions) if args.fractions else None
        strategy = SeededRandom(args.seed, fractions) if fractions else SeededRandom(args.seed)
        scenario = replace(scenario, strategy=strategy)
    return scenario


def _movement_from_args(kind_flag: str, delta: str | None) -> Movement:
    kind = _MOVEMENT_FLAGS[kind_flag]
    if kind is MovementKind.RIGID:
        return RIGID
    if delta is None:
        raise ScenarioError("movement.delta: --delta is required for non-rigid movement")
    value = rational(delta)
    if value <= 0:
        raise ScenarioError("movement.delta: delta must be positive")
    return Movement(kind, value)


def _verdict_line(verdict: Verdict) -> str:
    if verdict.kind is VerdictKind.RENDEZVOUS:
        return f"RENDEZVOUS @event {verdict.event_index}"
    if verdict.kind is VerdictKind.BOUND_EXHAUSTED:
        return f"BOUND d2={rational_str(verdict.final_distance_squared)}"
    return "DIVERGED"


def _cmd_simulate(args) -> int:
    scenario = _scenario_from_args(args)
    trace = run(scenario)
    if args.trace_out:
        write_trace(args.trace_out, trace)
        log.info("trace written to %s", args.trace_out)
    print(_verdict_line(trace.verdict))
    return 0 if trace.verdict.kind is VerdictKind.RENDEZVOUS else 2


def _cmd_check(args) -> int:
    scenario = _scenario_from_args(args)
    fractions = _parse_fractions(args.fractions) if args.fractions else None
    if args.matrix:
        return _matrix(scenario, fractions, args.depth)
    result = explore_all(scenario, fraction_set=fractions, max_depth=args.depth)
    stats = result.stats
    print(
        f"{result.outcome.value}: {stats.nodes} states, {stats.edges} transitions, "
        f"{stats.terminal_nodes} rendezvous-stable, {stats.open_nodes} open"
    )
    if result.milestone_failures:
        for failure in result.milestone_failures:
            print(f"milestone failure: {failure}")
    if result.lasso is not None:
        lasso = result.lasso
        print(
            f"loop witness: prefix {len(lasso.prefix)} events, loop {len(lasso.loop)} events, "
            f"contraction {rational_str(lasso.contraction)} per iteration"
        )
        if args.trace_out:
            write_witness(args.trace_out, scenario, lasso)
            print(f"witness written to {args.trace_out}")
        return 3
    if result.outcome.value == "all_rendezvous":
        return 0
    return 2


def _matrix(base: Scenario, fractions, depth: int) -> int:
    schedulers = [Scheduler.FSYNC, Scheduler.SSYNC, Scheduler.LC_ATOMIC_ASYNC,
                  Scheduler.MOVE_ATOMIC_ASYNC, Scheduler.ASYNC]
    movements = [RIGID, Movement(MovementKind.NON_RIGID, Fraction(1)),
                 Movement(MovementKind.NON_RIGID_KNOWN_DELTA, Fraction(1))]
    light_pairs = [(Color.A, Color.A), (Color.A, Color.B), (Color.B, Color.A), (Color.B, Color.B)]
    symbol = {"all_rendezvous": "ok", "counterexample": "LOOP", "unknown": "?"}
    header = "scheduler/movement   " + "  ".join(f"{a.value}{b.value}" for a, b in light_pairs)
    print(header)
    worst = 0
    for scheduler in schedulers:
        for movement in movements:
            if (base.algorithm is Algorithm.RENDEZVOUS_WITH_DELTA
                    and movement.kind is not MovementKind.NON_RIGID_KNOWN_DELTA):
                continue
            cells = []
            for lights in light_pairs:
                scenario = replace(base, scheduler=scheduler, movement=movement, lights=lights)
                try:
                    result = explore_all(scenario, fraction_set=fractions, max_depth=depth)
                    cells.append(symbol[result.outcome.value])
                    if result.outcome.value == "counterexample":
                        worst = max(worst, 3)
                    elif result.outcome.value == "unknown":
                        worst = max(worst, 2)
                except ScenarioError:
                    cells.append("-")
            label = f"{scheduler.value}/{movement.kind.value}"
            print(f"{label:<24} " + "  ".join(f"{c:<4}" for c in cells))
    return worst


def _cmd_replay(args) -> int:
    trace = load_trace(args.trace, verify=not args.no_verify)
    print(f"replayed {len(trace.steps)} events; {_verdict_line(trace.verdict)}")
    if trace.scenario.algorithm is Algorithm.RENDEZVOUS_WITH_DELTA and args.milestones:
        report = check_phase_milestones(trace)
        status = "ok" if report.ok else "FAILED"
        print(f"milestones [{report.regime}] {status}"
              + (f" sync@{report.sync_index}" if report.sync_index is not None else "")
              + (f" band@{report.band_index}" if report.band_index is not None else ""))
        for note in report.notes:
            print(f"  note: {note}")
        for failure in report.failures:
            print(f"  failure: {failure}")
        if not report.ok:
            return 2
    return 0 if trace.verdict.kind is VerdictKind.RENDEZVOUS else 2


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lumi",
        description="Two-robot rendezvous with light signals: simulate, check, replay, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", nargs="?", help="scenario JSON file")
        p.add_argument("--algorithm", choices=sorted(_ALGORITHM_FLAGS))
        p.add_argument("--scheduler", choices=sorted(_SCHEDULER_FLAGS))
        p.add_argument("--movement", choices=sorted(_MOVEMENT_FLAGS))
        p.add_argument("--delta", help="minimum step length, e.g. 1 or 1/2")
        p.add_argument("--lights", help="initial lights, e.g. A,A")
        p.add_argument("--positions", help="initial positions, e.g. '0;10' or '0,0;10,0'")
        p.add_argument("--max-events", type=int)
        p.add_argument("--fractions", help="stop/observation fractions, e.g. 1/2,1")

    sim = sub.add_parser("simulate", help="drive one run and print the verdict")
    add_scenario_flags(sim)
    sim.add_argument("--seed", type=int, help="seeded-random adversary")
    sim.add_argument("--trace-out", help="write the trace here")
    sim.set_defaults(fn=_cmd_simulate)

    chk = sub.add_parser("check", help="explore every adversary choice")
    add_scenario_flags(chk)
    chk.add_argument("--depth", type=int, default=48)
    chk.add_argument("--matrix", action="store_true",
                     help="sweep scheduler x movement x lights and print a table")
    chk.add_argument("--trace-out", help="write the loop witness here")
    chk.set_defaults(fn=_cmd_check)

    rep = sub.add_parser("replay", help="replay a trace file and re-check it")
    rep.add_argument("trace")
    rep.add_argument("--no-verify", action="store_true",
                     help="skip cross-checking recorded states against the replay")
    rep.add_argument("--milestones", action="store_true",
                     help="report phase milestones for known-delta traces")
    rep.set_defaults(fn=_cmd_replay)

    srv = sub.add_parser("serve", help="run the interactive session server")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8750)
    srv.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, FileFormatError, IllegalEventError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
