"""Scenario, trace, and witness files.

Scenarios are single JSON documents. Traces are NDJSON: a header line
carrying the scenario (and, for loop witnesses, the loop start offset),
one line per event with the resulting state, and a trailing verdict line.
Rationals travel as "num/den" strings and points as {"x": ..., "y": ...},
so round-trips are bit-exact. Unknown fields are rejected by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .algorithms import Algorithm
from .engine import (
    Exhaustive,
    Interactive,
    RoundRobin,
    Scenario,
    Scripted,
    SeededRandom,
    Strategy,
    Trace,
    Verdict,
    VerdictKind,
    run,
)
from .geometry import Point, rational, rational_str
from .model import (
    Color,
    Computed,
    Configuration,
    Idle,
    Looked,
    Movement,
    MovementKind,
    RIGID,
    ROBOT_NAMES,
    robot_index,
)
from .scheduler import EventChoice, EventKind, FairnessBudget, Scheduler

FORMAT_VERSION = 1


class FileFormatError(ValueError):
    """Malformed document; the message names the offending field."""


def _require(mapping: dict, field: str, context: str) -> Any:
    if field not in mapping:
        raise FileFormatError(f"{context}: missing field '{field}'")
    return mapping[field]


def _reject_unknown(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise FileFormatError(f"{context}: unknown field '{sorted(unknown)[0]}'")


def _fraction(value: Any, context: str) -> Fraction:
    if not isinstance(value, str):
        raise FileFormatError(f"{context}: rationals must be 'num/den' strings, got {value!r}")
    try:
        return rational(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise FileFormatError(f"{context}: bad rational {value!r} ({exc})") from None


# ------------------------------------------------------------------- points

def point_to_dict(p: Point) -> dict:
    return {"x": rational_str(p.x), "y": rational_str(p.y)}


def point_from_dict(data: Any, context: str = "point") -> Point:
    if not isinstance(data, dict):
        raise FileFormatError(f"{context}: expected an object")
    _reject_unknown(data, {"x", "y"}, context)
    return Point(
        _fraction(_require(data, "x", context), f"{context}.x"),
        _fraction(_require(data, "y", context), f"{context}.y"),
    )


# ------------------------------------------------------------------- events

def choice_to_dict(choice: EventChoice) -> dict:
    if choice.kind is EventKind.SYNC_ROUND:
        return {
            "kind": choice.kind.value,
            "robots": [ROBOT_NAMES[i] for i in choice.round_robots],
            "fractions": [None if f is None else rational_str(f) for f in choice.round_fractions],
        }
    data: dict[str, Any] = {"kind": choice.kind.value, "robot": ROBOT_NAMES[choice.robot]}
    if choice.fraction is not None:
        data["fraction"] = rational_str(choice.fraction)
    return data


def choice_from_dict(data: Any, context: str = "event") -> EventChoice:
    if not isinstance(data, dict):
        raise FileFormatError(f"{context}: expected an object")
    kind_name = _require(data, "kind", context)
    try:
        kind = EventKind(kind_name)
    except ValueError:
        raise FileFormatError(f"{context}.kind: unknown event kind {kind_name!r}") from None
    if kind is EventKind.SYNC_ROUND:
        _reject_unknown(data, {"kind", "robots", "fractions"}, context)
        robots = tuple(robot_index(n) for n in _require(data, "robots", context))
        raw = _require(data, "fractions", context)
        fractions = tuple(
            None if f is None else _fraction(f, f"{context}.fractions") for f in raw
        )
        if len(fractions) != len(robots):
            raise FileFormatError(f"{context}.fractions: one entry per activated robot required")
        return EventChoice(kind, round_robots=robots, round_fractions=fractions)
    _reject_unknown(data, {"kind", "robot", "fraction"}, context)
    robot = robot_index(_require(data, "robot", context))
    fraction = data.get("fraction")
    if kind in (EventKind.MOVE_PROGRESS, EventKind.MOVE_END):
        if fraction is None:
            raise FileFormatError(f"{context}.fraction: required for {kind.value}")
        return EventChoice(kind, robot=robot, fraction=_fraction(fraction, f"{context}.fraction"))
    if fraction is not None:
        raise FileFormatError(f"{context}.fraction: not allowed for {kind.value}")
    return EventChoice(kind, robot=robot)


# ----------------------------------------------------------------- scenario

def _movement_to_dict(movement: Movement) -> dict:
    data: dict[str, Any] = {"kind": movement.kind.value}
    if movement.delta is not None:
        data["delta"] = rational_str(movement.delta)
    return data


def _movement_from_dict(data: Any) -> Movement:
    context = "movement"
    if not isinstance(data, dict):
        raise FileFormatError(f"{context}: expected an object")
    _reject_unknown(data, {"kind", "delta"}, context)
    kind_name = _require(data, "kind", context)
    try:
        kind = MovementKind(kind_name)
    except ValueError:
        raise FileFormatError(f"{context}.kind: unknown movement {kind_name!r}") from None
    if kind is MovementKind.RIGID:
        if "delta" in data:
            raise FileFormatError(f"{context}.delta: not allowed for rigid movement")
        return RIGID
    delta = _fraction(_require(data, "delta", context), f"{context}.delta")
    if delta <= 0:
        raise FileFormatError(f"{context}.delta: delta must be positive")
    return Movement(kind, delta)


def _strategy_to_dict(strategy: Strategy) -> dict:
    if isinstance(strategy, RoundRobin):
        return {"kind": "round_robin"}
    if isinstance(strategy, SeededRandom):
        return {
            "kind": "seeded_random",
            "seed": strategy.seed,
            "fractions": [rational_str(f) for f in strategy.fractions],
        }
    if isinstance(strategy, Scripted):
        return {
            "kind": "scripted",
            "events": [choice_to_dict(c) for c in strategy.events],
            "fractions": [rational_str(f) for f in strategy.fractions],
        }
    if isinstance(strategy, Exhaustive):
        return {
            "kind": "exhaustive",
            "fractions": [rational_str(f) for f in strategy.fractions],
            "max_depth": strategy.max_depth,
        }
    return {"kind": "interactive"}


def _strategy_from_dict(data: Any) -> Strategy:
    context = "strategy"
    if not isinstance(data, dict):
        raise FileFormatError(f"{context}: expected an object")
    kind = _require(data, "kind", context)
    if kind == "round_robin":
        _reject_unknown(data, {"kind"}, context)
        return RoundRobin()
    if kind == "seeded_random":
        _reject_unknown(data, {"kind", "seed", "fractions"}, context)
        seed = _require(data, "seed", context)
        if not isinstance(seed, int):
            raise FileFormatError(f"{context}.seed: expected an integer")
        fractions = tuple(
            _fraction(f, f"{context}.fractions") for f in data.get("fractions", [])
        )
        if fractions:
            return SeededRandom(seed, fractions)
        return SeededRandom(seed)
    if kind == "scripted":
        _reject_unknown(data, {"kind", "events", "fractions"}, context)
        events = tuple(
            choice_from_dict(e, f"{context}.events[{i}]")
            for i, e in enumerate(_require(data, "events", context))
        )
        fractions = tuple(
            _fraction(f, f"{context}.fractions") for f in data.get("fractions", [])
        )
        return Scripted(events, fractions) if fractions else Scripted(events)
    if kind == "exhaustive":
        _reject_unknown(data, {"kind", "fractions", "max_depth"}, context)
        fractions = tuple(
            _fraction(f, f"{context}.fractions") for f in data.get("fractions", [])
        )
        depth = data.get("max_depth", 48)
        return Exhaustive(fractions, depth) if fractions else Exhaustive(max_depth=depth)
    if kind == "interactive":
        _reject_unknown(data, {"kind"}, context)
        return Interactive()
    raise FileFormatError(f"{context}.kind: unknown strategy {kind!r}")


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "algorithm": scenario.algorithm.value,
        "scheduler": scenario.scheduler.value,
        "movement": _movement_to_dict(scenario.movement),
        "lights": [c.value for c in scenario.lights],
        "positions": [point_to_dict(p) for p in scenario.positions],
        "strategy": _strategy_to_dict(scenario.strategy),
        "max_events": scenario.max_events,
        "fairness_window": scenario.fairness.window,
    }


def scenario_from_dict(data: Any) -> Scenario:
    context = "scenario"
    if not isinstance(data, dict):
        raise FileFormatError(f"{context}: expected an object")
    _reject_unknown(
        data,
        {"algorithm", "scheduler", "movement", "lights", "positions",
         "strategy", "max_events", "fairness_window"},
        context,
    )
    try:
        algorithm = Algorithm(_require(data, "algorithm", context))
    except ValueError:
        raise FileFormatError(f"{context}.algorithm: unknown algorithm") from None
    try:
        scheduler = Scheduler(_require(data, "scheduler", context))
    except ValueError:
        raise FileFormatError(f"{context}.scheduler: unknown scheduler") from None
    movement = _movement_from_dict(_require(data, "movement", context))
    lights_raw = _require(data, "lights", context)
    if not (isinstance(lights_raw, list) and len(lights_raw) == 2):
        raise FileFormatError(f"{context}.lights: expected two colors")
    try:
        lights = (Color(lights_raw[0]), Color(lights_raw[1]))
    except ValueError:
        raise FileFormatError(f"{context}.lights: colors are 'A' or 'B'") from None
    positions_raw = _require(data, "positions", context)
    if not (isinstance(positions_raw, list) and len(positions_raw) == 2):
        raise FileFormatError(f"{context}.positions: expected two points")
    positions = (
        point_from_dict(positions_raw[0], f"{context}.positions[0]"),
        point_from_dict(positions_raw[1], f"{context}.positions[1]"),
    )
    strategy = _strategy_from_dict(data.get("strategy", {"kind": "round_robin"}))
    max_events = data.get("max_events", 64)
    if not isinstance(max_events, int) or max_events < 1:
        raise FileFormatError(f"{context}.max_events: expected a positive integer")
    window = data.get("fairness_window", 16)
    if not isinstance(window, int) or window < 1:
        raise FileFormatError(f"{context}.fairness_window: expected a positive integer")
    return Scenario(
        algorithm=algorithm,
        scheduler=scheduler,
        movement=movement,
        lights=lights,
        positions=positions,
        strategy=strategy,
        max_events=max_events,
        fairness=FairnessBudget(window),
    )


def write_scenario(path: str | Path, scenario: Scenario) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def read_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"scenario: not valid JSON ({exc})") from None
    return scenario_from_dict(data)


# ------------------------------------------------------------------- traces

def _phase_to_dict(phase) -> dict:
    if isinstance(phase, Idle):
        return {"kind": "idle"}
    if isinstance(phase, Looked):
        snap = phase.snapshot
        return {
            "kind": "looked",
            "snapshot": {
                "me_position": point_to_dict(snap.me_position),
                "me_light": snap.me_light.value,
                "other_position": point_to_dict(snap.other_position),
                "other_light": snap.other_light.value,
                "known_delta": None if snap.known_delta is None else rational_str(snap.known_delta),
            },
        }
    if isinstance(phase, Computed):
        return {"kind": "computed", "destination": point_to_dict(phase.destination)}
    return {
        "kind": "moving",
        "origin": point_to_dict(phase.origin),
        "target": point_to_dict(phase.target),
        "observed_fraction": rational_str(phase.observed_fraction),
    }


def _config_line(index: int, choice: EventChoice, config: Configuration) -> dict:
    return {
        "type": "event",
        "index": index,
        "event": choice_to_dict(choice),
        "positions": [point_to_dict(r.position) for r in config.robots],
        "lights": [r.light.value for r in config.robots],
        "phases": [_phase_to_dict(r.phase) for r in config.robots],
        "distance_squared": rational_str(config.distance_squared()),
    }


def verdict_to_dict(verdict: Verdict) -> dict:
    return {
        "kind": verdict.kind.value,
        "event_index": verdict.event_index,
        "final_distance_squared": None
        if verdict.final_distance_squared is None
        else rational_str(verdict.final_distance_squared),
        "gathered_stable": verdict.gathered_stable,
    }


def verdict_from_dict(data: Any) -> Verdict:
    context = "verdict"
    if not isinstance(data, dict):
        raise FileFormatError(f"{context}: expected an object")
    _reject_unknown(
        data, {"kind", "event_index", "final_distance_squared", "gathered_stable"}, context
    )
    try:
        kind = VerdictKind(_require(data, "kind", context))
    except ValueError:
        raise FileFormatError(f"{context}.kind: unknown verdict") from None
    d2 = data.get("final_distance_squared")
    return Verdict(
        kind,
        data.get("event_index"),
        None if d2 is None else _fraction(d2, f"{context}.final_distance_squared"),
        bool(data.get("gathered_stable", False)),
    )


def write_trace(path: str | Path, trace: Trace, loop_start: int | None = None) -> None:
    header: dict[str, Any] = {
        "type": "header",
        "v": FORMAT_VERSION,
        "scenario": scenario_to_dict(trace.scenario),
    }
    if loop_start is not None:
        header["loop_start"] = loop_start
    lines = [json.dumps(header)]
    for i, step in enumerate(trace.steps):
        lines.append(json.dumps(_config_line(i + 1, step.choice, step.config)))
    lines.append(json.dumps({"type": "verdict", "verdict": verdict_to_dict(trace.verdict)}))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, slots=True)
class TraceFile:
    scenario: Scenario
    events: tuple[EventChoice, ...]
    verdict: Verdict | None
    loop_start: int | None
    records: tuple[dict, ...]


def read_trace(path: str | Path) -> TraceFile:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise FileFormatError("trace: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"trace: header not valid JSON ({exc})") from None
    if header.get("type") != "header":
        raise FileFormatError("trace: first line must be the header")
    if header.get("v") != FORMAT_VERSION:
        raise FileFormatError(f"trace.v: unsupported version {header.get('v')!r}")
    _reject_unknown(header, {"type", "v", "scenario", "loop_start", "contraction"}, "trace.header")
    scenario = scenario_from_dict(_require(header, "scenario", "trace.header"))
    loop_start = header.get("loop_start")
    events: list[EventChoice] = []
    records: list[dict] = []
    verdict = None
    for n, line in enumerate(lines[1:], start=2):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"trace line {n}: not valid JSON ({exc})") from None
        rtype = record.get("type")
        if rtype == "event":
            events.append(choice_from_dict(record.get("event"), f"trace line {n}"))
            records.append(record)
        elif rtype == "verdict":
            verdict = verdict_from_dict(_require(record, "verdict", f"trace line {n}"))
        else:
            raise FileFormatError(f"trace line {n}: unknown record type {rtype!r}")
    return TraceFile(scenario, tuple(events), verdict, loop_start, tuple(records))


def load_trace(path: str | Path, verify: bool = True) -> Trace:
    """Reconstruct a Trace by replaying the recorded events; with `verify`,
    every recorded state line must match the replay bit for bit. The
    recorded verdict is kept (and cross-checked against the final state)."""
    from dataclasses import replace as _replace

    from .engine import is_rendezvous_stable

    tf = read_trace(path)
    scenario = _replace(
        tf.scenario,
        strategy=Scripted(tf.events, fractions=tf.scenario.fraction_set()),
        max_events=max(len(tf.events), 1),
    )
    trace = run(scenario, stop_on_rendezvous=False)
    if len(trace.steps) != len(tf.events):
        raise FileFormatError("trace: replay ended early; file is not replay-consistent")
    if verify:
        for record, step in zip(tf.records, trace.steps):
            expect = _config_line(record["index"], step.choice, step.config)
            if expect != record:
                raise FileFormatError(
                    f"trace: recorded state at event {record['index']} does not match replay"
                )
    if tf.verdict is not None:
        if tf.verdict.kind is VerdictKind.RENDEZVOUS:
            at = tf.verdict.event_index
            configs = trace.configs()
            if (
                at is None
                or at >= len(configs)
                or not is_rendezvous_stable(configs[at], scenario.algorithm)
            ):
                raise FileFormatError("trace: recorded rendezvous verdict does not match replay")
        return Trace(trace.scenario, trace.steps, tf.verdict)
    return trace


def write_witness(path: str | Path, scenario: Scenario, lasso) -> None:
    """Persist a prefix+loop witness as a replayable scripted trace file."""
    from dataclasses import replace

    events = lasso.prefix + lasso.loop
    probe = replace(
        scenario,
        strategy=Scripted(events, fractions=scenario.fraction_set()),
        max_events=len(events),
    )
    trace = run(probe, stop_on_rendezvous=False)
    header: dict[str, Any] = {
        "type": "header",
        "v": FORMAT_VERSION,
        "scenario": scenario_to_dict(probe),
        "loop_start": len(lasso.prefix),
        "contraction": rational_str(lasso.contraction),
    }
    lines = [json.dumps(header)]
    for i, step in enumerate(trace.steps):
        lines.append(json.dumps(_config_line(i + 1, step.choice, step.config)))
    lines.append(json.dumps({"type": "verdict", "verdict": verdict_to_dict(trace.verdict)}))
    Path(path).write_text("\n".join(lines) + "\n")
