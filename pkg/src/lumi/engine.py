"""Run driver: applies an adversary strategy to a scenario, records the
trace, and decides the verdict.

A run only counts as a rendezvous when the meeting is stable: both robots
are settled at the same point with no nontrivial pending work, and every
light pair the rules could still produce there keeps both robots in place.
Transient co-location while a stale destination is pending does not count.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterator, Sequence

from .algorithms import Algorithm, compute
from .geometry import (
    Point,
    distance_squared,
    exact_sqrt,
    on_segment,
)
from .model import (
    Color,
    Computed,
    Configuration,
    IDLE,
    Looked,
    Movement,
    MovementKind,
    Moving,
    RobotState,
    Snapshot,
)
from .scheduler import (
    DEFAULT_FRACTIONS,
    EventChoice,
    EventKind,
    FairnessBudget,
    FairnessState,
    IllegalEventError,
    Scheduler,
    advance_fairness,
    apply_event,
    completed_robots,
    enabled_events,
    is_cycle_start,
    min_fairness_window,
)


class ScenarioError(ValueError):
    """A scenario fails validation; the message names the offending field."""


# ---------------------------------------------------------------- strategies

@dataclass(frozen=True, slots=True)
class RoundRobin:
    """Alternate the robots, each driving its cycle to completion with full
    moves and no observation stalls."""


@dataclass(frozen=True, slots=True)
class SeededRandom:
    seed: int
    fractions: tuple[Fraction, ...] = DEFAULT_FRACTIONS


@dataclass(frozen=True, slots=True)
class Scripted:
    events: tuple[EventChoice, ...]
    fractions: tuple[Fraction, ...] = DEFAULT_FRACTIONS


@dataclass(frozen=True, slots=True)
class Exhaustive:
    """All-choices template; only meaningful to the checker, not to run()."""

    fractions: tuple[Fraction, ...] = DEFAULT_FRACTIONS
    max_depth: int = 48


@dataclass(frozen=True, slots=True)
class Interactive:
    """Placeholder for sessions driven over the service protocol."""

    fractions: tuple[Fraction, ...] = DEFAULT_FRACTIONS


Strategy = RoundRobin | SeededRandom | Scripted | Exhaustive | Interactive


# ------------------------------------------------------------------ scenario

@dataclass(frozen=True, slots=True)
class Scenario:
    algorithm: Algorithm
    scheduler: Scheduler
    movement: Movement
    lights: tuple[Color, Color]
    positions: tuple[Point, Point]
    strategy: Strategy = RoundRobin()
    max_events: int = 64
    fairness: FairnessBudget = FairnessBudget()

    def validate(self) -> None:
        if self.movement.kind is not MovementKind.RIGID and self.movement.delta <= 0:
            raise ScenarioError("movement.delta: delta must be positive")
        if (
            self.algorithm is Algorithm.RENDEZVOUS_WITH_DELTA
            and self.movement.kind is not MovementKind.NON_RIGID_KNOWN_DELTA
        ):
            raise ScenarioError(
                "movement: rendezvous_with_delta requires non_rigid_known_delta movement"
            )
        if exact_sqrt(distance_squared(*self.positions)) is None:
            raise ScenarioError("positions: initial inter-robot distance must be rational")
        if self.max_events < 1:
            raise ScenarioError("max_events: must be at least 1")
        floor = min_fairness_window(self.scheduler)
        if self.fairness.window < floor:
            raise ScenarioError(
                f"fairness.window: must be at least {floor} for scheduler {self.scheduler.value}"
            )

    def fraction_set(self) -> tuple[Fraction, ...]:
        fractions = getattr(self.strategy, "fractions", None)
        return tuple(fractions) if fractions else DEFAULT_FRACTIONS


def initial_configuration(scenario: Scenario) -> Configuration:
    robots = tuple(
        RobotState(i, scenario.positions[i], scenario.lights[i], IDLE) for i in (0, 1)
    )
    return Configuration(robots, 0)


# -------------------------------------------------------------------- traces

class VerdictKind(str, Enum):
    RENDEZVOUS = "rendezvous"
    BOUND_EXHAUSTED = "bound_exhausted"
    DIVERGED = "diverged"


@dataclass(frozen=True, slots=True)
class Verdict:
    kind: VerdictKind
    event_index: int | None = None
    final_distance_squared: Fraction | None = None
    gathered_stable: bool = False


@dataclass(frozen=True, slots=True)
class TraceStep:
    choice: EventChoice
    config: Configuration


@dataclass(frozen=True, slots=True)
class Trace:
    scenario: Scenario
    steps: tuple[TraceStep, ...]
    verdict: Verdict

    def configs(self) -> list[Configuration]:
        return [initial_configuration(self.scenario)] + [s.config for s in self.steps]

    def config_at(self, event_index: int) -> Configuration:
        return self.configs()[event_index]

    def choices(self) -> tuple[EventChoice, ...]:
        return tuple(s.choice for s in self.steps)


# -------------------------------------------------------- rendezvous testing

_ALL_LIGHT_PAIRS = (
    (Color.A, Color.A),
    (Color.A, Color.B),
    (Color.B, Color.A),
    (Color.B, Color.B),
)


def stability_certificate(config: Configuration, algorithm: Algorithm) -> bool:
    """Certify that a co-located cycle start can never move again.

    Checks every light pair the robots could reach from here: each compute
    on the co-located snapshot must order a stay. Raises if called on a
    configuration that is not a co-located cycle start.
    """
    if not is_cycle_start(config, algorithm):
        raise ValueError("stability certificate requires a cycle start")
    p0, p1 = config.positions()
    if p0 != p1:
        raise ValueError("stability certificate requires co-located robots")
    # the banded rule needs a known delta; any positive value gives the same
    # answer at distance zero
    for me_light, other_light in _ALL_LIGHT_PAIRS:
        snap = Snapshot(p0, me_light, p1, other_light, known_delta=Fraction(1))
        out = compute(algorithm, snap)
        if out.destination != p0:
            return False
    return True


def is_rendezvous_stable(config: Configuration, algorithm: Algorithm) -> bool:
    if config.robots[0].position != config.robots[1].position:
        return False
    if not is_cycle_start(config, algorithm):
        return False
    return stability_certificate(config, algorithm)


# ------------------------------------------------------------------ running

class _Picker:
    """Strategy adapters: choose one event from the enabled list."""

    def pick(self, enabled: list[EventChoice]) -> EventChoice | None:
        raise NotImplementedError

    def after(self, choice: EventChoice, completed: tuple[int, ...]) -> None:
        pass


class _RoundRobinPicker(_Picker):
    def __init__(self) -> None:
        self.turn = 0

    def pick(self, enabled: list[EventChoice]) -> EventChoice:
        candidates = [c for c in enabled if c.kind is not EventKind.MOVE_PROGRESS]
        mine = [c for c in candidates if c.involves(self.turn)]
        pool = mine or candidates
        full = [
            c
            for c in pool
            if (c.fraction in (None, Fraction(1)))
            and (c.round_fractions is None or all(f in (None, Fraction(1)) for f in c.round_fractions))
        ]
        if full:
            # smallest sync subset containing the turn robot keeps rounds alternating
            return min(full, key=lambda c: len(c.round_robots) if c.round_robots else 0)
        return pool[0]

    def after(self, choice: EventChoice, completed: tuple[int, ...]) -> None:
        if self.turn in completed:
            self.turn = 1 - self.turn


class _SeededRandomPicker(_Picker):
    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)

    def pick(self, enabled: list[EventChoice]) -> EventChoice:
        return self.rng.choice(enabled)


class _ScriptedPicker(_Picker):
    def __init__(self, events: Sequence[EventChoice]) -> None:
        self.events = list(events)
        self.cursor = 0

    def pick(self, enabled: list[EventChoice]) -> EventChoice | None:
        if self.cursor >= len(self.events):
            return None
        choice = self.events[self.cursor]
        self.cursor += 1
        if choice not in enabled:
            from .scheduler import describe_choice

            raise IllegalEventError(
                f"scripted event not enabled (rejected by scheduler/fairness): {describe_choice(choice)}"
            )
        return choice


def _make_picker(strategy: Strategy) -> _Picker:
    if isinstance(strategy, RoundRobin):
        return _RoundRobinPicker()
    if isinstance(strategy, SeededRandom):
        return _SeededRandomPicker(strategy.seed)
    if isinstance(strategy, Scripted):
        return _ScriptedPicker(strategy.events)
    raise ScenarioError(
        f"strategy: {type(strategy).__name__} cannot drive a single run; use the checker"
    )


def run(scenario: Scenario, *, stop_on_rendezvous: bool = True) -> Trace:
    """Drive a run until stable rendezvous, the event bound, or script end."""
    scenario.validate()
    picker = _make_picker(scenario.strategy)
    fraction_set = scenario.fraction_set()
    config = initial_configuration(scenario)
    fairness = FairnessState()
    steps: list[TraceStep] = []

    if stop_on_rendezvous and is_rendezvous_stable(config, scenario.algorithm):
        verdict = Verdict(VerdictKind.RENDEZVOUS, 0, config.distance_squared(), True)
        return Trace(scenario, (), verdict)

    while len(steps) < scenario.max_events:
        enabled = enabled_events(
            config, scenario.scheduler, scenario.movement, scenario.algorithm,
            fraction_set, scenario.fairness, fairness,
        )
        choice = picker.pick(enabled)
        if choice is None:  # script exhausted
            break
        config = apply_event(
            config, choice, scenario.scheduler, scenario.movement, scenario.algorithm,
            enabled=enabled,
        )
        fairness = advance_fairness(fairness, choice, config)
        picker.after(choice, completed_robots(choice, config))
        steps.append(TraceStep(choice, config))
        if stop_on_rendezvous and is_rendezvous_stable(config, scenario.algorithm):
            verdict = Verdict(VerdictKind.RENDEZVOUS, len(steps), config.distance_squared(), True)
            return Trace(scenario, tuple(steps), verdict)

    verdict = Verdict(
        VerdictKind.BOUND_EXHAUSTED,
        None,
        config.distance_squared(),
        is_rendezvous_stable(config, scenario.algorithm),
    )
    return Trace(scenario, tuple(steps), verdict)


def run_all(scenario: Scenario, max_events: int) -> Iterator[Trace]:
    """Brute-force enumeration of every run up to `max_events` events.

    No memoization and no sharing: this is the independent enumerator the
    checker is cross-checked against at tiny depths.
    """
    scenario.validate()
    fraction_set = scenario.fraction_set()

    def walk(config, fairness, steps):
        if is_rendezvous_stable(config, scenario.algorithm):
            yield Trace(
                scenario,
                tuple(steps),
                Verdict(VerdictKind.RENDEZVOUS, len(steps), config.distance_squared(), True),
            )
            return
        if len(steps) >= max_events:
            yield Trace(
                scenario,
                tuple(steps),
                Verdict(VerdictKind.BOUND_EXHAUSTED, None, config.distance_squared(), False),
            )
            return
        enabled = enabled_events(
            config, scenario.scheduler, scenario.movement, scenario.algorithm,
            fraction_set, scenario.fairness, fairness,
        )
        for choice in enabled:
            nxt = apply_event(
                config, choice, scenario.scheduler, scenario.movement, scenario.algorithm,
                enabled=enabled,
            )
            nf = advance_fairness(fairness, choice, nxt)
            steps.append(TraceStep(choice, nxt))
            yield from walk(nxt, nf, steps)
            steps.pop()

    yield from walk(initial_configuration(scenario), FairnessState(), [])


def resume(trace: Trace, strategy: Strategy, extra_events: int,
           *, stop_on_rendezvous: bool = True) -> Trace:
    """Extend a finished trace with a new strategy for up to `extra_events`."""
    scenario = replace(
        trace.scenario,
        strategy=Scripted(trace.choices(), fractions=trace.scenario.fraction_set()),
        max_events=len(trace.steps) + extra_events,
    )
    prefix = run(scenario, stop_on_rendezvous=False)
    assert len(prefix.steps) == len(trace.steps)
    combined = replace(
        trace.scenario,
        strategy=strategy,
        max_events=len(trace.steps) + extra_events,
    )
    picker = _make_picker(strategy)
    fraction_set = combined.fraction_set()
    config = prefix.steps[-1].config if prefix.steps else initial_configuration(combined)
    fairness = _fairness_after(trace)
    steps = list(prefix.steps)
    if stop_on_rendezvous and is_rendezvous_stable(config, combined.algorithm):
        verdict = Verdict(VerdictKind.RENDEZVOUS, len(steps), config.distance_squared(), True)
        return Trace(combined, tuple(steps), verdict)
    while len(steps) < combined.max_events:
        enabled = enabled_events(
            config, combined.scheduler, combined.movement, combined.algorithm,
            fraction_set, combined.fairness, fairness,
        )
        choice = picker.pick(enabled)
        if choice is None:
            break
        config = apply_event(
            config, choice, combined.scheduler, combined.movement, combined.algorithm,
            enabled=enabled,
        )
        fairness = advance_fairness(fairness, choice, config)
        picker.after(choice, completed_robots(choice, config))
        steps.append(TraceStep(choice, config))
        if stop_on_rendezvous and is_rendezvous_stable(config, combined.algorithm):
            verdict = Verdict(VerdictKind.RENDEZVOUS, len(steps), config.distance_squared(), True)
            return Trace(combined, tuple(steps), verdict)
    verdict = Verdict(
        VerdictKind.BOUND_EXHAUSTED, None, config.distance_squared(),
        is_rendezvous_stable(config, combined.algorithm),
    )
    return Trace(combined, tuple(steps), verdict)


def _fairness_after(trace: Trace) -> FairnessState:
    fairness = FairnessState()
    for step in trace.steps:
        fairness = advance_fairness(fairness, step.choice, step.config)
    return fairness


# ------------------------------------------------------------- trace queries

START_SENTINEL = 0
_QUERY_KINDS = (EventKind.LOOK, EventKind.COMP, EventKind.MOVE_BEGIN, EventKind.MOVE_END)


def _event_matches(choice: EventChoice, robot: int, kind: EventKind) -> bool:
    if choice.kind is EventKind.SYNC_ROUND:
        return robot in choice.round_robots and kind in _QUERY_KINDS
    if choice.kind is EventKind.LOOK_COMP:
        if choice.robot != robot:
            return False
        return kind in (EventKind.LOOK, EventKind.COMP)
    return choice.robot == robot and choice.kind is kind


def query_trace(
    trace: Trace, robot: int, kind: EventKind, event_index: int, direction: str
) -> int | None:
    """Index of the robot's next/previous operation of the given kind.

    `direction` is "after" or "before". Event indices are 1-based (index k
    is the event that produced configuration k). A before-query with no
    match returns the start sentinel 0; an after-query with no match
    returns None.
    """
    if direction == "after":
        for i in range(event_index, len(trace.steps)):
            if _event_matches(trace.steps[i].choice, robot, kind):
                return i + 1
        return None
    if direction == "before":
        for i in range(min(event_index, len(trace.steps)) - 1, -1, -1):
            if _event_matches(trace.steps[i].choice, robot, kind):
                return i + 1
        return START_SENTINEL
    raise ValueError("direction must be 'after' or 'before'")


def cycle_start_metrics(
    trace: Trace,
) -> list[tuple[int, tuple[Color, Color], Fraction]]:
    """(event_index, lights, squared distance) at every cycle-start config."""
    out = []
    for index, config in enumerate(trace.configs()):
        if is_cycle_start(config, trace.scenario.algorithm):
            out.append((index, config.lights(), config.distance_squared()))
    return out


def mismatch_commit_points(trace: Trace) -> list[int]:
    """Event indices of Looks where the lights differ and the observed robot
    holds no unconsumed snapshot (its last look has been computed through).

    From such a point the rules freeze both lights and send the一 robot with
    light A onto the other's position, so every fair continuation must end
    in rendezvous; the acceptance suite leans on this query.
    """
    points = []
    configs = trace.configs()
    for i, step in enumerate(trace.steps):
        if step.choice.kind not in (EventKind.LOOK, EventKind.LOOK_COMP):
            continue
        pre = configs[i]
        viewer = step.choice.robot
        other = pre.robots[1 - viewer]
        if pre.robots[viewer].light is other.light:
            continue
        if isinstance(other.phase, Looked):
            continue
        points.append(i + 1)
    return points


# --------------------------------------------------------- invariant helpers

def fairness_violations(trace: Trace, window: int | None = None) -> list[tuple[int, int]]:
    """(robot, window_start) pairs where a window passed without a completed
    cycle. Empty on every trace the engine itself produces."""
    from .scheduler import completed_robots

    window = window or trace.scenario.fairness.window
    n = len(trace.steps)
    violations = []
    for robot in (0, 1):
        done = [
            i + 1
            for i, step in enumerate(trace.steps)
            if robot in completed_robots(step.choice, step.config)
        ]
        marks = [0] + done
        for prev, nxt in zip(marks, marks[1:]):
            if nxt - prev > window:
                violations.append((robot, prev))
        if n - marks[-1] > window:
            violations.append((robot, marks[-1]))
    return violations


def segment_containment_ok(trace: Trace) -> bool:
    """Every settled position, move endpoint, and observed point stays on the
    closed segment between the two initial positions."""
    a, b = trace.scenario.positions
    degenerate = a == b

    def ok(p: Point) -> bool:
        return p == a if degenerate else on_segment(p, a, b)

    for config in trace.configs():
        for robot in config.robots:
            if not ok(robot.position) or not ok(robot.observable_position()):
                return False
            phase = robot.phase
            if isinstance(phase, Computed) and not ok(phase.destination):
                return False
            if isinstance(phase, Moving) and not (ok(phase.origin) and ok(phase.target)):
                return False
    return True


def distance_bounded_ok(trace: Trace) -> bool:
    d0 = distance_squared(*trace.scenario.positions)
    return all(c.distance_squared() <= d0 for c in trace.configs())


def delta_guarantee_ok(trace: Trace) -> bool:
    """Every completed move either finished in full or travelled at least the
    minimum step. A short stop is a violation exactly when the distance
    actually covered is below delta (rigid movement allows no short stop at
    all)."""
    movement = trace.scenario.movement
    rigid = movement.kind is MovementKind.RIGID
    delta2 = None if rigid else movement.delta * movement.delta
    configs = trace.configs()
    for i, step in enumerate(trace.steps):
        choice = step.choice
        pre, post = configs[i], step.config
        checks: list[tuple[int, Fraction]] = []
        if choice.kind is EventKind.MOVE_END:
            checks.append((choice.robot, choice.fraction))
        elif choice.kind is EventKind.SYNC_ROUND:
            for pos_in_round, index in enumerate(choice.round_robots):
                stop = choice.round_fractions[pos_in_round]
                if stop is not None:
                    checks.append((index, stop))
        for index, stop in checks:
            if stop == 1:
                continue
            if rigid:
                return False
            travelled2 = distance_squared(pre.robots[index].position, post.robots[index].position)
            if travelled2 < delta2:
                return False
    return True


def replay_matches(trace: Trace) -> bool:
    """Re-apply the recorded choices from the scenario; configurations must
    reproduce exactly."""
    scenario = replace(
        trace.scenario,
        strategy=Scripted(trace.choices(), fractions=trace.scenario.fraction_set()),
        max_events=len(trace.steps),
    )
    again = run(scenario, stop_on_rendezvous=False)
    if len(again.steps) != len(trace.steps):
        return False
    return all(a.config == b.config for a, b in zip(again.steps, trace.steps))
