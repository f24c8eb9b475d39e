"""The adversary's move set: which atomic events are legal next, and what
each one does to a configuration.

Time is a sequence of atomic events; only their order and the adversary's
observation/stop fractions can influence any decision, so there is no
clock beyond the event index. Fairness is a windowed budget: within any
window of consecutive events each robot must complete at least one full
cycle, and `enabled_events` starts forcing a lagging robot's events early
enough that the budget can always be met.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Iterable

from .algorithms import Algorithm, compute
from .geometry import ONE, ZERO, distance_squared, point_toward
from .model import (
    Computed,
    Configuration,
    IDLE,
    Idle,
    Looked,
    Movement,
    MovementKind,
    Moving,
    Phase,
    RobotState,
    Snapshot,
)


class Scheduler(str, Enum):
    FSYNC = "fsync"
    SSYNC = "ssync"
    ASYNC = "async"
    LC_ATOMIC_ASYNC = "lc_atomic_async"
    MOVE_ATOMIC_ASYNC = "move_atomic_async"


class EventKind(str, Enum):
    LOOK = "look"
    COMP = "comp"
    LOOK_COMP = "look_comp"
    MOVE_BEGIN = "move_begin"
    MOVE_PROGRESS = "move_progress"
    MOVE_END = "move_end"
    SYNC_ROUND = "sync_round"


@dataclass(frozen=True, slots=True)
class EventChoice:
    """One adversary decision.

    `fraction` is the observed fraction for MOVE_PROGRESS or the stop
    fraction for MOVE_END. Sync rounds carry the activated robots plus one
    stop fraction per activated robot (None where that robot's computed
    destination equals its position, i.e. the move is omitted).
    """

    kind: EventKind
    robot: int | None = None
    fraction: Fraction | None = None
    round_robots: tuple[int, ...] | None = None
    round_fractions: tuple[Fraction | None, ...] | None = None

    def involves(self, index: int) -> bool:
        if self.robot == index:
            return True
        return self.round_robots is not None and index in self.round_robots


@dataclass(frozen=True, slots=True)
class FairnessBudget:
    """Each robot completes at least one full cycle within any window of
    `window` consecutive events."""

    window: int = 16


@dataclass(frozen=True, slots=True)
class FairnessState:
    """Events elapsed since each robot last completed a cycle."""

    since_cycle: tuple[int, int] = (0, 0)


class IllegalEventError(ValueError):
    """The chosen event is not enabled in the current configuration."""


DEFAULT_FRACTIONS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))
RIGID_FRACTIONS = (Fraction(1, 2), Fraction(1))


def _validate_fractions(fraction_set: Iterable[Fraction]) -> tuple[Fraction, ...]:
    fractions = tuple(sorted(set(fraction_set)))
    if not fractions or fractions[-1] != 1 or fractions[0] <= 0:
        raise ValueError("fraction set must be rationals in (0, 1] and contain 1")
    return fractions


# Worst-case events a robot still needs to finish its current cycle,
# assuming the adversary grants it every event (no progress stalls).
def _worst_remaining(scheduler: Scheduler, phase: Phase) -> int:
    if scheduler in (Scheduler.SSYNC, Scheduler.FSYNC):
        return 1
    if isinstance(phase, Moving):
        return 1
    if isinstance(phase, Computed):
        return 1 if scheduler is Scheduler.MOVE_ATOMIC_ASYNC else 2
    if isinstance(phase, Looked):
        return 2 if scheduler is Scheduler.MOVE_ATOMIC_ASYNC else 3
    # Idle
    if scheduler is Scheduler.ASYNC:
        return 4
    return 3


def min_fairness_window(scheduler: Scheduler) -> int:
    """Smallest window for which the forcing rule can always satisfy the
    budget: both robots may need to finish a full cycle back to back."""
    if scheduler in (Scheduler.SSYNC, Scheduler.FSYNC):
        return 2
    if scheduler is Scheduler.ASYNC:
        return 8
    return 6


def forced_robot(
    config: Configuration,
    scheduler: Scheduler,
    budget: FairnessBudget,
    fairness: FairnessState,
) -> int | None:
    """Robot whose events must be scheduled now to keep the budget honest.

    A robot is forced once its remaining slack only just covers finishing
    its own cycle plus the other robot's; serving the tighter robot first
    then leaves exactly enough slack for the other.
    """
    worst = [_worst_remaining(scheduler, config.robots[i].phase) for i in (0, 1)]
    reserve = worst[0] + worst[1]
    needy = [
        i
        for i in (0, 1)
        if budget.window - fairness.since_cycle[i] <= reserve
    ]
    if not needy:
        return None
    return min(needy, key=lambda i: (budget.window - fairness.since_cycle[i], i))


def _take_snapshot(config: Configuration, viewer: int, movement: Movement) -> Snapshot:
    me = config.robots[viewer]
    other = config.robots[1 - viewer]
    return Snapshot(
        me_position=me.position,
        me_light=me.light,
        other_position=other.observable_position(),
        other_light=other.light,
        known_delta=movement.delta if movement.delta_known_to_robots else None,
    )


def _legal_stop_fractions(
    movement: Movement,
    origin,
    target,
    observed: Fraction,
    fraction_set: tuple[Fraction, ...],
) -> list[Fraction]:
    """Stop fractions the adversary may pick for the pending move.

    Rigid: the destination is always reached. Non-rigid: the travelled
    distance must be at least min(delta, displacement); a displacement of
    at most delta therefore forces the full move. The stop can never fall
    behind what an observer has already been shown.
    """
    if movement.kind is MovementKind.RIGID:
        return [ONE]
    disp2 = distance_squared(origin, target)
    delta2 = movement.delta * movement.delta
    if disp2 <= delta2:
        return [ONE]
    return [f for f in fraction_set if f >= observed and f * f * disp2 >= delta2]


def _robot_events(
    config: Configuration,
    index: int,
    scheduler: Scheduler,
    movement: Movement,
    fraction_set: tuple[Fraction, ...],
    include_progress: bool,
) -> list[EventChoice]:
    phase = config.robots[index].phase
    events: list[EventChoice] = []
    if isinstance(phase, Idle):
        kind = EventKind.LOOK_COMP if scheduler is Scheduler.LC_ATOMIC_ASYNC else EventKind.LOOK
        events.append(EventChoice(kind, robot=index))
    elif isinstance(phase, Looked):
        events.append(EventChoice(EventKind.COMP, robot=index))
    elif isinstance(phase, Computed):
        if scheduler is Scheduler.MOVE_ATOMIC_ASYNC:
            position = config.robots[index].position
            for stop in _legal_stop_fractions(movement, position, phase.destination, ZERO, fraction_set):
                events.append(EventChoice(EventKind.MOVE_END, robot=index, fraction=stop))
        else:
            events.append(EventChoice(EventKind.MOVE_BEGIN, robot=index))
    elif isinstance(phase, Moving):
        if include_progress:
            for f in fraction_set:
                if phase.observed_fraction < f <= 1:
                    events.append(EventChoice(EventKind.MOVE_PROGRESS, robot=index, fraction=f))
        for stop in _legal_stop_fractions(
            movement, phase.origin, phase.target, phase.observed_fraction, fraction_set
        ):
            events.append(EventChoice(EventKind.MOVE_END, robot=index, fraction=stop))
    return events


def _sync_round_events(
    config: Configuration,
    subset: tuple[int, ...],
    movement: Movement,
    algorithm: Algorithm,
    fraction_set: tuple[Fraction, ...],
) -> list[EventChoice]:
    options: list[list[Fraction | None]] = []
    for index in subset:
        snap = _take_snapshot(config, index, movement)
        out = compute(algorithm, snap)
        if out.destination == config.robots[index].position:
            options.append([None])
        else:
            options.append(
                list(
                    _legal_stop_fractions(
                        movement, config.robots[index].position, out.destination, ZERO, fraction_set
                    )
                )
            )
    return [
        EventChoice(EventKind.SYNC_ROUND, round_robots=subset, round_fractions=tuple(combo))
        for combo in product(*options)
    ]


def enabled_events(
    config: Configuration,
    scheduler: Scheduler,
    movement: Movement,
    algorithm: Algorithm,
    fraction_set: tuple[Fraction, ...],
    budget: FairnessBudget,
    fairness: FairnessState,
) -> list[EventChoice]:
    """Every event choice legal right now.

    Never empty: when a robot's fairness slack runs low only that robot's
    cycle-advancing events are offered (observation stalls excluded), so a
    fair continuation always exists.
    """
    fraction_set = _validate_fractions(fraction_set)
    forced = forced_robot(config, scheduler, budget, fairness)
    if scheduler in (Scheduler.SSYNC, Scheduler.FSYNC):
        if scheduler is Scheduler.FSYNC:
            subsets = [(0, 1)]
        else:
            subsets = [(0,), (1,), (0, 1)]
            if forced is not None:
                subsets = [s for s in subsets if forced in s]
        events = []
        for subset in subsets:
            events.extend(_sync_round_events(config, subset, movement, algorithm, fraction_set))
        return events
    robots = (0, 1) if forced is None else (forced,)
    events = []
    for index in robots:
        events.extend(
            _robot_events(
                config, index, scheduler, movement, fraction_set,
                include_progress=forced is None,
            )
        )
    return events


def _apply_compute(robot: RobotState, snapshot: Snapshot, algorithm: Algorithm) -> RobotState:
    out = compute(algorithm, snapshot)
    if out.destination == robot.position:
        phase: Phase = IDLE
    else:
        phase = Computed(out.destination)
    return RobotState(robot.index, robot.position, out.light, phase)


def apply_event(
    config: Configuration,
    choice: EventChoice,
    scheduler: Scheduler,
    movement: Movement,
    algorithm: Algorithm,
    enabled: list[EventChoice] | None = None,
    fraction_set: tuple[Fraction, ...] | None = None,
    budget: FairnessBudget | None = None,
    fairness: FairnessState | None = None,
) -> Configuration:
    """Apply one event. When `enabled` is given the choice is checked against
    it; otherwise legality is recomputed from the remaining arguments (all
    of which are then required)."""
    if enabled is None:
        if fraction_set is None or budget is None or fairness is None:
            raise ValueError("apply_event needs either the enabled list or the full scheduling context")
        enabled = enabled_events(config, scheduler, movement, algorithm, fraction_set, budget, fairness)
    if choice not in enabled:
        raise IllegalEventError(f"event not enabled here: {describe_choice(choice)}")

    kind = choice.kind
    if kind is EventKind.SYNC_ROUND:
        snaps = {i: _take_snapshot(config, i, movement) for i in choice.round_robots}
        new = config
        for pos_in_round, index in enumerate(choice.round_robots):
            robot = new.robots[index]
            out = compute(algorithm, snaps[index])
            stop = choice.round_fractions[pos_in_round]
            if stop is None:
                position = robot.position
            else:
                position = point_toward(robot.position, out.destination, stop)
            new = new.with_robot(index, RobotState(index, position, out.light, IDLE))
        return new.bump()

    index = choice.robot
    robot = config.robots[index]
    if kind is EventKind.LOOK:
        snapshot = _take_snapshot(config, index, movement)
        new_robot = RobotState(index, robot.position, robot.light, Looked(snapshot))
    elif kind is EventKind.COMP:
        new_robot = _apply_compute(robot, robot.phase.snapshot, algorithm)
    elif kind is EventKind.LOOK_COMP:
        snapshot = _take_snapshot(config, index, movement)
        new_robot = _apply_compute(robot, snapshot, algorithm)
    elif kind is EventKind.MOVE_BEGIN:
        new_robot = RobotState(
            index, robot.position, robot.light, Moving(robot.position, robot.phase.destination, ZERO)
        )
    elif kind is EventKind.MOVE_PROGRESS:
        phase = robot.phase
        new_robot = RobotState(
            index, robot.position, robot.light, Moving(phase.origin, phase.target, choice.fraction)
        )
    elif kind is EventKind.MOVE_END:
        if isinstance(robot.phase, Computed):  # move-atomic: begin+end collapse
            origin, target = robot.position, robot.phase.destination
        else:
            origin, target = robot.phase.origin, robot.phase.target
        position = point_toward(origin, target, choice.fraction)
        new_robot = RobotState(index, position, robot.light, IDLE)
    else:  # pragma: no cover - enum is closed
        raise IllegalEventError(f"unknown event kind {kind}")
    return config.with_robot(index, new_robot).bump()


def completed_robots(choice: EventChoice, after: Configuration) -> tuple[int, ...]:
    """Robots whose cycle finished at this event (they are Idle again)."""
    if choice.kind is EventKind.SYNC_ROUND:
        return choice.round_robots
    if choice.kind is EventKind.MOVE_END:
        return (choice.robot,)
    if choice.kind in (EventKind.COMP, EventKind.LOOK_COMP):
        if isinstance(after.robots[choice.robot].phase, Idle):
            return (choice.robot,)
    return ()


def advance_fairness(
    fairness: FairnessState, choice: EventChoice, after: Configuration
) -> FairnessState:
    done = completed_robots(choice, after)
    since = tuple(
        0 if i in done else fairness.since_cycle[i] + 1 for i in (0, 1)
    )
    return FairnessState(since)


def is_cycle_start(config: Configuration, algorithm: Algorithm) -> bool:
    """True when both robots' next effective operation is a Look.

    A robot sitting on a snapshot whose pending compute would neither
    change its light nor move it is normalized away: that compute can be
    imagined already done. Any pending nontrivial compute or move means
    this is not a cycle start.
    """
    for robot in config.robots:
        phase = robot.phase
        if isinstance(phase, Idle):
            continue
        if isinstance(phase, Looked):
            out = compute(algorithm, phase.snapshot)
            if out.light is robot.light and out.destination == robot.position:
                continue
            return False
        return False
    return True


def explain_rejection(
    config: Configuration,
    choice: EventChoice,
    scheduler: Scheduler,
    movement: Movement,
    budget: FairnessBudget,
    fairness: FairnessState,
) -> str:
    """Name the constraint a rejected event choice violates."""
    from .model import ROBOT_NAMES

    forced = forced_robot(config, scheduler, budget, fairness)
    if forced is not None and not choice.involves(forced):
        return f"fairness budget forces an event of robot {ROBOT_NAMES[forced]}"
    sync = scheduler in (Scheduler.SSYNC, Scheduler.FSYNC)
    if sync != (choice.kind is EventKind.SYNC_ROUND):
        return f"event kind {choice.kind.value} does not belong to scheduler {scheduler.value}"
    if choice.kind is EventKind.LOOK_COMP and scheduler is not Scheduler.LC_ATOMIC_ASYNC:
        return "look_comp is only atomic under the lc-atomic scheduler"
    if scheduler is Scheduler.FSYNC and choice.round_robots != (0, 1):
        return "the fully synchronous scheduler activates both robots every round"
    if choice.robot is not None:
        phase = config.robots[choice.robot].phase
        if choice.kind is EventKind.MOVE_PROGRESS:
            if not isinstance(phase, Moving):
                return "the robot is not moving"
            if choice.fraction is None or choice.fraction <= phase.observed_fraction:
                return "observed fraction must strictly increase"
            if choice.fraction > 1:
                return "observed fraction cannot exceed the full move"
            if forced is not None:
                return "fairness forcing excludes observation stalls"
        if choice.kind is EventKind.MOVE_END:
            if isinstance(phase, Moving):
                origin, target, observed = phase.origin, phase.target, phase.observed_fraction
            elif isinstance(phase, Computed) and scheduler is Scheduler.MOVE_ATOMIC_ASYNC:
                origin, target, observed = config.robots[choice.robot].position, phase.destination, ZERO
            else:
                return "the robot has no move in progress"
            if choice.fraction is None or not 0 < choice.fraction <= 1:
                return "stop fraction must lie in (0, 1]"
            if choice.fraction < observed:
                return "stop cannot fall behind the observed fraction"
            if movement.kind is MovementKind.RIGID and choice.fraction != 1:
                return "rigid movement always completes the move"
            if movement.kind is not MovementKind.RIGID:
                disp2 = distance_squared(origin, target)
                delta2 = movement.delta * movement.delta
                if disp2 <= delta2 and choice.fraction != 1:
                    return "a move no longer than the minimum distance always completes"
                if choice.fraction * choice.fraction * disp2 < delta2:
                    return "stop violates minimum distance delta"
    return "event does not match the robot's phase"


def describe_choice(choice: EventChoice) -> str:
    from .model import ROBOT_NAMES

    if choice.kind is EventKind.SYNC_ROUND:
        names = ",".join(ROBOT_NAMES[i] for i in choice.round_robots)
        fracs = ",".join("-" if f is None else str(f) for f in choice.round_fractions)
        return f"sync_round({names}; stops={fracs})"
    name = ROBOT_NAMES[choice.robot] if choice.robot is not None else "?"
    if choice.fraction is not None:
        return f"{choice.kind.value}({name}, {choice.fraction})"
    return f"{choice.kind.value}({name})"
