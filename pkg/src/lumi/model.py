"""Shared state types: lights, movement models, cycle phases, configurations.

All types here are immutable values; the engine advances a run by building
new configurations, never by mutating old ones.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

from .geometry import Point, distance_squared, point_toward, rational

ROBOT_NAMES = ("r", "s")


def robot_index(name: str) -> int:
    try:
        return ROBOT_NAMES.index(name)
    except ValueError:
        raise ValueError(f"unknown robot name: {name!r}") from None


class Color(str, Enum):
    A = "A"
    B = "B"


class MovementKind(str, Enum):
    RIGID = "rigid"
    NON_RIGID = "non_rigid"
    NON_RIGID_KNOWN_DELTA = "non_rigid_known_delta"


@dataclass(frozen=True, slots=True)
class Movement:
    """Movement restriction: rigid moves always complete; non-rigid moves may
    be cut short by the adversary but always travel at least `delta` (or the
    whole displacement when that is shorter). The known-delta variant also
    exposes `delta` to the robots through their snapshots.
    """

    kind: MovementKind
    delta: Fraction | None = None

    def __post_init__(self) -> None:
        if self.kind is MovementKind.RIGID:
            if self.delta is not None:
                raise ValueError("rigid movement takes no delta")
        else:
            if self.delta is None or self.delta <= 0:
                raise ValueError("delta must be positive")

    @property
    def delta_known_to_robots(self) -> bool:
        return self.kind is MovementKind.NON_RIGID_KNOWN_DELTA


RIGID = Movement(MovementKind.RIGID)


def non_rigid(delta: int | str | Fraction) -> Movement:
    return Movement(MovementKind.NON_RIGID, rational(delta))


def non_rigid_known_delta(delta: int | str | Fraction) -> Movement:
    return Movement(MovementKind.NON_RIGID_KNOWN_DELTA, rational(delta))


@dataclass(frozen=True, slots=True)
class Snapshot:
    """What one robot saw when it looked.

    Positions are stored in the engine's global frame. The decision rules
    are equivariant under rational isometries (property-tested), so feeding
    them global coordinates gives the same answer the robot would compute
    in its own frame; `localized()` produces the robot-frame view with the
    observer at the origin when that view is wanted explicitly.
    """

    me_position: Point
    me_light: Color
    other_position: Point
    other_light: Color
    known_delta: Fraction | None = None

    def localized(self) -> "Snapshot":
        shift_x, shift_y = self.me_position.x, self.me_position.y
        return replace(
            self,
            me_position=Point(self.me_position.x - shift_x, self.me_position.y - shift_y),
            other_position=Point(self.other_position.x - shift_x, self.other_position.y - shift_y),
        )


@dataclass(frozen=True, slots=True)
class Idle:
    """Between cycles; the robot's next operation is a Look."""


@dataclass(frozen=True, slots=True)
class Looked:
    """Snapshot taken, compute pending (the snapshot may go stale meanwhile)."""

    snapshot: Snapshot


@dataclass(frozen=True, slots=True)
class Computed:
    """Light already set at the compute instant; a nontrivial move is pending.

    A compute whose destination equals the current position skips straight
    back to Idle, so `destination` always differs from the robot's position.
    """

    destination: Point


@dataclass(frozen=True, slots=True)
class Moving:
    """In transit from origin toward target.

    `observed_fraction` is the fraction of the displacement an observer
    currently sees; the adversary advances it monotonically and the final
    stop fraction can never fall below it.
    """

    origin: Point
    target: Point
    observed_fraction: Fraction


Phase = Idle | Looked | Computed | Moving
IDLE = Idle()


@dataclass(frozen=True, slots=True)
class RobotState:
    index: int
    position: Point
    light: Color
    phase: Phase = IDLE

    @property
    def name(self) -> str:
        return ROBOT_NAMES[self.index]

    def observable_position(self) -> Point:
        """Where an observer sees this robot right now, mid-move included."""
        if isinstance(self.phase, Moving) and self.phase.observed_fraction > 0:
            return point_toward(self.phase.origin, self.phase.target, self.phase.observed_fraction)
        return self.position


@dataclass(frozen=True, slots=True)
class Configuration:
    robots: tuple[RobotState, RobotState]
    event_index: int = 0

    def lights(self) -> tuple[Color, Color]:
        return (self.robots[0].light, self.robots[1].light)

    def positions(self) -> tuple[Point, Point]:
        return (self.robots[0].position, self.robots[1].position)

    def distance_squared(self) -> Fraction:
        return distance_squared(self.robots[0].position, self.robots[1].position)

    def with_robot(self, index: int, robot: RobotState) -> "Configuration":
        robots = list(self.robots)
        robots[index] = robot
        return Configuration((robots[0], robots[1]), self.event_index)

    def bump(self) -> "Configuration":
        return Configuration(self.robots, self.event_index + 1)
