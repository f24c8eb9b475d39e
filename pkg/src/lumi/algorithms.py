"""The robot decision rules: pure snapshot -> (light, destination) maps.

Two rules are implemented. The basic two-color rule branches on the pair
of lights; the known-delta variant first bands on the observed distance
and falls back to the basic rule once the robots are close enough that
every move it can order is shorter than the guaranteed minimum step (and
therefore always completes).

Both rules only ever emit one of four destinations: stay, the other
robot's observed position, the midpoint, or a half-minimum-step toward
the other robot. They are equivariant under rational isometries, which
is what lets the engine evaluate them directly in the global frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .geometry import Point, distance_squared, exact_sqrt, midpoint, point_toward
from .model import Color, Snapshot


class Algorithm(str, Enum):
    RENDEZVOUS = "rendezvous"
    RENDEZVOUS_WITH_DELTA = "rendezvous_with_delta"


class AlgorithmInputError(ValueError):
    """A snapshot lacks data the rule needs (or carries impossible data)."""


@dataclass(frozen=True, slots=True)
class ComputeOutput:
    light: Color
    destination: Point


class DestinationRole(str, Enum):
    STAY = "stay"
    OTHER = "other"
    MIDPOINT = "midpoint"
    STEP = "step"


def compute_rendezvous(snap: Snapshot) -> ComputeOutput:
    """Basic two-color rule; total over all four light pairs.

    (A, A): flip to B and head for the midpoint.
    (A, B): keep A and head for the other robot's observed position.
    (B, A): keep B and stay put.
    (B, B): flip to A and stay put.
    """
    if snap.me_light is Color.A:
        if snap.other_light is Color.A:
            return ComputeOutput(Color.B, midpoint(snap.me_position, snap.other_position))
        return ComputeOutput(Color.A, snap.other_position)
    if snap.other_light is Color.A:
        return ComputeOutput(Color.B, snap.me_position)
    return ComputeOutput(Color.A, snap.me_position)


def compute_rendezvous_with_delta(snap: Snapshot) -> ComputeOutput:
    """Distance-banded rule for robots that know the minimum step `delta`.

    Far apart (distance > 2*delta): once both lights show B, creep by
    delta/2 toward the other robot; otherwise switch the light to B
    without moving. Middle band (delta <= distance <= 2*delta, boundaries
    included): midpoint jump when both lights show A, otherwise switch to
    A without moving. Inside delta: the basic rule, whose moves are now
    all short enough to complete in full.
    """
    delta = snap.known_delta
    if delta is None:
        raise AlgorithmInputError("snapshot does not carry the minimum step length")
    d2 = distance_squared(snap.me_position, snap.other_position)
    delta2 = delta * delta
    if d2 > 4 * delta2:
        if snap.me_light is Color.B and snap.other_light is Color.B:
            dist = exact_sqrt(d2)
            if dist is None:
                raise AlgorithmInputError("inter-robot distance is irrational; cannot take an exact half-step")
            fraction = (delta / 2) / dist
            return ComputeOutput(Color.B, point_toward(snap.me_position, snap.other_position, fraction))
        return ComputeOutput(Color.B, snap.me_position)
    if d2 >= delta2:
        if snap.me_light is Color.A and snap.other_light is Color.A:
            return ComputeOutput(Color.B, midpoint(snap.me_position, snap.other_position))
        return ComputeOutput(Color.A, snap.me_position)
    return compute_rendezvous(snap)


def compute(algorithm: Algorithm, snap: Snapshot) -> ComputeOutput:
    if algorithm is Algorithm.RENDEZVOUS:
        return compute_rendezvous(snap)
    return compute_rendezvous_with_delta(snap)


def classify_destination(snap: Snapshot, out: ComputeOutput) -> DestinationRole:
    """Which of the four destination shapes a compute produced (for reports)."""
    if out.destination == snap.me_position:
        return DestinationRole.STAY
    if out.destination == snap.other_position:
        return DestinationRole.OTHER
    if out.destination == midpoint(snap.me_position, snap.other_position):
        return DestinationRole.MIDPOINT
    return DestinationRole.STEP


@dataclass(frozen=True, slots=True)
class Isometry:
    """Rotation (rational point on the unit circle) + optional reflection
    across the x-axis, followed by a translation. Distance-preserving, so
    it commutes with both decision rules."""

    cos: Fraction = Fraction(1)
    sin: Fraction = Fraction(0)
    reflect: bool = False
    shift_x: Fraction = Fraction(0)
    shift_y: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.cos * self.cos + self.sin * self.sin != 1:
            raise ValueError("rotation must be a rational point on the unit circle")

    def apply(self, p: Point) -> Point:
        x, y = p.x, p.y
        if self.reflect:
            y = -y
        return Point(
            self.cos * x - self.sin * y + self.shift_x,
            self.sin * x + self.cos * y + self.shift_y,
        )


def apply_isometry(snap: Snapshot, iso: Isometry) -> Snapshot:
    """Map every position in a snapshot; lights and known delta unchanged."""
    return Snapshot(
        me_position=iso.apply(snap.me_position),
        me_light=snap.me_light,
        other_position=iso.apply(snap.other_position),
        other_light=snap.other_light,
        known_delta=snap.known_delta,
    )
