"""Exact planar geometry on rational coordinates.

Every destination a decision rule can produce (midpoints, observed
positions, fractional steps along a segment) is rational whenever its
inputs are, so the whole simulation runs on `fractions.Fraction` and
"both robots occupy the same point" is an exact, decidable test.
Distances are handled as squares wherever possible; square roots are
taken only when they are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


class GeometryError(ValueError):
    """Raised when a geometric precondition is violated."""


def rational(value: int | str | Fraction) -> Fraction:
    """Coerce an exact value (int, Fraction, or "num/den" string) to Fraction.

    Floats are rejected: they would silently break exactness.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r}")


def rational_str(value: Fraction) -> str:
    """Serialize as "num/den" with the denominator always explicit."""
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, slots=True)
class Point:
    x: Fraction
    y: Fraction


def point(x: int | str | Fraction, y: int | str | Fraction = 0) -> Point:
    """Build a Point from exact values; `point(3)` is shorthand for (3, 0)."""
    return Point(rational(x), rational(y))


def distance_squared(p: Point, q: Point) -> Fraction:
    dx = p.x - q.x
    dy = p.y - q.y
    return dx * dx + dy * dy


def compare_distance(p: Point, q: Point, threshold: Fraction) -> int:
    """Compare dis(p, q) with a threshold length; returns -1, 0, or 1.

    Both sides are squared so the comparison is exact even when the
    distance itself is irrational.
    """
    if threshold < 0:
        return 1
    d2 = distance_squared(p, q)
    t2 = threshold * threshold
    if d2 < t2:
        return -1
    if d2 > t2:
        return 1
    return 0


def midpoint(p: Point, q: Point) -> Point:
    return Point((p.x + q.x) / 2, (p.y + q.y) / 2)


def point_toward(origin: Point, target: Point, fraction: Fraction) -> Point:
    """The point `fraction` of the way along the segment origin -> target.

    Taking a rational fraction of the displacement (rather than an absolute
    length) keeps the result rational even when the segment length is not.
    """
    if origin == target:
        raise GeometryError("direction undefined: origin equals target")
    if not 0 <= fraction <= 1:
        raise GeometryError(f"fraction outside [0, 1]: {fraction}")
    return Point(
        origin.x + fraction * (target.x - origin.x),
        origin.y + fraction * (target.y - origin.y),
    )


def exact_sqrt(value: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    if value < 0:
        raise GeometryError("square root of a negative rational")
    num, den = value.numerator, value.denominator
    rn = math.isqrt(num)
    rd = math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return Fraction(rn, rd)


def on_segment(p: Point, a: Point, b: Point) -> bool:
    """Exact test that p lies on the closed segment [a, b]."""
    cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    if cross != 0:
        return False
    return (
        min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )
