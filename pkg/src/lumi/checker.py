"""Bounded exhaustive exploration over every adversary choice.

Configurations are merged up to the symmetries the semantics respects:
translation always, and uniform scaling when the decision rule is
scale-free (the basic rule under rigid movement; the known-delta rule and
any non-rigid movement compare absolute lengths against delta, so only
translation is safe there). Fairness counters are part of the merged
state, so every walk through the graph is a run the engine itself could
produce.

Rendezvous-stable states are terminal. A cycle among non-terminal states
is an infinite fair run that never rendezvouses; it is reported as a
prefix plus a loop, validated by exact replay, with the exact rational
factor by which one loop iteration contracts the inter-robot distance
(a factor of 1 is a livelock, below 1 convergence without meeting).
If the reachable graph is cycle-free and every path ends in a terminal
state, every fair run at this discretization rendezvouses, regardless of
length; the depth and node budgets merely bound the search itself.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterator

from .algorithms import Algorithm
from .engine import (
    Scenario,
    Scripted,
    Trace,
    cycle_start_metrics,
    initial_configuration,
    is_rendezvous_stable,
    run,
)
from .geometry import Point, distance_squared, exact_sqrt
from .model import (
    Color,
    Computed,
    Configuration,
    Idle,
    Looked,
    MovementKind,
    Moving,
)
from .scheduler import (
    DEFAULT_FRACTIONS,
    EventChoice,
    FairnessState,
    RIGID_FRACTIONS,
    advance_fairness,
    apply_event,
    enabled_events,
    is_cycle_start,
)


def default_fraction_set(scenario: Scenario) -> tuple[Fraction, ...]:
    """Observation/stop fractions used when none are given explicitly: mid-move
    observation plus full stop for rigid movement, quarters otherwise."""
    if scenario.movement.kind is MovementKind.RIGID:
        return RIGID_FRACTIONS
    return DEFAULT_FRACTIONS


# ------------------------------------------------------------- normalization

def _phase_points(robot) -> list[Point]:
    phase = robot.phase
    points = [robot.position]
    if isinstance(phase, Looked):
        points += [phase.snapshot.me_position, phase.snapshot.other_position]
    elif isinstance(phase, Computed):
        points.append(phase.destination)
    elif isinstance(phase, Moving):
        points += [phase.origin, phase.target]
    return points


def _all_points(config: Configuration) -> list[Point]:
    points: list[Point] = []
    for robot in config.robots:
        points.extend(_phase_points(robot))
    return points


def _within_step_ball(config: Configuration, delta: Fraction) -> bool:
    """True when every recorded point (positions, pending destinations, move
    segments, snapshot contents) fits strictly inside a ball of diameter
    `delta`. From such a state every distance any future compute can observe
    stays below delta, every ordered move completes in full, and the hull
    never grows again - so the dynamics are scale-free from here on."""
    points = _all_points(config)
    delta2 = delta * delta
    for i, p in enumerate(points):
        for q in points[i + 1:]:
            if distance_squared(p, q) >= delta2:
                return False
    return True


def config_key(config: Configuration, scale_free: bool, delta: Fraction | None = None) -> tuple:
    """Canonical form of a configuration modulo translation (and modulo
    uniform scaling when the future is scale-free). Two configurations with
    equal keys admit a similarity map between them, enabled-event lists
    included, so their futures are isomorphic walk for walk.

    `scale_free` marks dynamics that never compare a length against delta
    (the basic rule under rigid movement). With a delta present, scaling is
    additionally sound once the whole state fits inside the step ball; the
    key is tagged with the mode so the two normalizations never collide."""
    mode = "scaled" if scale_free else "abs"
    if not scale_free and delta is not None and _within_step_ball(config, delta):
        scale_free = True
        mode = "ball"
    anchor = config.robots[0].position
    unit = Fraction(1)
    if scale_free:
        span2 = config.distance_squared()
        if span2 > 0:
            unit = exact_sqrt(span2)
            if unit is None:
                raise ValueError("scale normalization needs a rational inter-robot distance")
        else:
            unit = None
            for robot in config.robots:
                for p in _phase_points(robot):
                    for coord in (p.x - anchor.x, p.y - anchor.y):
                        if coord != 0:
                            unit = abs(coord)
                            break
                    if unit is not None:
                        break
                if unit is not None:
                    break
            if unit is None:
                unit = Fraction(1)

    def norm(p: Point) -> tuple[Fraction, Fraction]:
        return ((p.x - anchor.x) / unit, (p.y - anchor.y) / unit)

    parts = []
    for robot in config.robots:
        phase = robot.phase
        if isinstance(phase, Idle):
            detail: tuple = ("i",)
        elif isinstance(phase, Looked):
            snap = phase.snapshot
            detail = (
                "l",
                norm(snap.me_position),
                snap.me_light,
                norm(snap.other_position),
                snap.other_light,
            )
        elif isinstance(phase, Computed):
            detail = ("c", norm(phase.destination))
        else:
            detail = ("m", norm(phase.origin), norm(phase.target), phase.observed_fraction)
        parts.append((robot.light, norm(robot.position), detail))
    return (mode, tuple(parts))


# -------------------------------------------------------------------- result

@dataclass(frozen=True, slots=True)
class Lasso:
    """An infinite-run witness: after `prefix`, the `loop` choices repeat
    forever; each iteration multiplies the inter-robot distance by
    `contraction` (exactly)."""

    prefix: tuple[EventChoice, ...]
    loop: tuple[EventChoice, ...]
    contraction: Fraction
    start_distance_squared: Fraction
    start_lights: tuple[Color, Color]


@dataclass(frozen=True, slots=True)
class ExploreStats:
    nodes: int
    edges: int
    terminal_nodes: int
    open_nodes: int
    max_depth_reached: int
    closed: bool


@dataclass(frozen=True, slots=True)
class CycleStartSummary:
    node_id: int
    depth: int
    lights: tuple[Color, Color]
    distance_squared: Fraction
    is_root: bool


class ExploreOutcome(str, Enum):
    ALL_RENDEZVOUS = "all_rendezvous"
    COUNTEREXAMPLE = "counterexample"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class ExploreResult:
    outcome: ExploreOutcome
    stats: ExploreStats
    lasso: Lasso | None
    milestone_failures: tuple[str, ...]
    cycle_start_nodes: tuple[CycleStartSummary, ...]


# ------------------------------------------------------------------ explorer

@dataclass(slots=True)
class _Node:
    nid: int
    config: Configuration
    fairness: FairnessState
    milestone: int
    depth: int
    parent: int | None
    parent_choice: EventChoice | None
    terminal: bool
    expanded: bool = False


_AWAIT_SYNC, _AWAIT_BAND, _DONE = 0, 1, 2


class _Explorer:
    def __init__(
        self,
        scenario: Scenario,
        fraction_set: tuple[Fraction, ...],
        max_depth: int,
        max_nodes: int,
        track_milestones: bool,
    ) -> None:
        scenario.validate()
        self.scenario = scenario
        self.fraction_set = fraction_set
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.scale_free = (
            scenario.algorithm is Algorithm.RENDEZVOUS
            and scenario.movement.kind is MovementKind.RIGID
        )
        self.d0_squared = distance_squared(*scenario.positions)
        delta = scenario.movement.delta
        self.track_milestones = (
            track_milestones
            and scenario.algorithm is Algorithm.RENDEZVOUS_WITH_DELTA
            and self.d0_squared > 4 * delta * delta
        )
        self.delta = delta
        self.nodes: list[_Node] = []
        self.index: dict[tuple, int] = {}
        self.edges: dict[int, list[tuple[EventChoice, int]]] = {}
        self.milestone_failures: list[str] = []
        self.budget_exceeded = False

    def _milestone_step(self, flag: int, config: Configuration) -> int:
        if not self.track_milestones or flag == _DONE:
            return flag
        if not is_cycle_start(config, self.scenario.algorithm):
            return flag
        lights = config.lights()
        d2 = config.distance_squared()
        delta2 = self.delta * self.delta
        if flag == _AWAIT_SYNC and lights == (Color.B, Color.B):
            if d2 != self.d0_squared:
                self.milestone_failures.append(
                    f"all-B cycle start at changed distance^2 {d2} (expected {self.d0_squared})"
                )
            return _AWAIT_BAND
        if flag == _AWAIT_BAND and lights == (Color.A, Color.A):
            if not (delta2 <= d2 <= 4 * delta2):
                self.milestone_failures.append(
                    f"all-A cycle start outside the step band: distance^2 {d2}"
                )
            return _DONE
        return flag

    def _intern(
        self,
        config: Configuration,
        fairness: FairnessState,
        milestone: int,
        depth: int,
        parent: int | None,
        parent_choice: EventChoice | None,
    ) -> tuple[int, bool]:
        milestone = self._milestone_step(milestone, config)
        key = (config_key(config, self.scale_free, self.delta), fairness.since_cycle, milestone)
        nid = self.index.get(key)
        if nid is not None:
            return nid, False
        terminal = is_rendezvous_stable(config, self.scenario.algorithm)
        if terminal and self.track_milestones and milestone != _DONE:
            self.milestone_failures.append(
                f"run reached stable rendezvous at depth {depth} without passing the milestones"
            )
        nid = len(self.nodes)
        self.nodes.append(
            _Node(nid, config, fairness, milestone, depth, parent, parent_choice, terminal)
        )
        self.index[key] = nid
        return nid, True

    def build(self) -> None:
        scenario = self.scenario
        root_cfg = initial_configuration(scenario)
        root, _ = self._intern(root_cfg, FairnessState(), _AWAIT_SYNC, 0, None, None)
        queue = deque([root])
        while queue:
            nid = queue.popleft()
            node = self.nodes[nid]
            if node.terminal or node.depth >= self.max_depth:
                continue
            if len(self.nodes) >= self.max_nodes:
                self.budget_exceeded = True
                break
            enabled = enabled_events(
                node.config, scenario.scheduler, scenario.movement, scenario.algorithm,
                self.fraction_set, scenario.fairness, node.fairness,
            )
            out = []
            for choice in enabled:
                child_cfg = apply_event(
                    node.config, choice, scenario.scheduler, scenario.movement,
                    scenario.algorithm, enabled=enabled,
                )
                child_fair = advance_fairness(node.fairness, choice, child_cfg)
                cid, fresh = self._intern(
                    child_cfg, child_fair, node.milestone, node.depth + 1, nid, choice
                )
                out.append((choice, cid))
                if fresh:
                    queue.append(cid)
            self.edges[nid] = out
            node.expanded = True

    # ---------------------------------------------------------------- cycles

    def _cycles(self) -> Iterator[list[int]]:
        """Yield cycles (as node-id lists) found by iterative DFS."""
        WHITE, GRAY, BLACK = 0, 1, 2
        color = [WHITE] * len(self.nodes)
        stack: list[tuple[int, Iterator]] = []
        on_stack: list[int] = []
        pos_on_stack: dict[int, int] = {}

        def push(nid: int):
            color[nid] = GRAY
            pos_on_stack[nid] = len(on_stack)
            on_stack.append(nid)
            stack.append((nid, iter(self.edges.get(nid, ()))))

        push(0)
        while stack:
            nid, it = stack[-1]
            advanced = False
            for _choice, cid in it:
                if color[cid] == GRAY:
                    yield on_stack[pos_on_stack[cid]:]
                elif color[cid] == WHITE:
                    push(cid)
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                on_stack.pop()
                pos_on_stack.pop(nid)
                color[nid] = BLACK

    def _choice_between(self, src: int, dst: int) -> EventChoice:
        for choice, cid in self.edges.get(src, ()):
            if cid == dst:
                return choice
        raise KeyError(f"no edge {src}->{dst}")

    def _path_from_root(self, nid: int) -> list[EventChoice]:
        choices = []
        node = self.nodes[nid]
        while node.parent is not None:
            choices.append(node.parent_choice)
            node = self.nodes[node.parent]
        choices.reverse()
        return choices

    def _rotate_cycle(self, cycle: list[int]) -> list[int]:
        def score(nid: int) -> tuple:
            node = self.nodes[nid]
            cs = is_cycle_start(node.config, self.scenario.algorithm)
            bb = node.config.lights() == (Color.B, Color.B)
            positive = node.config.distance_squared() > 0
            return (not (cs and bb and positive), not (cs and positive), not positive)

        best = min(range(len(cycle)), key=lambda i: score(cycle[i]))
        return cycle[best:] + cycle[:best]

    def _validate(self, cycle: list[int]) -> Lasso | None:
        cycle = self._rotate_cycle(cycle)
        entry = cycle[0]
        entry_node = self.nodes[entry]
        if entry_node.config.distance_squared() == 0:
            return None
        prefix = tuple(self._path_from_root(entry))
        loop = tuple(
            self._choice_between(cycle[i], cycle[(i + 1) % len(cycle)])
            for i in range(len(cycle))
        )
        probe = replace(
            self.scenario,
            strategy=Scripted(prefix + loop + loop, fractions=self.fraction_set),
            max_events=len(prefix) + 2 * len(loop),
        )
        try:
            trace = run(probe, stop_on_rendezvous=False)
        except Exception:
            return None
        if len(trace.steps) != probe.max_events:
            return None
        configs = trace.configs()
        c_start = configs[len(prefix)]
        c_once = configs[len(prefix) + len(loop)]
        c_twice = configs[len(prefix) + 2 * len(loop)]
        k_start = config_key(c_start, self.scale_free, self.delta)
        if config_key(c_once, self.scale_free, self.delta) != k_start:
            return None
        if config_key(c_twice, self.scale_free, self.delta) != k_start:
            return None
        d1, d2, d3 = (c.distance_squared() for c in (c_start, c_once, c_twice))
        if d1 == 0:
            return None
        ratio2 = d2 / d1
        if ratio2 > 1:
            return None
        if d3 != d2 * ratio2:
            return None
        contraction = exact_sqrt(ratio2)
        if contraction is None:
            return None
        return Lasso(
            prefix=prefix,
            loop=loop,
            contraction=contraction,
            start_distance_squared=d1,
            start_lights=c_start.lights(),
        )

    # ----------------------------------------------------------------- report

    def result(self) -> ExploreResult:
        lasso = None
        saw_cycle = False
        for count, cycle in enumerate(self._cycles()):
            saw_cycle = True
            lasso = self._validate(cycle)
            if lasso is not None or count >= 50:
                break
        open_nodes = sum(
            1 for n in self.nodes if not n.terminal and not n.expanded
        )
        stats = ExploreStats(
            nodes=len(self.nodes),
            edges=sum(len(v) for v in self.edges.values()),
            terminal_nodes=sum(1 for n in self.nodes if n.terminal),
            open_nodes=open_nodes,
            max_depth_reached=max((n.depth for n in self.nodes), default=0),
            closed=open_nodes == 0 and not self.budget_exceeded,
        )
        summaries = tuple(
            CycleStartSummary(
                n.nid, n.depth, n.config.lights(), n.config.distance_squared(), n.nid == 0
            )
            for n in self.nodes
            if is_cycle_start(n.config, self.scenario.algorithm)
        )
        if lasso is not None:
            outcome = ExploreOutcome.COUNTEREXAMPLE
        elif saw_cycle or not stats.closed:
            outcome = ExploreOutcome.UNKNOWN
        else:
            outcome = ExploreOutcome.ALL_RENDEZVOUS
        return ExploreResult(
            outcome=outcome,
            stats=stats,
            lasso=lasso,
            milestone_failures=tuple(self.milestone_failures),
            cycle_start_nodes=summaries,
        )


def explore_all(
    scenario: Scenario,
    fraction_set: tuple[Fraction, ...] | None = None,
    max_depth: int = 48,
    max_nodes: int = 400_000,
    track_milestones: bool = True,
) -> ExploreResult:
    """Explore every adversary choice from the scenario's initial state.

    ALL_RENDEZVOUS means the reachable state graph closed without cycles:
    every fair run at this fraction discretization rendezvouses.
    COUNTEREXAMPLE carries a replay-validated lasso. UNKNOWN means the
    depth or node budget cut the search (or a cycle resisted validation);
    no claim is made.
    """
    explorer = _Explorer(
        scenario,
        tuple(fraction_set) if fraction_set else default_fraction_set(scenario),
        max_depth,
        max_nodes,
        track_milestones,
    )
    explorer.build()
    return explorer.result()


def find_lasso(
    scenario: Scenario,
    fraction_set: tuple[Fraction, ...] | None = None,
    max_depth: int = 48,
    max_nodes: int = 400_000,
) -> Lasso | None:
    """Search for an infinite-run witness; None when the explored space has
    no validated loop."""
    return explore_all(
        scenario, fraction_set, max_depth, max_nodes, track_milestones=False
    ).lasso


# ----------------------------------------------------------- trace milestones

@dataclass(frozen=True, slots=True)
class MilestoneReport:
    """Where a known-delta run hit its two mode-change landmarks.

    Far starts (distance above twice the minimum step) must first show an
    all-B cycle start at the unchanged initial distance (`sync_index`),
    then an all-A cycle start with the distance inside [delta, 2*delta]
    (`band_index`). Closer starts enter their band directly and skip the
    corresponding landmarks.
    """

    regime: str
    sync_index: int | None
    band_index: int | None
    ok: bool
    notes: tuple[str, ...]
    failures: tuple[str, ...]


def check_phase_milestones(trace: Trace) -> MilestoneReport:
    scenario = trace.scenario
    if scenario.algorithm is not Algorithm.RENDEZVOUS_WITH_DELTA:
        raise ValueError("milestones are defined for the known-delta rule only")
    delta = scenario.movement.delta
    delta2 = delta * delta
    d0_squared = distance_squared(*scenario.positions)
    metrics = cycle_start_metrics(trace)
    notes: list[str] = []
    failures: list[str] = []

    if d0_squared < delta2:
        return MilestoneReport("near", None, None, True,
                               ("direct near-band entry; landmarks skipped",), ())
    if d0_squared <= 4 * delta2:
        return MilestoneReport("band", None, None, True,
                               ("direct middle-band entry; sync landmark skipped",), ())

    sync_index = None
    for index, lights, d2 in metrics:
        if lights == (Color.B, Color.B):
            sync_index = index
            if d2 != d0_squared:
                failures.append(
                    f"all-B cycle start at event {index} has distance^2 {d2}, expected {d0_squared}"
                )
            break
    if sync_index is None:
        failures.append("no all-B cycle start found")

    band_index = None
    if sync_index is not None:
        for index, lights, d2 in metrics:
            if index <= sync_index:
                continue
            if lights == (Color.A, Color.A):
                band_index = index
                if not (delta2 <= d2 <= 4 * delta2):
                    failures.append(
                        f"all-A cycle start at event {index} outside the step band: distance^2 {d2}"
                    )
                break
        if band_index is None:
            failures.append("no all-A cycle start found after the all-B one")

    return MilestoneReport(
        "far", sync_index, band_index, not failures, tuple(notes), tuple(failures)
    )
