from fractions import Fraction as F

import pytest

from lumi.algorithms import Algorithm
from lumi.engine import (
    Exhaustive,
    RoundRobin,
    Scenario,
    ScenarioError,
    Scripted,
    SeededRandom,
    START_SENTINEL,
    Trace,
    VerdictKind,
    cycle_start_metrics,
    delta_guarantee_ok,
    distance_bounded_ok,
    fairness_violations,
    initial_configuration,
    is_rendezvous_stable,
    mismatch_commit_points,
    query_trace,
    replay_matches,
    resume,
    run,
    run_all,
    segment_containment_ok,
    stability_certificate,
)
from lumi.geometry import point
from lumi.model import Color, Configuration, IDLE, RIGID, RobotState, non_rigid, non_rigid_known_delta
from lumi.scheduler import EventChoice, EventKind, FairnessBudget, Scheduler

A, B = Color.A, Color.B


def scenario(**overrides) -> Scenario:
    base = dict(
        algorithm=Algorithm.RENDEZVOUS,
        scheduler=Scheduler.ASYNC,
        movement=RIGID,
        lights=(A, A),
        positions=(point(0), point(10)),
    )
    base.update(overrides)
    return Scenario(**base)


# --------------------------------------------------------------- validation

def test_zero_delta_rejected():
    with pytest.raises(ValueError, match="delta must be positive"):
        non_rigid(0)


def test_known_delta_rule_needs_known_delta_movement():
    s = scenario(algorithm=Algorithm.RENDEZVOUS_WITH_DELTA, movement=RIGID)
    with pytest.raises(ScenarioError, match="non_rigid_known_delta"):
        s.validate()


def test_irrational_initial_distance_rejected():
    s = scenario(positions=(point(0, 0), point(1, 1)))
    with pytest.raises(ScenarioError, match="rational"):
        s.validate()


def test_tiny_fairness_window_rejected():
    s = scenario(fairness=FairnessBudget(4))
    with pytest.raises(ScenarioError, match="fairness.window"):
        s.validate()


def test_exhaustive_strategy_cannot_drive_a_run():
    s = scenario(strategy=Exhaustive())
    with pytest.raises(ScenarioError, match="checker"):
        run(s)


# -------------------------------------------------------------------- runs

def test_fsync_reaches_stable_rendezvous_in_one_round():
    trace = run(scenario(scheduler=Scheduler.FSYNC))
    assert trace.verdict.kind is VerdictKind.RENDEZVOUS
    assert trace.verdict.event_index == 1
    assert trace.verdict.gathered_stable
    final = trace.steps[-1].config
    assert final.positions() == (point(5), point(5))
    assert final.lights() == (B, B)


def test_round_robin_async_rendezvous():
    trace = run(scenario())
    assert trace.verdict.kind is VerdictKind.RENDEZVOUS
    assert trace.steps[-1].config.positions() == (point(5), point(5))


def test_co_located_all_b_never_moves():
    s = scenario(lights=(B, B), positions=(point(3), point(3)))
    trace = run(s, stop_on_rendezvous=False)
    assert all(c.positions() == (point(3), point(3)) for c in trace.configs())


def test_co_located_start_is_immediately_stable():
    s = scenario(lights=(B, B), positions=(point(3), point(3)))
    trace = run(s)
    assert trace.verdict.kind is VerdictKind.RENDEZVOUS
    assert trace.verdict.event_index == 0
    assert not trace.steps


def test_starving_script_rejected_by_fairness():
    only_r = tuple(
        EventChoice(EventKind.SYNC_ROUND, round_robots=(0,), round_fractions=(f,))
        for f in [F(1)] * 20
    )
    s = scenario(
        scheduler=Scheduler.SSYNC,
        lights=(B, A),  # r's rounds are no-ops; s never gets activated
        strategy=Scripted(only_r),
        max_events=40,
    )
    from lumi.scheduler import IllegalEventError

    with pytest.raises(IllegalEventError, match="fairness|not enabled"):
        run(s)


def test_seeded_runs_are_deterministic():
    s = scenario(strategy=SeededRandom(7), max_events=48)
    t1, t2 = run(s), run(s)
    assert t1.choices() == t2.choices()
    assert [c.distance_squared() for c in t1.configs()] == [
        c.distance_squared() for c in t2.configs()
    ]


def test_bound_exhausted_reports_final_distance():
    s = scenario(strategy=SeededRandom(3), max_events=2)
    trace = run(s)
    assert trace.verdict.kind is VerdictKind.BOUND_EXHAUSTED
    assert trace.verdict.final_distance_squared == 100


# -------------------------------------------------------- stability queries

def test_stability_certificate_examples():
    cfg = Configuration(
        (RobotState(0, point(5), B, IDLE), RobotState(1, point(5), B, IDLE))
    )
    assert stability_certificate(cfg, Algorithm.RENDEZVOUS)
    cfg_aa = Configuration(
        (RobotState(0, point(5), A, IDLE), RobotState(1, point(5), A, IDLE))
    )
    assert stability_certificate(cfg_aa, Algorithm.RENDEZVOUS)
    apart = Configuration(
        (RobotState(0, point(0), B, IDLE), RobotState(1, point(5), B, IDLE))
    )
    with pytest.raises(ValueError):
        stability_certificate(apart, Algorithm.RENDEZVOUS)


def test_transient_co_location_is_not_rendezvous():
    # s holds a stale snapshot whose compute will move it away
    from lumi.model import Looked, Snapshot

    stale = Snapshot(point(5), A, point(0), A)
    cfg = Configuration(
        (RobotState(0, point(5), A, IDLE), RobotState(1, point(5), A, Looked(stale)))
    )
    assert not is_rendezvous_stable(cfg, Algorithm.RENDEZVOUS)


# ------------------------------------------------------------ trace queries

def fsync_trace() -> Trace:
    return run(scenario(scheduler=Scheduler.FSYNC))


def test_query_trace_sentinels():
    trace = fsync_trace()
    assert query_trace(trace, 0, EventKind.LOOK, 0, "before") == START_SENTINEL
    assert query_trace(trace, 0, EventKind.LOOK, 0, "after") == 1
    assert query_trace(trace, 0, EventKind.MOVE_END, len(trace.steps), "after") is None


def test_query_trace_matching_move_end():
    s = scenario(strategy=RoundRobin())
    trace = run(s)
    begin = query_trace(trace, 0, EventKind.MOVE_BEGIN, 0, "after")
    end = query_trace(trace, 0, EventKind.MOVE_END, begin, "after")
    assert begin is not None and end == begin + 1


def test_cycle_start_metrics_for_fsync_run():
    trace = fsync_trace()
    assert cycle_start_metrics(trace) == [
        (0, (A, A), F(100)),
        (1, (B, B), F(0)),
    ]


def test_metrics_on_empty_trace():
    s = scenario(lights=(B, B), positions=(point(3), point(3)))
    trace = run(s)
    assert cycle_start_metrics(trace) == [(0, (B, B), F(0))]


def test_mismatch_commit_points_found():
    # r looks+computes first (flips to B, stays... (A,A) flips to B and heads
    # to the midpoint); after r's comp, s's look sees differing lights with
    # nothing stale pending on r
    events = (
        EventChoice(EventKind.LOOK, robot=0),
        EventChoice(EventKind.COMP, robot=0),
        EventChoice(EventKind.LOOK, robot=1),
    )
    s = scenario(strategy=Scripted(events), max_events=3)
    trace = run(s, stop_on_rendezvous=False)
    assert mismatch_commit_points(trace) == [3]


# ------------------------------------------------------- invariant helpers

def test_invariant_helpers_on_random_runs():
    for seed in range(20):
        s = scenario(strategy=SeededRandom(seed), max_events=64)
        trace = run(s)
        assert segment_containment_ok(trace)
        assert distance_bounded_ok(trace)
        assert delta_guarantee_ok(trace)
        assert fairness_violations(trace) == []
        assert replay_matches(trace)


def test_non_rigid_runs_respect_delta():
    for seed in range(20):
        s = scenario(
            movement=non_rigid(1),
            strategy=SeededRandom(seed),
            positions=(point(0), point(4)),
            max_events=64,
        )
        trace = run(s)
        assert delta_guarantee_ok(trace)
        assert segment_containment_ok(trace)


def test_resume_extends_a_trace():
    s = scenario(strategy=SeededRandom(11), max_events=4)
    head = run(s)
    assert head.verdict.kind is VerdictKind.BOUND_EXHAUSTED
    full = resume(head, SeededRandom(12), 96)
    assert len(full.steps) >= len(head.steps)
    assert full.steps[: len(head.steps)] == head.steps
    assert full.verdict.kind is VerdictKind.RENDEZVOUS


def test_run_all_is_exhaustive_at_tiny_depth():
    s = scenario(max_events=3)
    traces = list(run_all(s, 3))
    # first event: two looks; then the enabled sets stay small but nonempty
    assert all(len(t.steps) <= 3 for t in traces)
    assert len({t.choices() for t in traces}) == len(traces)
    brute = 0

    def count(cfg, fairness, depth):
        nonlocal brute
        from lumi.scheduler import advance_fairness, apply_event, enabled_events

        if depth == 3 or is_rendezvous_stable(cfg, s.algorithm):
            brute += 1
            return
        enabled = enabled_events(
            cfg, s.scheduler, s.movement, s.algorithm, s.fraction_set(),
            s.fairness, fairness,
        )
        for choice in enabled:
            nxt = apply_event(cfg, choice, s.scheduler, s.movement, s.algorithm, enabled=enabled)
            count(nxt, advance_fairness(fairness, choice, nxt), depth + 1)

    from lumi.scheduler import FairnessState

    count(initial_configuration(s), FairnessState(), 0)
    assert brute == len(traces)
