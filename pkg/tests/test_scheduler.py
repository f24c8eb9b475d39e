from fractions import Fraction as F

import pytest

from lumi.algorithms import Algorithm
from lumi.engine import Scenario, initial_configuration
from lumi.geometry import point
from lumi.model import (
    Color,
    Computed,
    Configuration,
    IDLE,
    Idle,
    Looked,
    Moving,
    RIGID,
    RobotState,
    Snapshot,
    non_rigid,
)
from lumi.scheduler import (
    EventChoice,
    EventKind,
    FairnessBudget,
    FairnessState,
    IllegalEventError,
    Scheduler,
    advance_fairness,
    apply_event,
    enabled_events,
    explain_rejection,
    forced_robot,
    is_cycle_start,
)

A, B = Color.A, Color.B
BUDGET = FairnessBudget()
FRESH = FairnessState()
HALVES = (F(1, 2), F(1))


def config(r_pos, s_pos, r_light=A, s_light=A, r_phase=IDLE, s_phase=IDLE):
    return Configuration(
        (
            RobotState(0, point(r_pos), r_light, r_phase),
            RobotState(1, point(s_pos), s_light, s_phase),
        )
    )


def enabled(cfg, scheduler=Scheduler.ASYNC, movement=RIGID,
            algorithm=Algorithm.RENDEZVOUS, fractions=HALVES, fairness=FRESH):
    return enabled_events(cfg, scheduler, movement, algorithm, fractions, BUDGET, fairness)


def apply(cfg, choice, scheduler=Scheduler.ASYNC, movement=RIGID,
          algorithm=Algorithm.RENDEZVOUS, fractions=HALVES, fairness=FRESH):
    return apply_event(cfg, choice, scheduler, movement, algorithm,
                       fraction_set=fractions, budget=BUDGET, fairness=fairness)


def look(i):
    return EventChoice(EventKind.LOOK, robot=i)


def comp(i):
    return EventChoice(EventKind.COMP, robot=i)


def move_begin(i):
    return EventChoice(EventKind.MOVE_BEGIN, robot=i)


def move_end(i, f=F(1)):
    return EventChoice(EventKind.MOVE_END, robot=i, fraction=f)


# ------------------------------------------------------------ enabled events

def test_both_idle_offers_only_looks():
    assert enabled(config(0, 10)) == [look(0), look(1)]


def test_rigid_move_end_must_complete():
    moving = Moving(point(0), point(4), F(0))
    cfg = config(0, 10, r_phase=moving)
    choices = [c for c in enabled(cfg) if c.kind is EventKind.MOVE_END]
    assert choices == [move_end(0, F(1))]


def test_non_rigid_move_end_fractions_respect_minimum_distance():
    moving = Moving(point(0), point(4), F(0))
    cfg = config(0, 10, r_phase=moving)
    fractions = (F(1, 4), F(1, 2), F(3, 4), F(1))
    choices = [
        c.fraction
        for c in enabled(cfg, movement=non_rigid(1), fractions=fractions)
        if c.kind is EventKind.MOVE_END
    ]
    # displacement 4: every listed fraction travels at least delta=1
    assert choices == [F(1, 4), F(1, 2), F(3, 4), F(1)]
    choices = [
        c.fraction
        for c in enabled(cfg, movement=non_rigid(2), fractions=fractions)
        if c.kind is EventKind.MOVE_END
    ]
    # delta=2: a quarter stop would only travel 1
    assert choices == [F(1, 2), F(3, 4), F(1)]


def test_short_moves_always_complete_under_non_rigid():
    moving = Moving(point(0), point(F(1, 2)), F(0))
    cfg = config(0, 10, r_phase=moving)
    choices = [
        c.fraction
        for c in enabled(cfg, movement=non_rigid(1), fractions=(F(1, 2), F(1)))
        if c.kind is EventKind.MOVE_END
    ]
    assert choices == [F(1)]


def test_move_progress_strictly_increases():
    moving = Moving(point(0), point(4), F(1, 2))
    cfg = config(0, 10, r_phase=moving)
    progress = [c.fraction for c in enabled(cfg) if c.kind is EventKind.MOVE_PROGRESS]
    assert progress == [F(1)]
    stops = [c.fraction for c in enabled(cfg) if c.kind is EventKind.MOVE_END]
    assert stops == [F(1)]


def test_lc_atomic_offers_fused_look_comp():
    events = enabled(config(0, 10), scheduler=Scheduler.LC_ATOMIC_ASYNC)
    assert events == [
        EventChoice(EventKind.LOOK_COMP, robot=0),
        EventChoice(EventKind.LOOK_COMP, robot=1),
    ]


def test_move_atomic_jumps_from_computed():
    cfg = config(0, 10, r_phase=Computed(point(5)))
    events = enabled(cfg, scheduler=Scheduler.MOVE_ATOMIC_ASYNC)
    assert [c for c in events if c.robot == 0] == [move_end(0, F(1))]


def test_fsync_activates_both_robots():
    events = enabled(config(0, 10), scheduler=Scheduler.FSYNC)
    assert len(events) == 1
    (round_,) = events
    assert round_.kind is EventKind.SYNC_ROUND
    assert round_.round_robots == (0, 1)


def test_ssync_offers_every_nonempty_subset():
    events = enabled(config(0, 10), scheduler=Scheduler.SSYNC)
    subsets = {c.round_robots for c in events}
    assert subsets == {(0,), (1,), (0, 1)}


# ------------------------------------------------------------------ fairness

def test_starving_robot_gets_forced():
    cfg = config(0, 10)
    fairness = FairnessState((0, 9))
    assert forced_robot(cfg, Scheduler.ASYNC, BUDGET, fairness) == 1
    events = enabled(cfg, fairness=fairness)
    assert events == [look(1)]


def test_forcing_excludes_observation_stalls():
    # r is moving (one event from completing); forcing starts once its slack
    # drops to its own remaining plus the other robot's worst case (1 + 4)
    moving = Moving(point(0), point(4), F(0))
    cfg = config(0, 10, r_phase=moving)
    fairness = FairnessState((12, 0))
    events = enabled(cfg, fairness=fairness)
    assert all(c.kind is not EventKind.MOVE_PROGRESS for c in events)
    assert all(c.robot == 0 for c in events)


def test_ssync_forcing_restricts_subsets():
    cfg = config(0, 10)
    fairness = FairnessState((0, 15))
    events = enabled(cfg, scheduler=Scheduler.SSYNC, fairness=fairness)
    assert {c.round_robots for c in events} == {(1,), (0, 1)}


def test_fairness_counters_reset_on_completion():
    cfg = config(0, 10, r_light=B, s_light=B)
    after_look = apply(cfg, look(0))
    f1 = advance_fairness(FRESH, look(0), after_look)
    assert f1.since_cycle == (1, 1)
    # (B,B) compute flips the light and stays: the cycle completes
    after_comp = apply(after_look, comp(0))
    f2 = advance_fairness(f1, comp(0), after_comp)
    assert f2.since_cycle == (0, 2)
    assert isinstance(after_comp.robots[0].phase, Idle)
    assert after_comp.robots[0].light is A


# ------------------------------------------------------- event application

def test_hand_executed_run_both_reach_midpoint():
    # both lights A at 0 and 10; both look before either computes, then both
    # move in full: they meet at 5 with both lights showing B
    cfg = config(0, 10)
    cfg = apply(cfg, look(0))
    cfg = apply(cfg, look(1))
    cfg = apply(cfg, comp(0))
    assert cfg.robots[0].light is B and cfg.robots[0].phase == Computed(point(5))
    cfg = apply(cfg, comp(1))
    assert cfg.robots[1].light is B and cfg.robots[1].phase == Computed(point(5))
    cfg = apply(cfg, move_begin(0))
    cfg = apply(cfg, move_end(0))
    cfg = apply(cfg, move_begin(1))
    cfg = apply(cfg, move_end(1))
    assert cfg.positions() == (point(5), point(5))
    assert cfg.lights() == (B, B)
    assert cfg.event_index == 8


def test_stale_snapshot_chase():
    # r looks and computes first; s then sees r's new light B and heads for
    # r's position instead of the midpoint
    cfg = config(0, 10)
    cfg = apply(cfg, look(0))
    cfg = apply(cfg, comp(0))
    cfg = apply(cfg, look(1))
    cfg = apply(cfg, comp(1))
    assert cfg.robots[1].light is A
    assert cfg.robots[1].phase == Computed(point(0))


def test_look_observes_mid_move_position():
    cfg = config(0, 10)
    cfg = apply(cfg, look(0))
    cfg = apply(cfg, comp(0))          # r: light B, heading to 5
    cfg = apply(cfg, move_begin(0))
    cfg = apply(cfg, EventChoice(EventKind.MOVE_PROGRESS, robot=0, fraction=F(1, 2)))
    cfg = apply(cfg, look(1))
    snap = cfg.robots[1].phase.snapshot
    assert snap.other_position == point(F(5, 2))
    assert snap.other_light is B


def test_no_move_compute_skips_the_move():
    cfg = config(0, 10, r_light=B, s_light=A)
    cfg = apply(cfg, look(0))
    cfg = apply(cfg, comp(0))  # stay
    assert isinstance(cfg.robots[0].phase, Idle)
    assert cfg.positions() == (point(0), point(10))


def test_sync_round_shares_the_pre_round_snapshot():
    cfg = config(0, 10)
    round_ = enabled(cfg, scheduler=Scheduler.FSYNC)[0]
    after = apply(cfg, round_, scheduler=Scheduler.FSYNC)
    assert after.positions() == (point(5), point(5))
    assert after.lights() == (B, B)


def test_ssync_single_robot_round():
    cfg = config(0, 10, r_light=B, s_light=B)
    round_ = next(
        c for c in enabled(cfg, scheduler=Scheduler.SSYNC) if c.round_robots == (0,)
    )
    after = apply(cfg, round_, scheduler=Scheduler.SSYNC)
    assert after.lights() == (A, B)
    assert after.positions() == (point(0), point(10))


def test_illegal_event_rejected():
    cfg = config(0, 10)
    with pytest.raises(IllegalEventError):
        apply(cfg, comp(0))  # nothing looked yet
    with pytest.raises(IllegalEventError):
        apply(cfg, move_end(0))


def test_move_atomic_apply():
    cfg = config(0, 10, r_phase=Computed(point(5)))
    after = apply(cfg, move_end(0), scheduler=Scheduler.MOVE_ATOMIC_ASYNC)
    assert after.robots[0].position == point(5)
    assert isinstance(after.robots[0].phase, Idle)


# ------------------------------------------------------------- cycle starts

def test_both_idle_is_a_cycle_start():
    assert is_cycle_start(config(0, 10), Algorithm.RENDEZVOUS)


def test_moving_is_not_a_cycle_start():
    cfg = config(0, 10, r_phase=Moving(point(0), point(5), F(0)))
    assert not is_cycle_start(cfg, Algorithm.RENDEZVOUS)


def test_pending_noop_compute_normalizes_away():
    # a B robot that saw (B, other A) will neither change light nor move
    noop_snap = Snapshot(point(0), B, point(10), A)
    cfg = config(0, 10, r_light=B, s_light=A, r_phase=Looked(noop_snap))
    assert is_cycle_start(cfg, Algorithm.RENDEZVOUS)


def test_pending_effective_compute_blocks_cycle_start():
    active_snap = Snapshot(point(0), A, point(10), A)
    cfg = config(0, 10, r_phase=Looked(active_snap))
    assert not is_cycle_start(cfg, Algorithm.RENDEZVOUS)


# ------------------------------------------------------- rejection messages

def test_rejection_names_the_minimum_distance():
    moving = Moving(point(0), point(4), F(0))
    cfg = config(0, 10, r_phase=moving)
    reason = explain_rejection(
        cfg, move_end(0, F(1, 8)), Scheduler.ASYNC, non_rigid(1), BUDGET, FRESH
    )
    assert reason == "stop violates minimum distance delta"


def test_rejection_names_fairness():
    cfg = config(0, 10)
    reason = explain_rejection(
        cfg, look(0), Scheduler.ASYNC, RIGID, BUDGET, FairnessState((0, 12))
    )
    assert "fairness" in reason


def test_rejection_names_rigidity():
    moving = Moving(point(0), point(4), F(0))
    cfg = config(0, 10, r_phase=moving)
    reason = explain_rejection(
        cfg, move_end(0, F(1, 2)), Scheduler.ASYNC, RIGID, BUDGET, FRESH
    )
    assert "rigid" in reason
