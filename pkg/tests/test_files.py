import json
from fractions import Fraction as F

import pytest

from lumi.algorithms import Algorithm
from lumi.checker import find_lasso
from lumi.engine import (
    RoundRobin,
    Scenario,
    Scripted,
    SeededRandom,
    VerdictKind,
    run,
)
from lumi.files import (
    FileFormatError,
    choice_from_dict,
    choice_to_dict,
    load_trace,
    read_scenario,
    read_trace,
    scenario_from_dict,
    scenario_to_dict,
    write_scenario,
    write_trace,
    write_witness,
)
from lumi.geometry import point
from lumi.model import Color, RIGID, non_rigid_known_delta
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


def test_scenario_round_trip(tmp_path):
    cases = [
        scenario(),
        scenario(strategy=SeededRandom(42, (F(1, 2), F(1))), max_events=99),
        scenario(
            algorithm=Algorithm.RENDEZVOUS_WITH_DELTA,
            movement=non_rigid_known_delta(F(1, 3)),
            positions=(point(F(-1, 7)), point(F(2, 7))),
            fairness=FairnessBudget(24),
        ),
        scenario(strategy=Scripted((EventChoice(EventKind.LOOK, robot=0),))),
    ]
    for i, s in enumerate(cases):
        path = tmp_path / f"scenario-{i}.json"
        write_scenario(path, s)
        assert read_scenario(path) == s


def test_unknown_scenario_field_rejected():
    data = scenario_to_dict(scenario())
    data["colour"] = "mauve"
    with pytest.raises(FileFormatError, match="colour"):
        scenario_from_dict(data)


def test_missing_field_named():
    data = scenario_to_dict(scenario())
    del data["positions"]
    with pytest.raises(FileFormatError, match="positions"):
        scenario_from_dict(data)


def test_rationals_must_be_strings():
    data = scenario_to_dict(scenario())
    data["positions"][0]["x"] = 0.5
    with pytest.raises(FileFormatError, match="num/den"):
        scenario_from_dict(data)


def test_zero_delta_named_in_error():
    data = scenario_to_dict(scenario())
    data["movement"] = {"kind": "non_rigid", "delta": "0/1"}
    with pytest.raises(FileFormatError, match="delta must be positive"):
        scenario_from_dict(data)


def test_choice_round_trip():
    choices = [
        EventChoice(EventKind.LOOK, robot=0),
        EventChoice(EventKind.MOVE_END, robot=1, fraction=F(1, 2)),
        EventChoice(EventKind.MOVE_PROGRESS, robot=0, fraction=F(3, 4)),
        EventChoice(
            EventKind.SYNC_ROUND, round_robots=(0, 1), round_fractions=(F(1), None)
        ),
    ]
    for c in choices:
        assert choice_from_dict(choice_to_dict(c)) == c


def test_choice_validation_messages():
    with pytest.raises(FileFormatError, match="kind"):
        choice_from_dict({"robot": "r"})
    with pytest.raises(FileFormatError, match="fraction"):
        choice_from_dict({"kind": "move_end", "robot": "r"})
    with pytest.raises(FileFormatError, match="fraction"):
        choice_from_dict({"kind": "look", "robot": "r", "fraction": "1/2"})


def test_trace_round_trip(tmp_path):
    s = scenario(strategy=SeededRandom(5), max_events=48)
    trace = run(s)
    path = tmp_path / "run.ndjson"
    write_trace(path, trace)
    tf = read_trace(path)
    assert tf.scenario == s
    assert tf.events == trace.choices()
    assert tf.verdict == trace.verdict
    again = load_trace(path)
    assert [st.config for st in again.steps] == [st.config for st in trace.steps]


def test_load_trace_detects_tampering(tmp_path):
    s = scenario(strategy=SeededRandom(5), max_events=16)
    trace = run(s)
    path = tmp_path / "run.ndjson"
    write_trace(path, trace)
    lines = path.read_text().splitlines()
    record = json.loads(lines[2])
    record["positions"][0]["x"] = "99/1"
    lines[2] = json.dumps(record)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match="does not match replay"):
        load_trace(path)


def test_witness_round_trip(tmp_path):
    template = scenario(lights=(B, B), positions=(point(0), point(1)))
    lasso = find_lasso(template, fraction_set=(F(1, 2), F(1)), max_depth=48)
    path = tmp_path / "witness.ndjson"
    write_witness(path, template, lasso)
    tf = read_trace(path)
    assert tf.loop_start == len(lasso.prefix)
    assert tf.events == lasso.prefix + lasso.loop
    header = json.loads(path.read_text().splitlines()[0])
    assert F(header["contraction"]) == lasso.contraction
    # the engine replays the witness file verbatim
    replayed = load_trace(path)
    assert replayed.verdict.kind is VerdictKind.BOUND_EXHAUSTED
    assert replayed.verdict.final_distance_squared > 0
