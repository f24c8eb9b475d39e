"""Record protocol fixtures for the browser console's conformance tests.

Drives the live session server through the websocket endpooint and writes
every sent/received message, in order, to frontend/fixtures/. The
frontend replays the received messages through its view-model reducer and
must render exactly these payloads; its tests fail if either side drifts.

Run from the repository root: python scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "frontend" / "fixtures"


def build_witness_text() -> str:
    from fractions import Fraction as F

    from lumi.algorithms import Algorithm
    from lumi.checker import find_lasso
    from lumi.engine import Scenario
    from lumi.files import write_witness
    from lumi.geometry import point
    from lumi.model import Color, RIGID
    from lumi.scheduler import Scheduler
    import tempfile

    template = Scenario(
        Algorithm.RENDEZVOUS, Scheduler.ASYNC, RIGID,
        (Color.B, Color.B), (point(0), point(1)),
    )
    lasso = find_lasso(template, fraction_set=(F(1, 2), F(1)), max_depth=48)
    with tempfile.NamedTemporaryFile("r", suffix=".ndjson", delete=False) as handle:
        path = Path(handle.name)
    write_witness(path, template, lasso)
    text = path.read_text()
    path.unlink()
    return text


def fsync_scenario_dict() -> dict:
    from lumi.algorithms import Algorithm
    from lumi.engine import Scenario
    from lumi.files import scenario_to_dict
    from lumi.geometry import point
    from lumi.model import Color, RIGID
    from lumi.scheduler import Scheduler

    scenario = Scenario(
        Algorithm.RENDEZVOUS, Scheduler.FSYNC, RIGID,
        (Color.A, Color.A), (point(0), point(10)),
    )
    return scenario_to_dict(scenario)


class Recorder:
    def __init__(self, ws) -> None:
        self.ws = ws
        self.log: list[dict] = []

    def send(self, message: dict) -> dict:
        self.ws.send_text(json.dumps(message))
        self.log.append({"direction": "sent", "message": message})
        reply = json.loads(self.ws.receive_text())
        self.log.append({"direction": "received", "message": reply})
        return reply


def record_fsync(client: TestClient) -> list[dict]:
    with client.websocket_connect("/ws") as ws:
        rec = Recorder(ws)
        state = rec.send({"v": 1, "type": "create_session", "scenario": fsync_scenario_dict()})
        session_id = state["session_id"]
        for _ in range(2):
            event = state["enabled_events"][0]
            state = rec.send({
                "v": 1, "type": "choose_event", "session_id": session_id, "event": event,
            })
        return rec.log


def record_witness(client: TestClient, witness_text: str, steps: int) -> list[dict]:
    with client.websocket_connect("/ws") as ws:
        rec = Recorder(ws)
        state = rec.send({"v": 1, "type": "load_witness", "trace_text": witness_text})
        session_id = state["session_id"]
        loop = _witness_loop_events(witness_text, state["loop_start"])
        for i in range(steps):
            event = loop[i % len(loop)]
            state = rec.send({
                "v": 1, "type": "choose_event", "session_id": session_id, "event": event,
            })
        return rec.log


def _witness_loop_events(witness_text: str, loop_start: int) -> list[dict]:
    records = [json.loads(line) for line in witness_text.splitlines() if line.strip()]
    events = [r["event"] for r in records if r.get("type") == "event"]
    return events[loop_start:]


def main() -> int:
    from lumi.server import create_app

    FIXTURES.mkdir(parents=True, exist_ok=True)
    client = TestClient(create_app())
    witness_text = build_witness_text()

    (FIXTURES / "fsync_session.json").write_text(
        json.dumps(record_fsync(client), indent=2) + "\n"
    )
    loop_len = len(_witness_loop_events(witness_text, json.loads(
        witness_text.splitlines()[0])["loop_start"]))
    (FIXTURES / "witness_session.json").write_text(
        json.dumps(record_witness(client, witness_text, 10), indent=2) + "\n"
    )
    (FIXTURES / "witness_loop_twice.json").write_text(
        json.dumps(record_witness(client, witness_text, 2 * loop_len), indent=2) + "\n"
    )
    (FIXTURES / "witness.ndjson").write_text(witness_text)
    print(f"fixtures written to {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
