"""Interactive session server.

Speaks JSON messages (each carrying ``"v": 1``) over a WebSocket at /ws.
Clients create sessions from scenarios, pick one enabled event at a time,
undo, fork what-if branches, and load loop-witness trace files pre-seeded
at the loop start. Every state update carries the full renderable view:
exact rational coordinates plus 12-significant-digit decimals for display,
phases, the enabled-event palette, and the verdict so far. Sessions are
server-side so thin clients stay stateless; an illegal event choice gets
an error naming the violated constraint and leaves the session unchanged.

Client messages::

    {"v": 1, "type": "create_session", "scenario": {...}}
    {"v": 1, "type": "choose_event", "session_id": "...", "event": {...}}
    {"v": 1, "type": "undo", "session_id": "..."}
    {"v": 1, "type": "fork", "session_id": "..."}
    {"v": 1, "type": "load_witness", "trace_text": "..."}

Server messages: ``state_update`` (shape below) or ``error``.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import (
    Scenario,
    ScenarioError,
    Verdict,
    VerdictKind,
    initial_configuration,
    is_rendezvous_stable,
)
from .files import (
    FileFormatError,
    choice_from_dict,
    choice_to_dict,
    point_to_dict,
    scenario_from_dict,
    verdict_to_dict,
    _phase_to_dict,
)
from .geometry import rational_str
from .model import Configuration
from .scheduler import (
    EventChoice,
    FairnessState,
    advance_fairness,
    apply_event,
    enabled_events,
    explain_rejection,
)

log = logging.getLogger("lumi.server")

PROTOCOL_VERSION = 1


def _decimal(value) -> float:
    return float(f"{float(value):.12g}")


@dataclass
class _SessionNode:
    config: Configuration
    fairness: FairnessState
    choice_json: dict | None


@dataclass
class Session:
    session_id: str
    scenario: Scenario
    nodes: list[_SessionNode]
    branch: list[str] = field(default_factory=list)
    loop_start: int | None = None

    @property
    def config(self) -> Configuration:
        return self.nodes[-1].config

    @property
    def fairness(self) -> FairnessState:
        return self.nodes[-1].fairness

    def enabled(self) -> list[EventChoice]:
        return enabled_events(
            self.config, self.scenario.scheduler, self.scenario.movement,
            self.scenario.algorithm, self.scenario.fraction_set(),
            self.scenario.fairness, self.fairness,
        )

    def verdict_so_far(self) -> Verdict | None:
        config = self.config
        if is_rendezvous_stable(config, self.scenario.algorithm):
            return Verdict(
                VerdictKind.RENDEZVOUS, len(self.nodes) - 1, config.distance_squared(), True
            )
        return None


class SessionStore:
    def __init__(self) -> None:
        self.sessions: dict[str, Session] = {}
        self._ids = itertools.count(1)
        self.lock = asyncio.Lock()

    def new_id(self) -> str:
        return f"session-{next(self._ids)}"


def state_update(session: Session) -> dict:
    config = session.config
    robots = []
    for robot in config.robots:
        observable = robot.observable_position()
        robots.append(
            {
                "name": robot.name,
                "position": point_to_dict(robot.position),
                "position_decimal": {"x": _decimal(robot.position.x), "y": _decimal(robot.position.y)},
                "observable_position": point_to_dict(observable),
                "observable_decimal": {"x": _decimal(observable.x), "y": _decimal(observable.y)},
                "light": robot.light.value,
                "phase": _phase_to_dict(robot.phase),
            }
        )
    verdict = session.verdict_so_far()
    d2 = config.distance_squared()
    return {
        "v": PROTOCOL_VERSION,
        "type": "state_update",
        "session_id": session.session_id,
        "event_index": len(session.nodes) - 1,
        "robots": robots,
        "distance_squared": rational_str(d2),
        "distance_squared_decimal": _decimal(d2),
        "enabled_events": [choice_to_dict(c) for c in session.enabled()],
        "verdict": None if verdict is None else verdict_to_dict(verdict),
        "history_length": len(session.nodes) - 1,
        "can_undo": len(session.nodes) > 1,
        "branch": list(session.branch),
        "timeline": [n.choice_json for n in session.nodes[1:]],
        "loop_start": session.loop_start,
    }


def _error(message: str, constraint: str | None = None) -> dict:
    payload = {"v": PROTOCOL_VERSION, "type": "error", "message": message}
    if constraint is not None:
        payload["constraint"] = constraint
    return payload


def handle_message(store: SessionStore, message: dict) -> dict:
    """Apply one protocol message; returns the reply payload."""
    if not isinstance(message, dict):
        return _error("message must be a JSON object")
    if message.get("v") != PROTOCOL_VERSION:
        return _error(f"unsupported protocol version {message.get('v')!r}")
    mtype = message.get("type")

    if mtype == "create_session":
        try:
            scenario = scenario_from_dict(message.get("scenario"))
            scenario.validate()
        except (FileFormatError, ScenarioError) as exc:
            return _error(str(exc))
        session = Session(
            store.new_id(), scenario,
            [_SessionNode(initial_configuration(scenario), FairnessState(), None)],
        )
        session.branch = [session.session_id]
        store.sessions[session.session_id] = session
        return state_update(session)

    if mtype == "load_witness":
        text = message.get("trace_text")
        if not isinstance(text, str):
            return _error("load_witness needs the trace file text in 'trace_text'")
        try:
            session = _session_from_witness(store, text)
        except (FileFormatError, ScenarioError, ValueError) as exc:
            return _error(f"witness rejected: {exc}")
        store.sessions[session.session_id] = session
        return state_update(session)

    session = store.sessions.get(message.get("session_id"))
    if session is None:
        return _error(f"unknown session {message.get('session_id')!r}")

    if mtype == "choose_event":
        try:
            choice = choice_from_dict(message.get("event"))
        except FileFormatError as exc:
            return _error(str(exc))
        enabled = session.enabled()
        if choice not in enabled:
            constraint = explain_rejection(
                session.config, choice, session.scenario.scheduler,
                session.scenario.movement, session.scenario.fairness, session.fairness,
            )
            return _error("event is not enabled", constraint)
        config = apply_event(
            session.config, choice, session.scenario.scheduler,
            session.scenario.movement, session.scenario.algorithm, enabled=enabled,
        )
        fairness = advance_fairness(session.fairness, choice, config)
        session.nodes.append(_SessionNode(config, fairness, choice_to_dict(choice)))
        return state_update(session)

    if mtype == "undo":
        if len(session.nodes) <= 1:
            return _error("nothing to undo", "the session is at its initial configuration")
        session.nodes.pop()
        return state_update(session)

    if mtype == "fork":
        fork = Session(
            store.new_id(), session.scenario, list(session.nodes),
            branch=session.branch + [],
            loop_start=session.loop_start,
        )
        fork.branch = session.branch + [fork.session_id]
        store.sessions[fork.session_id] = fork
        return state_update(fork)

    return _error(f"unknown message type {mtype!r}")


def _session_from_witness(store: SessionStore, text: str) -> Session:
    """Build a session from a witness trace, stepped forward to the loop
    start so the loop can be walked manually."""
    import tempfile
    from pathlib import Path

    with tempfile.NamedTemporaryFile("w", suffix=".ndjson", delete=False) as handle:
        handle.write(text)
        path = Path(handle.name)
    try:
        from .files import read_trace

        tf = read_trace(path)
        scenario = tf.scenario
        scenario.validate()
        upto = tf.loop_start if tf.loop_start is not None else len(tf.events)
        nodes = [_SessionNode(initial_configuration(scenario), FairnessState(), None)]
        for choice in tf.events[:upto]:
            node = nodes[-1]
            enabled = enabled_events(
                node.config, scenario.scheduler, scenario.movement, scenario.algorithm,
                scenario.fraction_set(), scenario.fairness, node.fairness,
            )
            if choice not in enabled:
                raise ValueError("witness prefix is not replay-consistent")
            config = apply_event(
                node.config, choice, scenario.scheduler, scenario.movement,
                scenario.algorithm, enabled=enabled,
            )
            nodes.append(
                _SessionNode(config, advance_fairness(node.fairness, choice, config),
                             choice_to_dict(choice))
            )
        session = Session(store.new_id(), scenario, nodes, loop_start=tf.loop_start)
        session.branch = [session.session_id]
        return session
    finally:
        path.unlink(missing_ok=True)


def create_app() -> FastAPI:
    app = FastAPI(title="lumi session server")
    store = SessionStore()
    app.state.store = store

    @app.get("/health")
    async def health() -> dict:
        return {"ok": True, "v": PROTOCOL_VERSION, "sessions": len(store.sessions)}

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError as exc:
                    await ws.send_text(json.dumps(_error(f"not valid JSON: {exc}")))
                    continue
                async with store.lock:
                    reply = handle_message(store, message)
                await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            log.info("client disconnected")

    return app
