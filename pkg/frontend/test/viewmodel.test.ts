// The console is a pure protocol client: identical message sequences fold
// to identical rendered states, and the palette is rebuilt from every
// state_update so it can never go stale.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import type { RecordedExchange } from "../src/client.js";
import type { ServerMessage, StateUpdate } from "../src/protocol.js";
import {
  applyConnection,
  applyServer,
  describeEvent,
  initialViewState,
  rationalToNumber,
  type ViewState,
} from "../src/viewmodel.js";

const FIXTURES = join(__dirname, "..", "fixtures");

function loadLog(name: string): RecordedExchange[] {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8"));
}

function received(log: RecordedExchange[]): ServerMessage[] {
  return log
    .filter((e) => e.direction === "received")
    .map((e) => e.message as ServerMessage);
}

function fold(messages: ServerMessage[]): ViewState[] {
  const states: ViewState[] = [];
  let state = initialViewState();
  for (const msg of messages) {
    state = applyServer(state, msg);
    states.push(state);
  }
  return states;
}

describe("view model reducer", () => {
  it("renders identical states for identical message sequences", () => {
    const messages = received(loadLog("fsync_session.json"));
    expect(fold(messages)).toEqual(fold(messages));
  });

  it("copies every rendered field from the payload", () => {
    for (const name of ["fsync_session.json", "witness_session.json"]) {
      for (const msg of received(loadLog(name))) {
        if (msg.type !== "state_update") continue;
        const view = applyServer(initialViewState(), msg);
        expect(view.sessionId).toBe(msg.session_id);
        expect(view.eventIndex).toBe(msg.event_index);
        expect(view.distanceSquared).toBe(msg.distance_squared);
        expect(view.distanceSquaredDecimal).toBe(msg.distance_squared_decimal);
        expect(view.canUndo).toBe(msg.can_undo);
        expect(view.branch).toEqual(msg.branch);
        expect(view.loopStart).toBe(msg.loop_start);
        expect(view.robots.map((r) => r.light)).toEqual(msg.robots.map((r) => r.light));
        expect(view.robots.map((r) => r.x)).toEqual(msg.robots.map((r) => r.position.x));
        expect(view.robots.map((r) => r.phaseBadge.toLowerCase())).toEqual(
          msg.robots.map((r) => r.phase.kind),
        );
      }
    }
  });

  it("rebuilds the palette from every state update", () => {
    const messages = received(loadLog("witness_session.json"));
    let state = initialViewState();
    for (const msg of messages) {
      state = applyServer(state, msg);
      if (msg.type !== "state_update") continue;
      expect(state.palette.map((p) => p.event)).toEqual(msg.enabled_events);
      expect(state.palette.map((p) => p.label)).toEqual(
        msg.enabled_events.map(describeEvent),
      );
    }
  });

  it("keeps the session view on errors and surfaces the constraint verbatim", () => {
    const messages = received(loadLog("fsync_session.json"));
    const state = fold(messages).at(-1)!;
    const error: ServerMessage = {
      v: 1,
      type: "error",
      message: "event is not enabled",
      constraint: "stop violates minimum distance delta",
    };
    const after = applyServer(state, error);
    expect(after.lastError).toBe("event is not enabled");
    expect(after.lastConstraint).toBe("stop violates minimum distance delta");
    expect({ ...after, lastError: null, lastConstraint: null }).toEqual(state);
  });

  it("shows a reconnect banner when the socket drops", () => {
    const state = applyConnection(initialViewState(), "closed");
    expect(state.banner).toMatch(/reconnect/);
    expect(applyConnection(state, "open").banner).toBeNull();
  });

  it("matches the recorded hand-traced run: midpoint meet then light flips", () => {
    const updates = received(loadLog("fsync_session.json")).filter(
      (m): m is StateUpdate => m.type === "state_update",
    );
    expect(updates).toHaveLength(3);
    const [start, met, flipped] = updates.map((m) => applyServer(initialViewState(), m));
    expect(start.robots.map((r) => r.x)).toEqual(["0/1", "10/1"]);
    expect(start.robots.map((r) => r.light)).toEqual(["A", "A"]);
    expect(met.robots.map((r) => r.x)).toEqual(["5/1", "5/1"]);
    expect(met.robots.map((r) => r.light)).toEqual(["B", "B"]);
    expect(met.verdict).toBe("rendezvous @ event 1");
    expect(flipped.robots.map((r) => r.light)).toEqual(["A", "A"]);
    expect(flipped.verdict).toBe("rendezvous @ event 2");
    expect(fold(updates)).toMatchSnapshot();
  });

  it("walking the witness loop twice contracts the gap readout twice", () => {
    const updates = received(loadLog("witness_loop_twice.json")).filter(
      (m): m is StateUpdate => m.type === "state_update",
    );
    const loopLength = (updates.length - 1) / 2;
    const gaps = [0, loopLength, 2 * loopLength].map((i) =>
      rationalToNumber(updates[i].distance_squared),
    );
    const ratio = gaps[1] / gaps[0];
    expect(ratio).toBeLessThan(1);
    expect(gaps[2] / gaps[1]).toBeCloseTo(ratio, 12);
    const lightsAt = (i: number) => updates[i].robots.map((r) => r.light);
    expect(lightsAt(0)).toEqual(["B", "B"]);
    expect(lightsAt(loopLength)).toEqual(lightsAt(0));
  });
});
