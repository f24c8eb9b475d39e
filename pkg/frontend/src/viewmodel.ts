// Pure view-model reducer. Every rendered field is copied from the last
// state_update; the palette is rebuilt from scratch on each message so it
// can never go stale. Identical message sequences fold to identical states.

import type {
  EventPayload,
  PhasePayload,
  RobotPayload,
  ServerMessage,
  StateUpdate,
} from "./protocol.js";

export interface RobotGlyph {
  name: string;
  light: "A" | "B";
  x: string;
  y: string;
  xDecimal: number;
  yDecimal: number;
  observedXDecimal: number;
  observedYDecimal: number;
  phaseBadge: "Idle" | "Looked" | "Computed" | "Moving";
  pendingTarget: { x: number; y: number } | null;
}

export interface PaletteEntry {
  label: string;
  event: EventPayload;
}

export interface TimelineEntry {
  index: number;
  label: string;
}

export type Connection = "idle" | "connecting" | "open" | "closed";

export interface ViewState {
  connection: Connection;
  banner: string | null;
  sessionId: string | null;
  eventIndex: number;
  robots: RobotGlyph[];
  distanceSquared: string | null;
  distanceSquaredDecimal: number | null;
  palette: PaletteEntry[];
  timeline: TimelineEntry[];
  verdict: string | null;
  canUndo: boolean;
  branch: string[];
  loopStart: number | null;
  lastError: string | null;
  lastConstraint: string | null;
}

export function initialViewState(): ViewState {
  return {
    connection: "idle",
    banner: null,
    sessionId: null,
    eventIndex: 0,
    robots: [],
    distanceSquared: null,
    distanceSquaredDecimal: null,
    palette: [],
    timeline: [],
    verdict: null,
    canUndo: false,
    branch: [],
    loopStart: null,
    lastError: null,
    lastConstraint: null,
  };
}

export function describeEvent(event: EventPayload): string {
  if (event.kind === "sync_round") {
    const robots = (event.robots ?? []).join(",");
    const stops = (event.fractions ?? []).map((f) => f ?? "-").join(",");
    return `round {${robots}} stops ${stops}`;
  }
  const base = `${event.kind.replace("_", " ")} ${event.robot ?? "?"}`;
  return event.fraction ? `${base} @ ${event.fraction}` : base;
}

const BADGES: Record<PhasePayload["kind"], RobotGlyph["phaseBadge"]> = {
  idle: "Idle",
  looked: "Looked",
  computed: "Computed",
  moving: "Moving",
};

function glyph(robot: RobotPayload): RobotGlyph {
  let pendingTarget: RobotGlyph["pendingTarget"] = null;
  const phase = robot.phase;
  const asDecimal = (p: { x: string; y: string }) => ({
    x: rationalToNumber(p.x),
    y: rationalToNumber(p.y),
  });
  if (phase.kind === "computed" && phase.destination) {
    pendingTarget = asDecimal(phase.destination);
  } else if (phase.kind === "moving" && phase.target) {
    pendingTarget = asDecimal(phase.target);
  }
  return {
    name: robot.name,
    light: robot.light,
    x: robot.position.x,
    y: robot.position.y,
    xDecimal: robot.position_decimal.x,
    yDecimal: robot.position_decimal.y,
    observedXDecimal: robot.observable_decimal.x,
    observedYDecimal: robot.observable_decimal.y,
    phaseBadge: BADGES[phase.kind],
    pendingTarget,
  };
}

export function rationalToNumber(text: string): number {
  const [num, den] = text.split("/");
  return Number(num) / Number(den ?? "1");
}

function applyStateUpdate(state: ViewState, msg: StateUpdate): ViewState {
  return {
    ...state,
    sessionId: msg.session_id,
    eventIndex: msg.event_index,
    robots: msg.robots.map(glyph),
    distanceSquared: msg.distance_squared,
    distanceSquaredDecimal: msg.distance_squared_decimal,
    palette: msg.enabled_events.map((event) => ({
      label: describeEvent(event),
      event,
    })),
    timeline: msg.timeline
      .filter((e): e is EventPayload => e !== null)
      .map((event, i) => ({ index: i + 1, label: describeEvent(event) })),
    verdict:
      msg.verdict === null
        ? null
        : msg.verdict.kind === "rendezvous"
          ? `rendezvous @ event ${msg.verdict.event_index}`
          : msg.verdict.kind,
    canUndo: msg.can_undo,
    branch: [...msg.branch],
    loopStart: msg.loop_start,
    lastError: null,
    lastConstraint: null,
  };
}

export function applyServer(state: ViewState, msg: ServerMessage): ViewState {
  if (msg.type === "state_update") {
    return applyStateUpdate(state, msg);
  }
  return {
    ...state,
    lastError: msg.message,
    lastConstraint: msg.constraint ?? null,
  };
}

export function applyConnection(state: ViewState, connection: Connection): ViewState {
  const banner =
    connection === "closed"
      ? "connection lost - reconnecting; the session resumes by id"
      : connection === "connecting"
        ? "connecting..."
        : null;
  return { ...state, connection, banner };
}
