// Wire types for the session protocol (v1). The console is a pure client:
// it renders exactly what these payloads carry and computes nothing itself.

export const PROTOCOL_VERSION = 1;

export type Light = "A" | "B";

export interface RationalPoint {
  x: string; // "num/den"
  y: string;
}

export interface DecimalPoint {
  x: number;
  y: number;
}

export interface EventPayload {
  kind: string;
  robot?: string;
  fraction?: string;
  robots?: string[];
  fractions?: (string | null)[];
}

export interface PhasePayload {
  kind: "idle" | "looked" | "computed" | "moving";
  snapshot?: {
    me_position: RationalPoint;
    me_light: Light;
    other_position: RationalPoint;
    other_light: Light;
    known_delta: string | null;
  };
  destination?: RationalPoint;
  origin?: RationalPoint;
  target?: RationalPoint;
  observed_fraction?: string;
}

export interface RobotPayload {
  name: string;
  position: RationalPoint;
  position_decimal: DecimalPoint;
  observable_position: RationalPoint;
  observable_decimal: DecimalPoint;
  light: Light;
  phase: PhasePayload;
}

export interface VerdictPayload {
  kind: string;
  event_index: number | null;
  final_distance_squared: string | null;
  gathered_stable: boolean;
}

export interface StateUpdate {
  v: number;
  type: "state_update";
  session_id: string;
  event_index: number;
  robots: RobotPayload[];
  distance_squared: string;
  distance_squared_decimal: number;
  enabled_events: EventPayload[];
  verdict: VerdictPayload | null;
  history_length: number;
  can_undo: boolean;
  branch: string[];
  timeline: (EventPayload | null)[];
  loop_start: number | null;
}

export interface ErrorMessage {
  v: number;
  type: "error";
  message: string;
  constraint?: string;
}

export type ServerMessage = StateUpdate | ErrorMessage;

export interface CreateSession {
  v: number;
  type: "create_session";
  scenario: unknown;
}

export interface ChooseEvent {
  v: number;
  type: "choose_event";
  session_id: string;
  event: EventPayload;
}

export interface Undo {
  v: number;
  type: "undo";
  session_id: string;
}

export interface Fork {
  v: number;
  type: "fork";
  session_id: string;
}

export interface LoadWitness {
  v: number;
  type: "load_witness";
  trace_text: string;
}

export type ClientMessage = CreateSession | ChooseEvent | Undo | Fork | LoadWitness;
