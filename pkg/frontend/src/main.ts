// Browser entry point: one socket, one rendering loop, messages handled in
// arrival order. The default session is the two-robot lights-A scenario on
// 0..10; paste a witness trace into the loader to step a recorded loop.

import { WsTransport, type Transport } from "./client.js";
import type { EventPayload, ServerMessage, StateUpdate } from "./protocol.js";
import { render } from "./render.js";
import {
  applyConnection,
  applyServer,
  initialViewState,
  type ViewState,
} from "./viewmodel.js";

const DEFAULT_SCENARIO = {
  algorithm: "rendezvous",
  scheduler: "fsync",
  movement: { kind: "rigid" },
  lights: ["A", "A"],
  positions: [
    { x: "0/1", y: "0/1" },
    { x: "10/1", y: "0/1" },
  ],
  strategy: { kind: "interactive" },
  max_events: 64,
  fairness_window: 16,
};

class Console {
  private view: ViewState = initialViewState();
  private zoom = 1;
  private transport: Transport | null = null;
  private busy = false;

  constructor(private readonly root: HTMLElement, private readonly url: string) {}

  async start(): Promise<void> {
    this.view = applyConnection(this.view, "connecting");
    this.draw();
    try {
      this.transport = await WsTransport.connect(this.url);
      this.view = applyConnection(this.view, "open");
      await this.send({ v: 1, type: "create_session", scenario: DEFAULT_SCENARIO });
    } catch {
      this.view = applyConnection(this.view, "closed");
      this.draw();
      setTimeout(() => this.start(), 2000);
    }
  }

  private async send(message: Parameters<Transport["send"]>[0]): Promise<void> {
    if (!this.transport || this.busy) return;
    this.busy = true;
    try {
      const reply: ServerMessage = await this.transport.send(message);
      this.view = applyServer(this.view, reply);
    } finally {
      this.busy = false;
      this.draw();
    }
  }

  loadWitness(text: string): void {
    void this.send({ v: 1, type: "load_witness", trace_text: text });
  }

  private draw(): void {
    render(this.root, this.view, { zoom: this.zoom }, {
      onChoose: (index) => {
        const entry = this.view.palette[index];
        if (entry && this.view.sessionId) {
          void this.send({
            v: 1,
            type: "choose_event",
            session_id: this.view.sessionId,
            event: entry.event as EventPayload,
          });
        }
      },
      onUndo: () => {
        if (this.view.sessionId) {
          void this.send({ v: 1, type: "undo", session_id: this.view.sessionId });
        }
      },
      onFork: () => {
        if (this.view.sessionId) {
          void this.send({ v: 1, type: "fork", session_id: this.view.sessionId });
        }
      },
      onZoom: (factor) => {
        this.zoom = Math.max(1, this.zoom * factor);
        this.draw();
      },
    });
  }
}

const root = document.getElementById("app");
if (root) {
  const url = new URLSearchParams(location.search).get("server")
    ?? `ws://${location.hostname || "127.0.0.1"}:8750/ws`;
  const console_ = new Console(root, url);
  void console_.start();
  const loader = document.getElementById("witness") as HTMLTextAreaElement | null;
  const button = document.getElementById("load-witness");
  if (loader && button) {
    button.addEventListener("click", () => console_.loadWitness(loader.value));
  }
}
