// Transport plumbing. The console talks request/response in lockstep: one
// client message out, one server message in. A replay transport replays a
// recorded session and doubles as the conformance harness's fake server.

import type { ClientMessage, ServerMessage } from "./protocol.js";

export interface Transport {
  send(message: ClientMessage): Promise<ServerMessage>;
  close(): void;
}

export interface RecordedExchange {
  direction: "sent" | "received";
  message: ClientMessage | ServerMessage;
}

export class ReplayTransport implements Transport {
  private cursor = 0;

  constructor(private readonly log: RecordedExchange[]) {}

  send(message: ClientMessage): Promise<ServerMessage> {
    const sent = this.log[this.cursor];
    if (!sent || sent.direction !== "sent") {
      return Promise.reject(new Error(`replay out of sync at entry ${this.cursor}`));
    }
    if (JSON.stringify(sent.message) !== JSON.stringify(message)) {
      return Promise.reject(
        new Error(
          `replay mismatch at entry ${this.cursor}:\nrecorded ${JSON.stringify(sent.message)}\nsent     ${JSON.stringify(message)}`,
        ),
      );
    }
    const received = this.log[this.cursor + 1];
    if (!received || received.direction !== "received") {
      return Promise.reject(new Error(`replay missing reply at entry ${this.cursor + 1}`));
    }
    this.cursor += 2;
    return Promise.resolve(received.message as ServerMessage);
  }

  close(): void {
    this.cursor = this.log.length;
  }

  get exhausted(): boolean {
    return this.cursor >= this.log.length;
  }
}

interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}

export class WsTransport implements Transport {
  private queue: ((msg: ServerMessage) => void)[] = [];

  private constructor(private readonly socket: WebSocketLike) {
    socket.addEventListener("message", (event: { data: string }) => {
      const next = this.queue.shift();
      if (next) next(JSON.parse(event.data) as ServerMessage);
    });
  }

  static connect(url: string): Promise<WsTransport> {
    const ctor = (globalThis as any).WebSocket;
    if (!ctor) {
      return Promise.reject(new Error("no WebSocket implementation available"));
    }
    return new Promise((resolve, reject) => {
      const socket = new ctor(url) as WebSocketLike;
      socket.addEventListener("open", () => resolve(new WsTransport(socket)));
      socket.addEventListener("error", (event: unknown) => reject(event));
    });
  }

  send(message: ClientMessage): Promise<ServerMessage> {
    return new Promise((resolve) => {
      this.queue.push(resolve);
      this.socket.send(JSON.stringify(message));
    });
  }

  close(): void {
    this.socket.close();
  }
}
