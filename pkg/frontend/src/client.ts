/** Request/reply plus event stream over one line-oriented connection.
 *
 * Both directions carry newline-delimited JSON.  A reply echoes the id
 * of the request it answers; anything carrying an "event" field is a
 * broadcast.  The transport is injected so tests can drive the client
 * with a scripted fake instead of a socket.
 */

import type { GatewayEvent, Op, Reply } from "./types";

export type Transport = {
  send(line: string): void;
  close(): void;
};

export type ClientHooks = {
  onEvent?: (ev: GatewayEvent) => void;
  onDown?: (reason: string) => void;
};

type Waiter = { resolve: (reply: Reply) => void; reject: (error: Error) => void };

export class GatewayClient {
  private transport: Transport | null = null;
  private pending = new Map<number, Waiter>();
  private nextId = 1;

  constructor(private hooks: ClientHooks = {}) {}

  get connected(): boolean {
    return this.transport !== null;
  }

  bind(transport: Transport): void {
    this.transport = transport;
  }

  /** Feed one line off the wire. */
  handleLine(line: string): void {
    const text = line.trim();
    if (!text) return;
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(text) as Record<string, unknown>;
    } catch {
      return;
    }
    if (typeof obj.event === "string") {
      this.hooks.onEvent?.(obj as GatewayEvent);
      return;
    }
    const id = typeof obj.id === "number" ? obj.id : undefined;
    if (id === undefined) return;
    const waiter = this.pending.get(id);
    if (!waiter) return;
    this.pending.delete(id);
    waiter.resolve(obj as Reply);
  }

  /** The wire died: fail everything in flight so callers can react. */
  handleDown(reason: string): void {
    const error = new Error(reason);
    for (const waiter of this.pending.values()) waiter.reject(error);
    this.pending.clear();
    this.transport = null;
    this.hooks.onDown?.(reason);
  }

  request(op: Op): Promise<Reply> {
    const transport = this.transport;
    if (!transport) return Promise.reject(new Error("not connected"));
    const id = this.nextId++;
    const line = JSON.stringify({ ...op, id });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      transport.send(line);
    });
  }
}

export function openWebSocket(url: string, client: GatewayClient): Transport {
  const socket = new WebSocket(url);
  const transport: Transport = {
    send: (line) => socket.send(line),
    close: () => socket.close(),
  };
  socket.addEventListener("open", () => client.bind(transport));
  socket.addEventListener("message", (ev) => {
    for (const line of String(ev.data).split("\n")) client.handleLine(line);
  });
  socket.addEventListener("close", () => client.handleDown("connection closed"));
  return transport;
}
