// Transport abstraction: the protocol rides newline-delimited JSON over a
// duplex byte stream (raw TCP in node tests) or one-JSON-per-message
// WebSocket framing (browser).

import type { ClientMsg } from "./protocol.js";

export interface Transport {
  send(msg: ClientMsg): void;
  onMessage(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

export class WebSocketTransport implements Transport {
  private ws: WebSocket;
  private messageCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;
  readonly ready: Promise<void>;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ready = new Promise((resolve, reject) => {
      this.ws.onopen = () => resolve();
      this.ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    });
    this.ws.onmessage = (ev) => {
      if (this.messageCb) this.messageCb(String(ev.data));
    };
    this.ws.onclose = () => {
      if (this.closeCb) this.closeCb();
    };
  }

  send(msg: ClientMsg): void {
    if (this.ws.readyState !== WebSocket.OPEN) return;
    // backpressure: downsample gaze locally rather than queueing unboundedly
    if (msg.type === "gaze" && this.ws.bufferedAmount > 64 * 1024) return;
    this.ws.send(JSON.stringify(msg));
  }

  onMessage(cb: (line: string) => void): void {
    this.messageCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.ws.close();
  }
}

/** Node-only raw socket transport (used by the headless tests and tools). */
export async function connectTcp(host: string, port: number): Promise<Transport> {
  const net = await import("node:net");
  const sock = net.createConnection({ host, port, noDelay: true });
  await new Promise<void>((resolve, reject) => {
    sock.once("connect", () => resolve());
    sock.once("error", (e: Error) => reject(e));
  });
  let buf = "";
  let messageCb: ((line: string) => void) | null = null;
  let closeCb: (() => void) | null = null;
  sock.on("data", (chunk: Buffer) => {
    buf += chunk.toString("utf8");
    let idx;
    while ((idx = buf.indexOf("\n")) >= 0) {
      const line = buf.slice(0, idx);
      buf = buf.slice(idx + 1);
      if (line.trim() && messageCb) messageCb(line);
    }
  });
  sock.on("close", () => {
    if (closeCb) closeCb();
  });
  sock.on("error", () => { /* surfaced through close */ });
  return {
    send: (msg) => sock.write(JSON.stringify(msg) + "\n"),
    onMessage: (cb) => { messageCb = cb; },
    onClose: (cb) => { closeCb = cb; },
    close: () => sock.end(),
  };
}
