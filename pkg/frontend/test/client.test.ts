import { describe, expect, it } from "vitest";

import { ViewerSession, type Painter } from "../src/client.js";
import type { ClientMsg } from "../src/protocol.js";
import type { Transport } from "../src/transport.js";

class FakeTransport implements Transport {
  sent: ClientMsg[] = [];
  private messageCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  send(msg: ClientMsg): void {
    this.sent.push(msg);
  }
  onMessage(cb: (line: string) => void): void {
    this.messageCb = cb;
  }
  onClose(cb: () => void): void {
    this.closeCb = cb;
  }
  close(): void {
    this.closeCb?.();
  }
  feed(obj: unknown): void {
    this.messageCb?.(JSON.stringify(obj));
  }
}

class SinkPainter implements Painter {
  painted: number[] = [];
  paint(_rgb: Float32Array, _w: number, _h: number, tSim: number): void {
    this.painted.push(tSim);
  }
}

const config = {
  version: 1, h: "3/4", D: 8, N: 3, angular_order: 2, mode: "deterministic",
  dt: 0.01, frame_every: 2, seed: 1,
  lattice: { delta_i: 0.08, delta_o: 0.01, width: 4, height: 4 },
  palette: [[1, 1, 1]],
  fibers: [{ gamma: 0.3, mask: { kind: "gaussian", width: 0.5 } }],
};

function frameMsg(t: number): unknown {
  const floats = new Float32Array(16).fill(0.5);
  const data = Buffer.from(floats.buffer).toString("base64");
  return { type: "frame", t, w: 4, h: 4, fibers: 1, encoding: "f32le", data };
}

describe("viewer session state machine", () => {
  it("handshakes to connected and paints frames", () => {
    const tr = new FakeTransport();
    const painter = new SinkPainter();
    const session = new ViewerSession(tr, painter);
    expect(session.store.get().status).toBe("connecting");
    tr.feed({ type: "hello", version: 1 });
    tr.feed({ type: "config", config });
    expect(session.store.get().status).toBe("connected");
    tr.feed(frameMsg(0.02));
    expect(painter.painted).toEqual([0.02]);
    expect(session.store.get().framesPainted).toBe(1);
  });

  it("rejects a config that does not follow hello", () => {
    const tr = new FakeTransport();
    const session = new ViewerSession(tr, new SinkPainter());
    tr.feed({ type: "config", config });
    expect(session.store.get().status).toBe("error");
    expect(session.store.get().statusDetail).toMatch(/config rejected/);
  });

  it("rejects a malformed config echo", () => {
    const tr = new FakeTransport();
    const session = new ViewerSession(tr, new SinkPainter());
    tr.feed({ type: "hello", version: 1 });
    tr.feed({ type: "config", config: { h: "3/4" } });
    expect(session.store.get().status).toBe("error");
  });

  it("drops undecodable frames and counts them", () => {
    const tr = new FakeTransport();
    const painter = new SinkPainter();
    const session = new ViewerSession(tr, painter);
    tr.feed({ type: "hello", version: 1 });
    tr.feed({ type: "config", config });
    tr.feed({ type: "frame", t: 0, w: 4, h: 4, fibers: 1, encoding: "f32le", data: "AAAA" });
    expect(painter.painted.length).toBe(0);
    expect(session.store.get().droppedFrames).toBe(1);
  });

  it("surfaces server errors", () => {
    const tr = new FakeTransport();
    const session = new ViewerSession(tr, new SinkPainter());
    tr.feed({ type: "error", code: "gaze_domain", detail: "|u| > 1" });
    expect(session.store.get().status).toBe("error");
    expect(session.store.get().statusDetail).toMatch(/gaze_domain/);
  });

  it("records the gaze stream in the run-file event format", () => {
    const tr = new FakeTransport();
    const session = new ViewerSession(tr, new SinkPainter());
    session.setRecording(true);
    session.sendGaze({ type: "gaze", t: 0.1, u: [0.2, 0.1], du: [0, 0], xi: [1] });
    session.sendGaze({ type: "gaze", t: 0.2, u: [0.3, 0.1], du: [0.1, 0], xi: [1] });
    const lines = session.recordedEventStream().trim().split("\n");
    expect(lines.length).toBe(2);
    const first = JSON.parse(lines[0]);
    expect(first.type).toBe("gaze");
    expect(first.u).toEqual([0.2, 0.1]);
    expect(tr.sent.length).toBe(2);
  });
});
