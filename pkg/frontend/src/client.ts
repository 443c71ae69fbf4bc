// The viewer session: handshake, frame painting, gaze emission, recording,
// and end-to-end statistics (fps, gaze-to-paint latency).

import { composeFibers } from "./compose.js";
import { decodeFrame } from "./frames.js";
import type { FrameMsg, GazeMsg, ServerMsg, SessionConfigWire } from "./protocol.js";
import { parseServerMsg } from "./protocol.js";
import { Store } from "./state.js";
import type { Transport } from "./transport.js";

export interface Painter {
  /** Receives composed RGB floats; must return quickly. */
  paint(rgb: Float32Array, width: number, height: number, tSim: number): void;
}

export interface SessionEvents {
  onError?(code: string, detail: string): void;
  onConfig?(config: SessionConfigWire): void;
}

export class ViewerSession {
  readonly store = new Store();
  private transport: Transport;
  private painter: Painter;
  private events: SessionEvents;
  private sentGazes: { t: number; wall: number }[] = [];
  private recorded: GazeMsg[] = [];
  private paintTimes: number[] = [];
  private latencies: number[] = [];
  private helloSeen = false;
  private connectWall = performance.now();
  private clockAnchor: { simT: number; wall: number } | null = null;
  private lastClock = 0;

  constructor(transport: Transport, painter: Painter, events: SessionEvents = {}) {
    this.transport = transport;
    this.painter = painter;
    this.events = events;
    this.store.update({ status: "connecting" });
    transport.onMessage((line) => this.handleLine(line));
    transport.onClose(() => this.store.update({ status: "closed" }));
  }

  /** Session-aligned seconds for gaze timestamps; calibrated against the
      service's virtual clock from the first frame, never decreasing. */
  clock(): number {
    const wall = performance.now();
    const raw = this.clockAnchor
      ? this.clockAnchor.simT + (wall - this.clockAnchor.wall) / 1000
      : (wall - this.connectWall) / 1000;
    this.lastClock = Math.max(raw, this.lastClock + 1e-6);
    return this.lastClock;
  }

  private handleLine(line: string): void {
    const msg = parseServerMsg(line);
    if (msg === null) {
      this.store.update({ droppedFrames: this.store.get().droppedFrames + 1 });
      return;
    }
    this.handleMessage(msg);
  }

  private handleMessage(msg: ServerMsg): void {
    switch (msg.type) {
      case "hello":
        this.helloSeen = true;
        break;
      case "config": {
        const cfg = msg.config;
        if (!this.helloSeen || !cfg || typeof cfg.D !== "number" || !cfg.lattice) {
          this.store.update({ status: "error", statusDetail: "config rejected" });
          return;
        }
        this.store.update({ status: "connected", config: cfg });
        this.events.onConfig?.(cfg);
        break;
      }
      case "frame":
        this.handleFrame(msg);
        break;
      case "error":
        this.store.update({ status: "error", statusDetail: `${msg.code}: ${msg.detail ?? ""}` });
        this.events.onError?.(msg.code, msg.detail ?? "");
        break;
    }
  }

  private handleFrame(msg: FrameMsg): void {
    const cfg = this.store.get().config;
    if (!cfg) return;
    let rgb: Float32Array;
    try {
      const frame = decodeFrame(msg);
      rgb = composeFibers(frame, cfg.palette);
    } catch {
      this.store.update({ droppedFrames: this.store.get().droppedFrames + 1 });
      return;
    }
    this.painter.paint(rgb, msg.w, msg.h, msg.t);
    const now = performance.now();
    if (this.clockAnchor === null) {
      this.clockAnchor = { simT: msg.t, wall: now };
    }
    this.paintTimes.push(now);
    while (this.paintTimes.length > 0 && now - this.paintTimes[0] > 2000) {
      this.paintTimes.shift();
    }
    // latency: wall delta from the newest gaze the frame could have seen
    let applied: { t: number; wall: number } | null = null;
    for (const g of this.sentGazes) {
      if (g.t <= msg.t) applied = g;
      else break;
    }
    if (applied !== null) {
      this.latencies.push(now - applied.wall);
      if (this.latencies.length > 512) this.latencies.shift();
    }
    this.store.update({
      framesPainted: this.store.get().framesPainted + 1,
      fps: this.paintTimes.length / 2.0,
      latencyMs: this.latencies.length ? median(this.latencies) : null,
    });
  }

  sendGaze(msg: GazeMsg): void {
    this.sentGazes.push({ t: msg.t, wall: performance.now() });
    if (this.sentGazes.length > 4096) this.sentGazes.shift();
    if (this.store.get().recording) this.recorded.push(msg);
    this.transport.send(msg);
  }

  setRecording(on: boolean): void {
    if (on) this.recorded = [];
    this.store.update({ recording: on });
  }

  /** Recorded event stream in the run-file event format (JSONL). */
  recordedEventStream(): string {
    return this.recorded.map((g) => JSON.stringify(g)).join("\n") + "\n";
  }

  latencySamples(): number[] {
    return [...this.latencies];
  }

  close(): void {
    this.transport.send({ type: "bye" });
    this.transport.close();
  }
}

function median(xs: number[]): number {
  const s = [...xs].sort((a, b) => a - b);
  return s[Math.floor(s.length / 2)];
}
