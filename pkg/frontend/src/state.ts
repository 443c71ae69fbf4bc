// Viewer state store with serialized updates.

import type { SessionConfigWire } from "./protocol.js";

export type ConnectionStatus = "idle" | "connecting" | "connected" | "error" | "closed";

export interface PanelValues {
  mScales: number[];       // per angular order
  noise: number;
  gamma: number[];         // per fiber
  maskWidth: number;
}

export interface ViewerState {
  status: ConnectionStatus;
  statusDetail: string;
  config: SessionConfigWire | null;
  recording: boolean;
  framesPainted: number;
  droppedFrames: number;
  fps: number;
  latencyMs: number | null;
  panel: PanelValues;
}

export type Listener = (s: ViewerState) => void;

export class Store {
  private state: ViewerState = {
    status: "idle",
    statusDetail: "",
    config: null,
    recording: false,
    framesPainted: 0,
    droppedFrames: 0,
    fps: 0,
    latencyMs: null,
    panel: { mScales: [1, 1], noise: 0, gamma: [0.3], maskWidth: 0.5 },
  };
  private listeners: Listener[] = [];

  get(): ViewerState {
    return this.state;
  }

  update(patch: Partial<ViewerState>): void {
    this.state = { ...this.state, ...patch };
    for (const cb of this.listeners) cb(this.state);
  }

  subscribe(cb: Listener): () => void {
    this.listeners.push(cb);
    return () => {
      this.listeners = this.listeners.filter((x) => x !== cb);
    };
  }
}
