// Wire protocol: newline-delimited JSON over a duplex stream.
// Message types mirror the service exactly.

export interface HelloMsg {
  type: "hello";
  version: number;
}

export interface ConfigMsg {
  type: "config";
  config: SessionConfigWire;
}

export interface GazeMsg {
  type: "gaze";
  t: number;
  u: [number, number];
  du: [number, number];
  xi: number[];
}

export interface FrameMsg {
  type: "frame";
  t: number;
  w: number;
  h: number;
  fibers: number;
  encoding: "f32le";
  data: string; // base64, row-major fiber-interleaved
}

export interface ErrorMsg {
  type: "error";
  code: string;
  detail?: string;
}

export interface ByeMsg {
  type: "bye";
}

export type ServerMsg = HelloMsg | ConfigMsg | FrameMsg | ErrorMsg;
export type ClientMsg = GazeMsg | ByeMsg | { type: "hello" };

export interface SessionConfigWire {
  version: number;
  h: string;
  D: number;
  N: number;
  angular_order: number;
  mode: string;
  dt: number;
  frame_every: number;
  seed: number;
  lattice: { delta_i: number; delta_o: number; width: number; height: number };
  palette: number[][];
  fibers: { gamma: number; mask: { kind: string; width: number } }[];
  [extra: string]: unknown;
}

export function parseServerMsg(line: string): ServerMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const t = (obj as { type?: unknown }).type;
  if (t === "hello" || t === "config" || t === "frame" || t === "error") {
    return obj as ServerMsg;
  }
  return null;
}

export function isFrame(msg: ServerMsg): msg is FrameMsg {
  return msg.type === "frame";
}
