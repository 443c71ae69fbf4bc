// Frame decoding: base64 f32le payload -> per-fiber planes.

import type { FrameMsg } from "./protocol.js";

export interface DecodedFrame {
  t: number;
  width: number;
  height: number;
  fibers: number;
  /** interleaved[ (y*width + x)*fibers + f ] */
  interleaved: Float32Array;
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}

export function decodeFrame(msg: FrameMsg): DecodedFrame {
  if (msg.encoding !== "f32le") {
    throw new Error(`unsupported frame encoding ${msg.encoding}`);
  }
  const bytes = base64ToBytes(msg.data);
  const expected = msg.w * msg.h * msg.fibers * 4;
  if (bytes.byteLength !== expected) {
    throw new Error(`frame payload ${bytes.byteLength} bytes, expected ${expected}`);
  }
  const interleaved = new Float32Array(bytes.buffer, bytes.byteOffset, msg.w * msg.h * msg.fibers);
  return { t: msg.t, width: msg.w, height: msg.h, fibers: msg.fibers, interleaved };
}

export function fiberPlane(frame: DecodedFrame, fiber: number): Float32Array {
  const { width, height, fibers, interleaved } = frame;
  const out = new Float32Array(width * height);
  for (let p = 0; p < width * height; p++) {
    out[p] = interleaved[p * fibers + fiber];
  }
  return out;
}
