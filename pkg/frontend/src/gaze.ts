// Gaze pump: samples a pointer source at a fixed rate, smooths the velocity,
// clamps the sight point to the unit disk, and emits gaze messages.
//
// The pointer-to-u mapping is the exact inverse of the lattice pixel map on
// the service side: u = (2 px / W - 1) + i (2 py / H - 1).

import type { GazeMsg } from "./protocol.js";

export interface PointerSample {
  x: number; // canvas pixel coordinates (float)
  y: number;
}

export type PointerSource = (tSeconds: number) => PointerSample;

export function pixelToU(x: number, y: number, width: number, height: number): [number, number] {
  return [2 * x / width - 1, 2 * y / height - 1];
}

export function uToPixel(ur: number, ui: number, width: number, height: number): [number, number] {
  return [(ur + 1) * width / 2, (ui + 1) * height / 2];
}

export function clampToDisk(ur: number, ui: number): [number, number] {
  const r = Math.hypot(ur, ui);
  if (r <= 1) return [ur, ui];
  return [ur / r, ui / r];
}

export interface GazePumpOptions {
  rateHz?: number;        // default 60
  smoothing?: number;     // exponential smoothing factor for du, default 0.5
  width: number;
  height: number;
  xi?: () => number[];    // panel values ride along
  clock?: () => number;   // timestamp source (session-aligned seconds)
}

/** Pure sampling core:  feed pointer samples, get gaze messages. */
export class GazeSampler {
  private lastU: [number, number] | null = null;
  private lastT = 0;
  private du: [number, number] = [0, 0];
  private readonly alpha: number;
  private readonly width: number;
  private readonly height: number;
  private readonly xi: () => number[];

  constructor(opts: GazePumpOptions) {
    this.alpha = opts.smoothing ?? 0.5;
    this.width = opts.width;
    this.height = opts.height;
    this.xi = opts.xi ?? (() => []);
  }

  sample(t: number, p: PointerSample): GazeMsg {
    const [ur0, ui0] = pixelToU(p.x, p.y, this.width, this.height);
    const [ur, ui] = clampToDisk(ur0, ui0);
    if (this.lastU !== null && t > this.lastT) {
      const dt = t - this.lastT;
      const fd: [number, number] = [(ur - this.lastU[0]) / dt, (ui - this.lastU[1]) / dt];
      this.du = [
        this.alpha * fd[0] + (1 - this.alpha) * this.du[0],
        this.alpha * fd[1] + (1 - this.alpha) * this.du[1],
      ];
    }
    this.lastU = [ur, ui];
    this.lastT = t;
    return { type: "gaze", t, u: [ur, ui], du: [...this.du] as [number, number], xi: this.xi() };
  }
}

export interface PumpHandle {
  stop(): void;
}

/** Drives a GazeSampler off wall time; `emit` must never block. */
export function pumpGaze(
  source: PointerSource,
  emit: (msg: GazeMsg) => void,
  opts: GazePumpOptions,
): PumpHandle {
  const rate = opts.rateHz ?? 60;
  const sampler = new GazeSampler(opts);
  const start = performance.now();
  const clock = opts.clock ?? (() => (performance.now() - start) / 1000);
  const timer = setInterval(() => {
    const t = clock();
    emit(sampler.sample(t, source(t)));
  }, 1000 / rate);
  return { stop: () => clearInterval(timer) };
}
