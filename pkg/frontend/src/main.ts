// Browser bootstrap: canvas painting, pointer capture, parameter sliders,
// and the recording toggle.  Panel values ride in the xi control vector.

import { ViewerSession, type Painter } from "./client.js";
import { pumpGaze, type PointerSample } from "./gaze.js";
import { rgbToImageBytes } from "./compose.js";
import { WebSocketTransport } from "./transport.js";

interface Sliders {
  m1: HTMLInputElement;
  m2: HTMLInputElement;
  noise: HTMLInputElement;
  gamma: HTMLInputElement;
  maskWidth: HTMLInputElement;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class CanvasPainter implements Painter {
  private ctx: CanvasRenderingContext2D;
  private canvas: HTMLCanvasElement;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    this.ctx = ctx;
  }

  paint(rgb: Float32Array, width: number, height: number): void {
    if (this.canvas.width !== width || this.canvas.height !== height) {
      this.canvas.width = width;
      this.canvas.height = height;
    }
    const img = new ImageData(new Uint8ClampedArray(rgbToImageBytes(rgb)), width, height);
    this.ctx.putImageData(img, 0, 0);
  }
}

function start(): void {
  const canvas = el<HTMLCanvasElement>("view");
  const banner = el<HTMLDivElement>("banner");
  const stats = el<HTMLDivElement>("stats");
  const sliders: Sliders = {
    m1: el<HTMLInputElement>("m1"),
    m2: el<HTMLInputElement>("m2"),
    noise: el<HTMLInputElement>("noise"),
    gamma: el<HTMLInputElement>("gamma"),
    maskWidth: el<HTMLInputElement>("maskWidth"),
  };
  const recordBtn = el<HTMLButtonElement>("record");
  const url = (el<HTMLInputElement>("url")).value;

  const transport = new WebSocketTransport(url);
  const session = new ViewerSession(transport, new CanvasPainter(canvas), {
    onError: (code, detail) => {
      banner.textContent = `error ${code}: ${detail}`;
      banner.className = "banner error";
    },
  });

  transport.ready.then(
    () => {
      banner.textContent = "ready";
      banner.className = "banner ok";
    },
    () => {
      banner.textContent = "connection refused -- retry?";
      banner.className = "banner error";
    },
  );

  session.store.subscribe((s) => {
    stats.textContent =
      `status: ${s.status}  frames: ${s.framesPainted}  fps: ${s.fps.toFixed(1)}` +
      (s.latencyMs !== null ? `  latency: ${s.latencyMs.toFixed(0)} ms` : "");
    if (s.status === "error" && s.statusDetail) {
      banner.textContent = s.statusDetail;
      banner.className = "banner error";
    }
  });

  let pointer: PointerSample = { x: canvas.width / 2, y: canvas.height / 2 };
  canvas.addEventListener("pointermove", (ev) => {
    const rect = canvas.getBoundingClientRect();
    pointer = {
      x: (ev.clientX - rect.left) * (canvas.width / rect.width),
      y: (ev.clientY - rect.top) * (canvas.height / rect.height),
    };
  });

  const xi = () => [
    Number(sliders.m1.value),
    Number(sliders.m2.value),
    Number(sliders.noise.value),
    Number(sliders.gamma.value),
    Number(sliders.maskWidth.value),
  ];

  const pump = pumpGaze(
    () => pointer,
    (msg) => session.sendGaze(msg),
    { rateHz: 60, width: canvas.width, height: canvas.height, xi,
      clock: () => session.clock() },
  );

  recordBtn.addEventListener("click", () => {
    const recording = !session.store.get().recording;
    session.setRecording(recording);
    recordBtn.textContent = recording ? "stop + download" : "record";
    if (!recording) {
      const blob = new Blob([session.recordedEventStream()], { type: "application/jsonl" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "gaze-events.jsonl";
      a.click();
      URL.revokeObjectURL(a.href);
    }
  });

  window.addEventListener("beforeunload", () => {
    pump.stop();
    session.close();
  });
}

window.addEventListener("DOMContentLoaded", start);
