// Fiber composition: mirror of the service-side palette blend.
// rgb(x) = clip( sum_f intensity_f(x) * palette[f] ), values in [0, 1].

import type { DecodedFrame } from "./frames.js";

export function composeFibers(frame: DecodedFrame, palette: number[][]): Float32Array {
  if (palette.length !== frame.fibers) {
    throw new Error(`palette size ${palette.length} != fibers ${frame.fibers}`);
  }
  const n = frame.width * frame.height;
  const rgb = new Float32Array(n * 3);
  const { fibers, interleaved } = frame;
  for (let p = 0; p < n; p++) {
    let r = 0, g = 0, b = 0;
    for (let f = 0; f < fibers; f++) {
      const v = interleaved[p * fibers + f];
      r += v * palette[f][0];
      g += v * palette[f][1];
      b += v * palette[f][2];
    }
    rgb[p * 3] = Math.min(1, Math.max(0, r));
    rgb[p * 3 + 1] = Math.min(1, Math.max(0, g));
    rgb[p * 3 + 2] = Math.min(1, Math.max(0, b));
  }
  return rgb;
}

export function rgbToImageBytes(rgb: Float32Array): Uint8ClampedArray {
  const n = rgb.length / 3;
  const out = new Uint8ClampedArray(n * 4);
  for (let p = 0; p < n; p++) {
    out[p * 4] = rgb[p * 3] * 255;
    out[p * 4 + 1] = rgb[p * 3 + 1] * 255;
    out[p * 4 + 2] = rgb[p * 3 + 2] * 255;
    out[p * 4 + 3] = 255;
  }
  return out;
}
