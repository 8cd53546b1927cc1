// Texture-map a base image through the server-provided inverse-map lattice.
//
// The service returns, for every corner of a (res+1) x (res+1) screen
// lattice, the source coordinate in the unit square whose content belongs at
// that screen position. Rendering bilinearly interpolates the lattice inside
// each cell, so regions of high posterior mass occupy a large screen area.

import type { WarpDoc } from "./api.js";

export type SampleFn = (w0: number, w1: number) => [number, number, number];

export interface WarpRender {
  width: number;
  height: number;
  /** RGBA, row-major, 4 bytes per pixel. */
  pixels: Uint8ClampedArray<ArrayBuffer>;
  /** Screen pixels whose source coordinate fell outside the unit square. */
  unmapped: number;
}

function corner(doc: WarpDoc, i: number, j: number): number[] {
  const point = doc.points[i * (doc.resolution + 1) + j];
  if (point === undefined) {
    throw new Error(`warp lattice is missing corner (${i}, ${j})`);
  }
  return point;
}

/** Source coordinate for screen position (u0, u1) in the unit square. */
export function sourceAt(doc: WarpDoc, u0: number, u1: number): number[] {
  const res = doc.resolution;
  const i = Math.min(Math.floor(u0 * res), res - 1);
  const j = Math.min(Math.floor(u1 * res), res - 1);
  const t0 = u0 * res - i;
  const t1 = u1 * res - j;
  const p00 = corner(doc, i, j);
  const p01 = corner(doc, i, j + 1);
  const p10 = corner(doc, i + 1, j);
  const p11 = corner(doc, i + 1, j + 1);
  const out: number[] = [];
  for (let axis = 0; axis < 2; axis++) {
    const top = (p00[axis] ?? NaN) * (1 - t1) + (p01[axis] ?? NaN) * t1;
    const bottom = (p10[axis] ?? NaN) * (1 - t1) + (p11[axis] ?? NaN) * t1;
    out.push(top * (1 - t0) + bottom * t0);
  }
  return out;
}

export function renderWarp(
  doc: WarpDoc,
  sample: SampleFn,
  width: number,
  height: number,
): WarpRender {
  const pixels = new Uint8ClampedArray(width * height * 4);
  let unmapped = 0;
  for (let r = 0; r < height; r++) {
    for (let c = 0; c < width; c++) {
      const [w0, w1] = sourceAt(doc, (r + 0.5) / height, (c + 0.5) / width);
      const offset = (r * width + c) * 4;
      const inside =
        w0 !== undefined &&
        w1 !== undefined &&
        Number.isFinite(w0) &&
        Number.isFinite(w1) &&
        w0 >= 0 &&
        w0 <= 1 &&
        w1 >= 0 &&
        w1 <= 1;
      if (!inside) {
        unmapped++;
        pixels[offset + 3] = 0;
        continue;
      }
      const [red, green, blue] = sample(w0, w1);
      pixels[offset] = red;
      pixels[offset + 1] = green;
      pixels[offset + 2] = blue;
      pixels[offset + 3] = 255;
    }
  }
  return { width, height, pixels, unmapped };
}

/** Demo texture: smooth gradients plus a grid so the warp is visible. */
export function checkerSample(w0: number, w1: number): [number, number, number] {
  const grid =
    Math.floor(w0 * 8) % 2 === Math.floor(w1 * 8) % 2 ? 40 : 0;
  return [Math.round(215 * w1) + grid, Math.round(215 * w0) + grid, 180];
}
