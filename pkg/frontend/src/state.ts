// View-state derivation. The rendered state is a pure function of the last
// server response — no client-side inference of the posterior.

import type { InputResponse, PosteriorDoc, SessionDoc } from "./api.js";

export type ViewMode = "1d" | "2d-zoom";

export interface ViewState {
  sessionId: string;
  mode: ViewMode;
  step: number;
  nInputs: number;
  median: number[];
  credibleBox: number[][];
  decodedPrefix: string[];
  lastOutcome: { x: number; y: number } | null;
  target: number[] | null;
  revealedState: number[] | null;
  errorBanner: string | null;
}

export function viewFromDoc(doc: SessionDoc): ViewState {
  return {
    sessionId: doc.id,
    mode: doc.dim === 1 ? "1d" : "2d-zoom",
    step: doc.n,
    nInputs: doc.n_inputs,
    median: doc.median,
    credibleBox: doc.credible_box,
    decodedPrefix: doc.decoded_prefix,
    lastOutcome: doc.last,
    target: doc.target ?? null,
    revealedState: doc.state ?? null,
    errorBanner: null,
  };
}

export function applyInput(resp: InputResponse): ViewState {
  return viewFromDoc(resp.state);
}

export function withError(view: ViewState, message: string): ViewState {
  return { ...view, errorBanner: message };
}

/** Channel symbol for a click at (u0, u1) in the unit square: quadrants are
 * indexed in row-major order over the per-axis halves. */
export function quadrantSymbol(u0: number, u1: number): number {
  return 2 * (u0 >= 0.5 ? 1 : 0) + (u1 >= 0.5 ? 1 : 0);
}

/** Channel symbol for a 1-D answer: is the message right of the median? */
export function sideSymbol(right: boolean): number {
  return right ? 1 : 0;
}

export function boxArea(box: number[][]): number {
  let area = 1;
  for (const bounds of box) {
    const [lo, hi] = bounds;
    area *= Math.max(0, (hi ?? 0) - (lo ?? 0));
  }
  return area;
}

/** First k bits of the binary expansion of a point in [0, 1). */
export function bitsOf(point: number, k: number): string {
  let v = point;
  let bits = "";
  for (let i = 0; i < k; i++) {
    v *= 2;
    const b = v >= 1 ? 1 : 0;
    bits += b;
    v -= b;
  }
  return bits;
}

/** Posterior masses normalized to [0, 1] grayscale intensities, row-major. */
export function heatmapIntensities(doc: PosteriorDoc): number[] {
  const peak = Math.max(...doc.masses);
  if (peak <= 0) {
    return doc.masses.map(() => 0);
  }
  return doc.masses.map((m) => m / peak);
}
