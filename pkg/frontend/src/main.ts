// Browser entry point: 1-D median (left/right) sessions and the 2-D
// quadrant-zoom view. All state comes from the last server response.

import { SessionClient, ServiceError, type SessionDoc } from "./api.js";
import {
  applyInput,
  heatmapIntensities,
  quadrantSymbol,
  sideSymbol,
  viewFromDoc,
  withError,
  type ViewState,
} from "./state.js";
import { checkerSample, renderWarp } from "./warp.js";

const WARP_RESOLUTION = 64;
const HEATMAP_RESOLUTION = 32;
const CANVAS_SIZE = 512;

const client = new SessionClient(
  (window as { PMLAB_BASE?: string }).PMLAB_BASE ?? "http://127.0.0.1:8000",
);

let view: ViewState | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function canvasContext(): CanvasRenderingContext2D {
  const canvas = el<HTMLCanvasElement>("view-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("canvas 2d context unavailable");
  }
  return ctx;
}

function renderBanner() {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = view?.errorBanner ?? "";
  banner.style.display = view?.errorBanner ? "block" : "none";
}

function renderReadout() {
  if (!view) {
    return;
  }
  el<HTMLSpanElement>("step-counter").textContent = String(view.step);
  el<HTMLSpanElement>("decoded-prefix").textContent = view.decodedPrefix
    .map((bits) => (bits === "" ? "(empty)" : bits))
    .join(" / ");
  const box = view.credibleBox
    .map(([lo, hi]) => `[${lo?.toFixed(4)}, ${hi?.toFixed(4)}]`)
    .join(" x ");
  el<HTMLSpanElement>("credible-box").textContent = box;
  const last = view.lastOutcome;
  el<HTMLSpanElement>("last-outcome").textContent = last
    ? `sent ${last.x}, channel delivered ${last.y}`
    : "none yet";
}

function drawOverlay1d(ctx: CanvasRenderingContext2D) {
  if (!view) {
    return;
  }
  const median = view.median[0] ?? 0.5;
  ctx.strokeStyle = "#d6336c";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(median * CANVAS_SIZE, 0);
  ctx.lineTo(median * CANVAS_SIZE, CANVAS_SIZE);
  ctx.stroke();
  const [lo, hi] = view.credibleBox[0] ?? [0, 1];
  ctx.strokeStyle = "#1971c2";
  ctx.strokeRect(
    (lo ?? 0) * CANVAS_SIZE,
    CANVAS_SIZE * 0.45,
    ((hi ?? 1) - (lo ?? 0)) * CANVAS_SIZE,
    CANVAS_SIZE * 0.1,
  );
}

function drawOverlay2d(ctx: CanvasRenderingContext2D) {
  if (!view) {
    return;
  }
  ctx.strokeStyle = "#d6336c";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(CANVAS_SIZE / 2, 0);
  ctx.lineTo(CANVAS_SIZE / 2, CANVAS_SIZE);
  ctx.moveTo(0, CANVAS_SIZE / 2);
  ctx.lineTo(CANVAS_SIZE, CANVAS_SIZE / 2);
  ctx.stroke();
}

async function render1d() {
  if (!view) {
    return;
  }
  const posterior = await client.getPosterior(
    view.sessionId,
    HEATMAP_RESOLUTION,
  );
  const ctx = canvasContext();
  ctx.clearRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
  const bars = heatmapIntensities(posterior);
  const barWidth = CANVAS_SIZE / bars.length;
  bars.forEach((intensity, index) => {
    ctx.fillStyle = `rgb(${255 - Math.round(200 * intensity)}, ${
      255 - Math.round(120 * intensity)
    }, 255)`;
    ctx.fillRect(
      index * barWidth,
      CANVAS_SIZE * (1 - 0.8 * intensity),
      barWidth,
      CANVAS_SIZE * 0.8 * intensity,
    );
  });
  drawOverlay1d(ctx);
}

async function render2d() {
  if (!view) {
    return;
  }
  const warp = await client.getWarp(view.sessionId, WARP_RESOLUTION);
  const image = renderWarp(warp, checkerSample, CANVAS_SIZE, CANVAS_SIZE);
  const ctx = canvasContext();
  ctx.putImageData(
    new ImageData(image.pixels, image.width, image.height),
    0,
    0,
  );
  drawOverlay2d(ctx);
}

async function refresh() {
  renderBanner();
  renderReadout();
  if (view?.mode === "1d") {
    await render1d();
  } else if (view) {
    await render2d();
  }
}

async function withErrors(action: () => Promise<void>) {
  try {
    await action();
  } catch (err) {
    if (view && err instanceof ServiceError) {
      view = withError(view, `${err.kind}: ${err.message}`);
    } else if (view) {
      view = withError(view, String(err));
    }
  }
  await refresh();
}

async function start(mode: "1d" | "2d-zoom") {
  await withErrors(async () => {
    const doc: SessionDoc = await client.createSession({
      channel:
        mode === "1d" ? { type: "bsc", p: 0.2 } : { type: "qsc", p: 0.3 },
      flavor: mode === "1d" ? "cdf1d" : "kr-grid",
      mode: "human",
    });
    view = viewFromDoc(doc);
    el<HTMLDivElement>("controls-1d").style.display =
      mode === "1d" ? "block" : "none";
  });
}

async function submit(symbol: number) {
  await withErrors(async () => {
    if (!view) {
      throw new Error("no active session");
    }
    view = applyInput(await client.sendInput(view.sessionId, symbol));
  });
}

function wireUp() {
  el<HTMLButtonElement>("start-1d").onclick = () => void start("1d");
  el<HTMLButtonElement>("start-2d").onclick = () => void start("2d-zoom");
  el<HTMLButtonElement>("answer-left").onclick = () =>
    void submit(sideSymbol(false));
  el<HTMLButtonElement>("answer-right").onclick = () =>
    void submit(sideSymbol(true));
  el<HTMLCanvasElement>("view-canvas").onclick = (event) => {
    if (!view || view.mode !== "2d-zoom") {
      return;
    }
    const rect = (event.target as HTMLCanvasElement).getBoundingClientRect();
    const u0 = (event.clientY - rect.top) / rect.height;
    const u1 = (event.clientX - rect.left) / rect.width;
    void submit(quadrantSymbol(u0, u1));
  };
}

wireUp();
