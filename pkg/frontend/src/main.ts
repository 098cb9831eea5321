/** Browser entry point: wires the canvas, sidebar, and service client. */

import { ApiError, Client } from "./api.js";
import {
  drawClickedCorners,
  drawCommittedOutline,
  drawOrigin,
  drawOverlay,
  drawPoints,
} from "./render.js";
import {
  applyRecoverResponse,
  clearOverlay,
  clickCorner,
  commitObject,
  initialState,
  loadFrame,
  overlayRequestBody,
  setBanner,
  setSelectedIndex,
  startObject,
  undo,
  type AppState,
  type CornerIndex,
} from "./state.js";
import {
  fitView,
  panBy,
  screenToWorld,
  zoomAt,
  type Viewport,
} from "./transform.js";
import type { AnnotationRecord, RecoverRequest } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("view");
const frameSelect = el<HTMLSelectElement>("frame");
const indexLabel = el<HTMLSpanElement>("index");
const statusLine = el<HTMLDivElement>("status");
const warningLine = el<HTMLDivElement>("warning");
const bannerLine = el<HTMLDivElement>("banner");
const undoButton = el<HTMLButtonElement>("undo");
const commitButton = el<HTMLButtonElement>("commit");
const saveButton = el<HTMLButtonElement>("save");

const params = new URLSearchParams(window.location.search);
const client = new Client(params.get("api") ?? "http://127.0.0.1:8000");

let state: AppState = initialState;
let viewport: Viewport = {
  centerX: 0,
  centerY: 0,
  scale: 10,
  width: canvas.width,
  height: canvas.height,
};

function describe(err: unknown): string {
  if (err instanceof ApiError) return `service error ${err.status}: ${err.detail}`;
  return err instanceof Error ? err.message : String(err);
}

function redraw(): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  ctx.fillStyle = "#0d1117";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  drawOrigin(ctx, viewport);
  if (state.points !== null) drawPoints(ctx, viewport, state.points);
  for (const record of state.committed) {
    if (state.inProgress?.objectId !== record.object) {
      drawCommittedOutline(ctx, viewport, record.corners);
    }
  }
  for (const overlay of Object.values(state.overlays)) {
    drawOverlay(ctx, viewport, overlay);
  }
  if (state.inProgress !== null) {
    drawClickedCorners(ctx, viewport, state.inProgress.corners);
  }
}

function syncSidebar(): void {
  indexLabel.textContent = String(state.selectedIndex + 1);
  warningLine.textContent = state.warning ?? "";
  bannerLine.textContent = state.banner ?? "";
  const parts: string[] = [];
  if (state.frame !== null) parts.push(`frame ${state.frame}`);
  if (state.inProgress !== null) {
    parts.push(`${state.inProgress.objectId}: ${state.inProgress.corners.length} corner(s)`);
    const overlay = state.overlays[state.inProgress.objectId];
    if (overlay !== undefined) {
      parts.push(overlay.reason === null ? overlay.status : `${overlay.status} (${overlay.reason})`);
      if (overlay.box3d !== null) parts.push(`h=${overlay.box3d.h.toFixed(2)} m`);
    }
  } else {
    parts.push(`${state.committed.length} saved object(s)`);
  }
  statusLine.textContent = parts.join(" | ");
}

function setState(next: AppState): void {
  state = next;
  syncSidebar();
  redraw();
}

function recordRequestBody(record: AnnotationRecord): RecoverRequest {
  return {
    object: record.object,
    corners: record.corners.map((c) => ({ n: c.n, x: c.x, y: c.y, zg: c.zg })),
    image_box: record.image_box,
  };
}

/** Refresh the in-progress object's overlay from the service. */
async function refreshOverlay(): Promise<void> {
  if (state.frame === null) return;
  const body = overlayRequestBody(state);
  if (body === null) return;
  try {
    const resp = await client.recover(state.frame, body);
    setState(applyRecoverResponse(state, resp));
  } catch (err) {
    setState(setBanner(state, describe(err)));
  }
}

async function loadFrameData(frame: string): Promise<void> {
  try {
    const points = await client.getBev(frame);
    const records = await client.getAnnotations(frame);
    let next = loadFrame(state, frame, points, records);
    setState(next);
    viewport = fitView(canvas.width, canvas.height, points.x, points.y);
    redraw();
    // sequential so the exchange log stays in a reproducible order
    for (const record of records) {
      if (record.corners.length === 0) continue;
      const resp = await client.recover(frame, recordRequestBody(record));
      next = applyRecoverResponse(next, resp);
      setState(next);
    }
  } catch (err) {
    setState(setBanner(state, describe(err)));
  }
}

async function init(): Promise<void> {
  try {
    const frames = await client.listFrames();
    frameSelect.replaceChildren(
      ...frames.map((f) => new Option(f, f)),
    );
    const first = frames[0];
    if (first !== undefined) await loadFrameData(first);
  } catch (err) {
    setState(setBanner(state, describe(err)));
  }
}

frameSelect.addEventListener("change", () => {
  void loadFrameData(frameSelect.value);
});

// distinguish click from drag by total mouse travel
let dragging = false;
let moved = 0;
let lastU = 0;
let lastV = 0;

canvas.addEventListener("mousedown", (e) => {
  dragging = true;
  moved = 0;
  lastU = e.offsetX;
  lastV = e.offsetY;
});

canvas.addEventListener("mousemove", (e) => {
  if (!dragging) return;
  const du = e.offsetX - lastU;
  const dv = e.offsetY - lastV;
  moved += Math.abs(du) + Math.abs(dv);
  lastU = e.offsetX;
  lastV = e.offsetY;
  if (moved > 3) {
    viewport = panBy(viewport, du, dv);
    redraw();
  }
});

window.addEventListener("mouseup", (e) => {
  if (!dragging) return;
  dragging = false;
  if (moved > 3 || !(e.target instanceof HTMLCanvasElement)) return;
  const world = screenToWorld(viewport, { u: e.offsetX, v: e.offsetY });
  const next = clickCorner(state, world);
  setState(next);
  if (next.warning === null) void refreshOverlay();
});

canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  const factor = e.deltaY < 0 ? 1.15 : 1 / 1.15;
  viewport = zoomAt(viewport, { u: e.offsetX, v: e.offsetY }, factor);
  redraw();
});

function handleUndo(): void {
  const objectId = state.inProgress?.objectId;
  const next = undo(state);
  if (objectId === undefined) return;
  if (next.inProgress === null) {
    setState(clearOverlay(next, objectId));
  } else {
    setState(next);
    void refreshOverlay();
  }
}

function handleCommit(): void {
  setState(commitObject(state));
}

async function handleSave(): Promise<void> {
  if (state.frame === null) return;
  try {
    const n = await client.putAnnotations(state.frame, state.committed);
    setState(setBanner(state, `saved ${n} record(s)`));
  } catch (err) {
    // keep local records so the annotator can retry
    setState(setBanner(state, `save failed, retry: ${describe(err)}`));
  }
}

undoButton.addEventListener("click", handleUndo);
commitButton.addEventListener("click", handleCommit);
saveButton.addEventListener("click", () => void handleSave());

window.addEventListener("keydown", (e) => {
  if (e.target instanceof HTMLInputElement || e.target instanceof HTMLSelectElement) return;
  if (e.key >= "1" && e.key <= "4") {
    setState(setSelectedIndex(state, (Number(e.key) - 1) as CornerIndex));
  } else if (e.key === "u") {
    handleUndo();
  } else if (e.key === "Enter") {
    handleCommit();
  } else if (e.key === "s") {
    void handleSave();
  } else if (e.key === "n") {
    const id = window.prompt("object id", "");
    if (id !== null && id !== "") setState(startObject(state, id));
  }
});

void init();
