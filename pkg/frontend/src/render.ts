/** Canvas painting for the bird's-eye view.
 *
 * The outline helpers are pure and unit-tested; the draw* functions only
 * push paths at a CanvasRenderingContext2D.
 */

import type { Overlay } from "./state.js";
import { FALLBACK_EXTENT } from "./state.js";
import { worldToScreen, type Viewport } from "./transform.js";
import type { BevPoints, BoxBev, ClickedCorner } from "./types.js";

/** Length/width sign per corner index, clockwise from front-left. */
export const CORNER_SIGNS: ReadonlyArray<readonly [number, number]> = [
  [1, 1],
  [1, -1],
  [-1, -1],
  [-1, 1],
];

export interface WorldPoint {
  x: number;
  y: number;
}

/** The four ground-plane corners of a box, in corner-index order. */
export function boxOutline(box: BoxBev): WorldPoint[] {
  const c = Math.cos(box.theta);
  const s = Math.sin(box.theta);
  return CORNER_SIGNS.map(([su, sv]) => ({
    x: box.x + (c * su * box.l) / 2 - (s * sv * box.w) / 2,
    y: box.y + (s * su * box.l) / 2 + (c * sv * box.w) / 2,
  }));
}

/** Axis-aligned square drawn where a box could not be fitted yet. */
export function fallbackSquare(center: WorldPoint, extent = FALLBACK_EXTENT): WorldPoint[] {
  const r = extent / 2;
  return [
    { x: center.x + r, y: center.y + r },
    { x: center.x + r, y: center.y - r },
    { x: center.x - r, y: center.y - r },
    { x: center.x - r, y: center.y + r },
  ];
}

function path(ctx: CanvasRenderingContext2D, vp: Viewport, pts: WorldPoint[], close: boolean): void {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const { u, v } = worldToScreen(vp, p);
    if (i === 0) ctx.moveTo(u, v);
    else ctx.lineTo(u, v);
  });
  if (close) ctx.closePath();
}

export function drawPoints(ctx: CanvasRenderingContext2D, vp: Viewport, points: BevPoints): void {
  ctx.fillStyle = "rgba(130, 170, 200, 0.55)";
  const r = Math.max(1, Math.min(2.5, vp.scale * 0.06));
  for (let i = 0; i < points.count; i += 1) {
    const { u, v } = worldToScreen(vp, { x: points.x[i] ?? 0, y: points.y[i] ?? 0 });
    if (u < -4 || v < -4 || u > vp.width + 4 || v > vp.height + 4) continue;
    ctx.fillRect(u - r / 2, v - r / 2, r, r);
  }
}

export interface OutlineStyle {
  color: string;
  lineWidth: number;
  dashed?: boolean;
}

export function drawOutline(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  outline: WorldPoint[],
  style: OutlineStyle,
): void {
  ctx.strokeStyle = style.color;
  ctx.lineWidth = style.lineWidth;
  ctx.setLineDash(style.dashed ? [6, 4] : []);
  path(ctx, vp, outline, true);
  ctx.stroke();
  ctx.setLineDash([]);
}

/** Heavier stroke on the front edge so heading is visible at a glance. */
export function drawFrontEdge(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  outline: WorldPoint[],
  color: string,
): void {
  const front = outline.slice(0, 2);
  if (front.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 3.5;
  path(ctx, vp, front, false);
  ctx.stroke();
}

export function drawOverlay(ctx: CanvasRenderingContext2D, vp: Viewport, overlay: Overlay): void {
  if (overlay.bev !== null) {
    const color = overlay.status === "ok" ? "#3fb950" : "#d29922";
    const outline = boxOutline(overlay.bev);
    drawOutline(ctx, vp, outline, { color, lineWidth: 1.8 });
    drawFrontEdge(ctx, vp, outline, color);
  } else {
    drawOutline(ctx, vp, fallbackSquare(overlay.anchor), {
      color: "#f85149",
      lineWidth: 1.2,
      dashed: true,
    });
  }
}

const CORNER_LABELS = ["1", "2", "3", "4"] as const;

export function drawClickedCorners(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  corners: ClickedCorner[],
): void {
  ctx.font = "11px sans-serif";
  for (const c of corners) {
    const { u, v } = worldToScreen(vp, c);
    ctx.fillStyle = "#e3b341";
    ctx.beginPath();
    ctx.arc(u, v, 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#0d1117";
    ctx.fillText(CORNER_LABELS[c.n] ?? "?", u - 3, v + 4);
  }
}

export function drawCommittedOutline(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  corners: ClickedCorner[],
): void {
  ctx.fillStyle = "rgba(110, 118, 129, 0.9)";
  for (const c of corners) {
    const { u, v } = worldToScreen(vp, c);
    ctx.fillRect(u - 2, v - 2, 4, 4);
  }
}

/** Sensor origin marker with the forward (+x) direction. */
export function drawOrigin(ctx: CanvasRenderingContext2D, vp: Viewport): void {
  const o = worldToScreen(vp, { x: 0, y: 0 });
  const f = worldToScreen(vp, { x: 2, y: 0 });
  ctx.strokeStyle = "#8b949e";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(o.u, o.v);
  ctx.lineTo(f.u, f.v);
  ctx.stroke();
  ctx.beginPath();
  ctx.arc(o.u, o.v, 3, 0, 2 * Math.PI);
  ctx.stroke();
}
