/** Screen/world affine mapping for the BEV canvas.
 *
 * World axes follow the sensor frame (x forward, y left); on screen,
 * forward points up and left points left. This module is the only
 * geometry the UI owns: everything drawn as a box comes verbatim from
 * the service.
 */

export interface Viewport {
  centerX: number;
  centerY: number;
  scale: number;
  width: number;
  height: number;
}

export interface ScreenPoint {
  u: number;
  v: number;
}

export interface WorldPoint {
  x: number;
  y: number;
}

export function worldToScreen(vp: Viewport, p: WorldPoint): ScreenPoint {
  return {
    u: vp.width / 2 - (p.y - vp.centerY) * vp.scale,
    v: vp.height / 2 - (p.x - vp.centerX) * vp.scale,
  };
}

export function screenToWorld(vp: Viewport, p: ScreenPoint): WorldPoint {
  return {
    x: vp.centerX + (vp.height / 2 - p.v) / vp.scale,
    y: vp.centerY + (vp.width / 2 - p.u) / vp.scale,
  };
}

/** Shift the view so the scene follows a pointer drag of (du, dv) pixels. */
export function panBy(vp: Viewport, du: number, dv: number): Viewport {
  return {
    ...vp,
    centerX: vp.centerX + dv / vp.scale,
    centerY: vp.centerY + du / vp.scale,
  };
}

/** Rescale about a screen point, keeping the world point under it fixed. */
export function zoomAt(vp: Viewport, at: ScreenPoint, factor: number): Viewport {
  const anchor = screenToWorld(vp, at);
  const scale = vp.scale * factor;
  return {
    ...vp,
    scale,
    centerX: anchor.x - (vp.height / 2 - at.v) / scale,
    centerY: anchor.y - (vp.width / 2 - at.u) / scale,
  };
}

/** A viewport covering all given points with a margin, never degenerate. */
export function fitView(
  width: number,
  height: number,
  xs: ArrayLike<number>,
  ys: ArrayLike<number>,
): Viewport {
  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (let i = 0; i < xs.length; i += 1) {
    const x = xs[i] as number;
    const y = ys[i] as number;
    if (x < xLo) xLo = x;
    if (x > xHi) xHi = x;
    if (y < yLo) yLo = y;
    if (y > yHi) yHi = y;
  }
  if (!Number.isFinite(xLo)) {
    return { centerX: 0, centerY: 0, scale: 10, width, height };
  }
  const spanX = Math.max(xHi - xLo, 1);
  const spanY = Math.max(yHi - yLo, 1);
  const scale = 0.9 * Math.min(height / spanX, width / spanY);
  return {
    centerX: (xLo + xHi) / 2,
    centerY: (yLo + yHi) / 2,
    scale,
    width,
    height,
  };
}
