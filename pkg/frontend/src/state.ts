/** Pure application state and reducers.
 *
 * All geometry shown to the user comes from the service: reducers only
 * collect clicked corners, bookkeep committed records, and store recover
 * responses verbatim as overlays. Every reducer returns a new state; a
 * rejected action comes back with `warning` set and nothing else changed.
 */

import type {
  AnnotationRecord,
  BevPoints,
  Box3d,
  BoxBev,
  ClickedCorner,
  ImageBox,
  RecoverRequest,
  RecoverResponse,
} from "./types.js";

export type CornerIndex = 0 | 1 | 2 | 3;

export type OverlaySource = "fitted" | "fallback-region";

/** Square side drawn around a sole corner when no box came back. */
export const FALLBACK_EXTENT = 6.0;

export interface Overlay {
  objectId: string;
  source: OverlaySource;
  status: "ok" | "partial" | "failed";
  reason: string | null;
  bev: BoxBev | null;
  box3d: Box3d | null;
  anchor: { x: number; y: number };
}

export interface InProgress {
  objectId: string;
  corners: ClickedCorner[];
}

export interface AppState {
  frame: string | null;
  points: BevPoints | null;
  selectedIndex: CornerIndex;
  inProgress: InProgress | null;
  committed: AnnotationRecord[];
  overlays: Record<string, Overlay>;
  warning: string | null;
  banner: string | null;
}

export const initialState: AppState = {
  frame: null,
  points: null,
  selectedIndex: 0,
  inProgress: null,
  committed: [],
  overlays: {},
  warning: null,
  banner: null,
};

export function loadFrame(
  state: AppState,
  frame: string,
  points: BevPoints,
  records: AnnotationRecord[],
): AppState {
  return { ...initialState, frame, points, committed: records };
}

function nextObjectId(state: AppState): string {
  const taken = new Set(state.committed.map((r) => r.object));
  let i = 0;
  while (taken.has(`new-${i}`)) i += 1;
  return `new-${i}`;
}

/** Begin annotating an object id; re-using a committed id re-annotates it. */
export function startObject(state: AppState, objectId: string): AppState {
  if (state.frame === null) {
    return { ...state, warning: "load a frame first" };
  }
  if (state.inProgress !== null) {
    return { ...state, warning: "commit or undo the current object first" };
  }
  return { ...state, inProgress: { objectId, corners: [] }, warning: null };
}

export function setSelectedIndex(state: AppState, n: CornerIndex): AppState {
  return { ...state, selectedIndex: n, warning: null };
}

export function clickCorner(
  state: AppState,
  world: { x: number; y: number },
): AppState {
  if (state.frame === null) {
    return { ...state, warning: "load a frame first" };
  }
  const obj = state.inProgress ?? { objectId: nextObjectId(state), corners: [] };
  if (obj.corners.some((c) => c.n === state.selectedIndex)) {
    return {
      ...state,
      warning: `corner ${state.selectedIndex + 1} is already placed for this object`,
    };
  }
  const corners = [...obj.corners, { n: state.selectedIndex, x: world.x, y: world.y }];
  return {
    ...state,
    inProgress: { ...obj, corners },
    // annotators trace outlines, so advance clockwise to the next index
    selectedIndex: ((state.selectedIndex + 1) % 4) as CornerIndex,
    warning: null,
  };
}

export function undo(state: AppState): AppState {
  if (state.inProgress === null || state.inProgress.corners.length === 0) {
    return state;
  }
  const corners = state.inProgress.corners.slice(0, -1);
  return {
    ...state,
    inProgress: corners.length > 0 ? { ...state.inProgress, corners } : null,
    warning: null,
  };
}

/** The image box on file for an object, if any; the UI never draws one. */
export function storedImageBox(state: AppState, objectId: string): ImageBox | null {
  const existing = state.committed.find((r) => r.object === objectId);
  return existing ? existing.image_box : null;
}

/** The exact /recover body for the in-progress object, or null if idle. */
export function overlayRequestBody(state: AppState): RecoverRequest | null {
  if (state.inProgress === null || state.inProgress.corners.length === 0) {
    return null;
  }
  return {
    object: state.inProgress.objectId,
    corners: state.inProgress.corners,
    image_box: storedImageBox(state, state.inProgress.objectId),
  };
}

/** Store a recover response verbatim as the object's overlay.
 *
 * Also copies the service-filled ground heights back onto the in-progress
 * corners so a later commit keeps them.
 */
export function applyRecoverResponse(
  state: AppState,
  resp: RecoverResponse,
): AppState {
  const last = resp.corners[resp.corners.length - 1];
  const overlay: Overlay = {
    objectId: resp.object,
    source: resp.bev !== null ? "fitted" : "fallback-region",
    status: resp.status,
    reason: resp.reason,
    bev: resp.bev,
    box3d: resp.box3d,
    anchor: last ? { x: last.x, y: last.y } : { x: 0, y: 0 },
  };
  let inProgress = state.inProgress;
  if (inProgress !== null && inProgress.objectId === resp.object) {
    const heights = new Map(resp.corners.map((c) => [c.n, c.zg]));
    inProgress = {
      ...inProgress,
      corners: inProgress.corners.map((c) => {
        const zg = heights.get(c.n);
        return zg === undefined ? c : { ...c, zg };
      }),
    };
  }
  return {
    ...state,
    inProgress,
    overlays: { ...state.overlays, [resp.object]: overlay },
  };
}

export function clearOverlay(state: AppState, objectId: string): AppState {
  if (!(objectId in state.overlays)) return state;
  const overlays = { ...state.overlays };
  delete overlays[objectId];
  return { ...state, overlays };
}

/** Move the in-progress object into the committed records.
 *
 * Re-annotating an existing object replaces its record in place and keeps
 * its image box (corner clicks never change the camera's view of it).
 */
export function commitObject(state: AppState): AppState {
  if (state.inProgress === null || state.inProgress.corners.length === 0) {
    return { ...state, warning: "commit needs at least one corner" };
  }
  const { objectId, corners } = state.inProgress;
  const record: AnnotationRecord = {
    frame: state.frame as string,
    object: objectId,
    corners: corners.map((c) => ({ n: c.n, x: c.x, y: c.y, zg: c.zg ?? 0 })),
    image_box: storedImageBox(state, objectId),
  };
  const exists = state.committed.some((r) => r.object === objectId);
  const committed = exists
    ? state.committed.map((r) => (r.object === objectId ? record : r))
    : [...state.committed, record];
  return { ...state, committed, inProgress: null, warning: null };
}

export function setBanner(state: AppState, banner: string | null): AppState {
  return { ...state, banner };
}

export function setWarning(state: AppState, warning: string | null): AppState {
  return { ...state, warning };
}
