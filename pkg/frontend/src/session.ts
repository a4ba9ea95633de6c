// Session state: the current style vector, named pinned anchors, an
// append-only history of visited styles, and the selected classes. The
// server is stateless, so an exported session fully reproduces a sheet.

export const STYLE_DIM = 100;
export const SLIDER_GROUPS = 10;
export const GROUP_SIZE = STYLE_DIM / SLIDER_GROUPS;

const SESSION_VERSION = 1;

export interface PinnedAnchor {
  name: string;
  style: number[];
}

export interface StyleSession {
  current: number[];
  pinned: PinnedAnchor[];
  history: number[][];
  selectedClasses: number[];
}

export function newSession(numClasses: number): StyleSession {
  return {
    current: new Array<number>(STYLE_DIM).fill(0),
    pinned: [],
    history: [],
    selectedClasses: Array.from({ length: numClasses }, (_, i) => i),
  };
}

function assertStyle(v: unknown): number[] {
  if (
    !Array.isArray(v) ||
    v.length !== STYLE_DIM ||
    !v.every((x) => typeof x === 'number' && Number.isFinite(x))
  ) {
    throw new Error(`style vector must be ${STYLE_DIM} finite numbers`);
  }
  return v.map((x) => x as number);
}

/** Small deterministic PRNG (mulberry32) so "sample" buttons and tests are
 * reproducible from a seed. */
export function seededUniform(seed: number): number[] {
  let a = seed >>> 0;
  const out: number[] = [];
  for (let i = 0; i < STYLE_DIM; i++) {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    const u = ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    out.push(u * 2 - 1);
  }
  return out;
}

/** Replace the current style, recording the old one in history. */
export function visitStyle(session: StyleSession, style: number[]): void {
  session.history.push([...session.current]);
  session.current = assertStyle(style);
}

export function pinCurrent(session: StyleSession, name: string): void {
  if (session.pinned.some((p) => p.name === name)) {
    throw new Error(`anchor "${name}" already pinned`);
  }
  session.pinned.push({ name, style: [...session.current] });
}

/** Add delta to one band of 10 coordinates, clamped to [-1, 1]. */
export function nudgeStyle(
  session: StyleSession,
  group: number,
  delta: number,
): void {
  if (!Number.isInteger(group) || group < 0 || group >= SLIDER_GROUPS) {
    throw new Error(`slider group must be 0..${SLIDER_GROUPS - 1}`);
  }
  const next = [...session.current];
  const start = group * GROUP_SIZE;
  for (let i = start; i < start + GROUP_SIZE; i++) {
    next[i] = Math.min(1, Math.max(-1, next[i] + delta));
  }
  visitStyle(session, next);
}

export function exportSession(session: StyleSession): string {
  return JSON.stringify({
    version: SESSION_VERSION,
    current: session.current,
    pinned: session.pinned,
    history: session.history,
    selected_classes: session.selectedClasses,
  });
}

export function importSession(json: string): StyleSession {
  let raw: unknown;
  try {
    raw = JSON.parse(json);
  } catch {
    throw new Error('session file is not valid JSON');
  }
  if (typeof raw !== 'object' || raw === null) {
    throw new Error('session file must be a JSON object');
  }
  const obj = raw as Record<string, unknown>;
  if (obj.version !== SESSION_VERSION) {
    throw new Error(`unsupported session version ${obj.version}`);
  }
  const pinnedRaw = obj.pinned;
  if (!Array.isArray(pinnedRaw)) {
    throw new Error('pinned anchors missing');
  }
  const pinned = pinnedRaw.map((p) => {
    const entry = p as Record<string, unknown>;
    if (typeof entry.name !== 'string') {
      throw new Error('pinned anchor needs a string name');
    }
    return { name: entry.name, style: assertStyle(entry.style) };
  });
  const historyRaw = obj.history;
  if (!Array.isArray(historyRaw)) {
    throw new Error('history missing');
  }
  const classesRaw = obj.selected_classes;
  if (
    !Array.isArray(classesRaw) ||
    !classesRaw.every((c) => Number.isInteger(c) && (c as number) >= 0)
  ) {
    throw new Error('selected_classes must be non-negative integers');
  }
  return {
    current: assertStyle(obj.current),
    pinned,
    history: historyRaw.map(assertStyle),
    selectedClasses: classesRaw.map((c) => c as number),
  };
}
