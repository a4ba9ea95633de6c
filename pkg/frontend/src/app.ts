// Page wiring for the style explorer: sample / nudge / pin / interpolate /
// export / import. All state lives in the StyleSession; the server only
// renders what it is told.

import { ApiClient, ModelInfo } from './api.js';
import {
  SLIDER_GROUPS,
  StyleSession,
  exportSession,
  importSession,
  newSession,
  nudgeStyle,
  pinCurrent,
  seededUniform,
  visitStyle,
} from './session.js';
import { SheetController } from './sheet.js';
import { StripCache } from './strip.js';

const api = new ApiClient('');
const strips = new StripCache(api);

let session: StyleSession;
let info: ModelInfo;
let sheet: SheetController;
let sampleCounter = 1;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function setBanner(message: string | null): void {
  const banner = el<HTMLDivElement>('banner');
  banner.textContent = message ?? '';
  banner.style.display = message === null ? 'none' : 'block';
}

function renderRow(rowId: string, images: Record<string, string>): void {
  let row = document.getElementById(`row-${rowId}`);
  if (row === null) {
    row = document.createElement('div');
    row.id = `row-${rowId}`;
    row.className = 'glyph-row';
    el<HTMLDivElement>('sheet').appendChild(row);
  }
  row.innerHTML = '';
  const label = document.createElement('span');
  label.className = 'row-label';
  label.textContent = rowId;
  row.appendChild(label);
  for (const c of session.selectedClasses) {
    const img = document.createElement('img');
    const b64 = images[String(c)];
    if (b64 !== undefined) {
      img.src = `data:image/png;base64,${b64}`;
      img.width = 48;
      img.height = 48;
      row.appendChild(img);
    }
  }
}

function refreshCurrent(): void {
  void sheet.refreshRow('current', session.current, session.selectedClasses);
}

function refreshPinned(): void {
  for (const anchor of session.pinned) {
    void sheet.refreshRow(anchor.name, anchor.style, session.selectedClasses);
  }
}

function buildSliders(): void {
  const panel = el<HTMLDivElement>('sliders');
  panel.innerHTML = '';
  for (let g = 0; g < SLIDER_GROUPS; g++) {
    const wrap = document.createElement('label');
    wrap.textContent = `dims ${g * 10}–${g * 10 + 9}`;
    const slider = document.createElement('input');
    slider.type = 'range';
    slider.min = '-0.5';
    slider.max = '0.5';
    slider.step = '0.05';
    slider.value = '0';
    slider.addEventListener('change', () => {
      const delta = Number(slider.value);
      slider.value = '0';
      if (delta !== 0) {
        nudgeStyle(session, g, delta);
        refreshCurrent();
      }
    });
    wrap.appendChild(slider);
    panel.appendChild(wrap);
  }
}

async function showStrip(): Promise<void> {
  if (session.pinned.length < 2) {
    setBanner('pin at least two anchors to interpolate');
    return;
  }
  const steps = Number(el<HTMLInputElement>('strip-steps').value) || 8;
  const classId = Number(el<HTMLInputElement>('strip-class').value) || 0;
  const anchors = session.pinned.map((p) => p.style);
  let frames: string[];
  try {
    frames = await strips.frames(anchors, steps, classId);
  } catch (err) {
    setBanner(`interpolation failed: ${err}`);
    return;
  }
  const stripDiv = el<HTMLDivElement>('strip');
  stripDiv.innerHTML = '';
  for (const b64 of frames) {
    const img = document.createElement('img');
    img.src = `data:image/png;base64,${b64}`;
    img.width = 40;
    img.height = 40;
    stripDiv.appendChild(img);
  }
}

function downloadSession(): void {
  const blob = new Blob([exportSession(session)], {
    type: 'application/json',
  });
  const a = document.createElement('a');
  a.href = URL.createObjectURL(blob);
  a.download = 'style-session.json';
  a.click();
  URL.revokeObjectURL(a.href);
}

function uploadSession(file: File): void {
  const reader = new FileReader();
  reader.addEventListener('load', () => {
    try {
      session = importSession(reader.result as string);
    } catch (err) {
      setBanner(`import failed: ${err}`);
      return;
    }
    el<HTMLDivElement>('sheet').innerHTML = '';
    refreshCurrent();
    refreshPinned();
  });
  reader.readAsText(file);
}

async function init(): Promise<void> {
  sheet = new SheetController(api, {
    onRow: (rowId, row) => renderRow(rowId, row.images),
    onBanner: setBanner,
  });
  try {
    info = await api.modelInfo();
  } catch (err) {
    setBanner(`no model loaded: ${err}`);
    info = {
      num_classes: 26,
      image_size: 64,
      style_dim: 100,
      checkpoint_id: 'offline',
      class_labels: [],
    };
  }
  session = newSession(info.num_classes);
  buildSliders();

  el<HTMLButtonElement>('sample').addEventListener('click', () => {
    visitStyle(session, seededUniform(Date.now() + sampleCounter++));
    refreshCurrent();
  });
  el<HTMLButtonElement>('pin').addEventListener('click', () => {
    const name = `anchor-${session.pinned.length + 1}`;
    pinCurrent(session, name);
    refreshPinned();
  });
  el<HTMLButtonElement>('strip-go').addEventListener('click', () => {
    void showStrip();
  });
  el<HTMLButtonElement>('export').addEventListener('click', downloadSession);
  el<HTMLInputElement>('import').addEventListener('input', (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.files && input.files[0]) {
      uploadSession(input.files[0]);
    }
  });
  el<HTMLButtonElement>('retry').addEventListener('click', () => {
    refreshCurrent();
    refreshPinned();
  });
  refreshCurrent();
}

window.addEventListener('load', () => {
  void init();
});
