import { SempalClient, SessionInfo, StrokeDocument } from './api.js';
import { hexToRgb01, rgb01ToCss, Rgb01 } from './color.js';
import { PointerSample, rasterizeStroke } from './raster.js';
import { PreviewScheduler } from './scheduler.js';

interface UiStroke {
  path: PointerSample[];
  radius: number;
  target: Rgb01;
  pixels: Array<[number, number]>;
}

const PREVIEW_DEBOUNCE_MS = 400;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const apiInput = el<HTMLInputElement>('api-url');
const fileInput = el<HTMLInputElement>('image-file');
const featureInput = el<HTMLInputElement>('feature-file');
const canvas = el<HTMLCanvasElement>('canvas');
const ctx = canvas.getContext('2d')!;
const radiusInput = el<HTMLInputElement>('brush-radius');
const colorInput = el<HTMLInputElement>('brush-color');
const propagateBtn = el<HTMLButtonElement>('propagate');
const clearBtn = el<HTMLButtonElement>('clear-strokes');
const toggleBtn = el<HTMLButtonElement>('toggle-view');
const downloadBtn = el<HTMLButtonElement>('download');
const overlaySelect = el<HTMLSelectElement>('overlay-entry');
const swatchesDiv = el<HTMLDivElement>('swatches');
const statusDiv = el<HTMLDivElement>('status');
const energyDiv = el<HTMLDivElement>('energy');

const params = new URLSearchParams(location.search);
apiInput.value = params.get('api') ?? 'http://127.0.0.1:8000';

let client = new SempalClient(apiInput.value);
let session: SessionInfo | null = null;
let original: ImageBitmap | null = null;
let edited: ImageBitmap | null = null;
let editedPng: Uint8Array | null = null;
let showingOriginal = false;
let strokes: UiStroke[] = [];
let activePath: PointerSample[] | null = null;
const overlayCache = new Map<number, ImageBitmap>();

apiInput.addEventListener('change', () => {
  client = new SempalClient(apiInput.value);
});

function toast(message: string, isError = false): void {
  statusDiv.textContent = message;
  statusDiv.className = isError ? 'status error' : 'status';
}

function currentView(): ImageBitmap | null {
  if (showingOriginal) return original;
  return edited ?? original;
}

function redraw(): void {
  const view = currentView();
  if (!view) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(view, 0, 0);
  const entry = overlaySelect.value === '' ? null : Number(overlaySelect.value);
  if (entry !== null && overlayCache.has(entry)) {
    ctx.save();
    ctx.globalAlpha = 0.5;
    ctx.drawImage(overlayCache.get(entry)!, 0, 0);
    ctx.restore();
  }
  drawStrokeMarks();
}

function drawStrokeMarks(): void {
  ctx.save();
  ctx.lineCap = 'round';
  ctx.lineJoin = 'round';
  for (const stroke of strokes.concat(activeStrokePreview())) {
    ctx.strokeStyle = rgb01ToCss(stroke.target);
    ctx.lineWidth = stroke.radius * 2;
    ctx.globalAlpha = 0.35;
    ctx.beginPath();
    const [first, ...rest] = stroke.path;
    ctx.moveTo(first.x, first.y);
    if (rest.length === 0) ctx.lineTo(first.x + 0.01, first.y);
    for (const p of rest) ctx.lineTo(p.x, p.y);
    ctx.stroke();
  }
  ctx.restore();
}

function activeStrokePreview(): UiStroke[] {
  if (!activePath || activePath.length === 0) return [];
  return [{
    path: activePath,
    radius: Number(radiusInput.value),
    target: hexToRgb01(colorInput.value),
    pixels: [],
  }];
}

function renderSwatches(info: SessionInfo): void {
  swatchesDiv.replaceChildren();
  overlaySelect.replaceChildren(new Option('no overlay', ''));
  info.palette.forEach((entry, i) => {
    const chip = document.createElement('button');
    chip.className = 'swatch';
    chip.style.background = rgb01ToCss(entry.color);
    chip.title = `entry ${i}: pick as brush color`;
    chip.addEventListener('click', () => {
      const [r, g, b] = entry.color.map((c) => Math.round(c * 255));
      colorInput.value = `#${((r << 16) | (g << 8) | b).toString(16).padStart(6, '0')}`;
    });
    swatchesDiv.append(chip);
    overlaySelect.append(new Option(`entry ${i} weights`, String(i)));
  });
}

async function uploadAndStart(): Promise<void> {
  const file = fileInput.files?.[0];
  if (!file) return;
  toast('extracting palette…');
  try {
    const features = featureInput.files?.[0] ?? undefined;
    const info = await client.createSession(file, { features });
    session = info;
    strokes = [];
    edited = null;
    editedPng = null;
    overlayCache.clear();
    original = await createImageBitmap(file);
    canvas.width = original.width;
    canvas.height = original.height;
    renderSwatches(info);
    redraw();
    toast(`session ready: ${info.k} palette entr${info.k === 1 ? 'y' : 'ies'}`);
  } catch (err) {
    toast(String(err), true);
  }
}

function strokeDocument(): StrokeDocument {
  return {
    image_width: canvas.width,
    image_height: canvas.height,
    strokes: strokes.map((s) => ({ pixels: s.pixels, target: s.target })),
  };
}

const scheduler = new PreviewScheduler(
  PREVIEW_DEBOUNCE_MS,
  async (signal) => {
    if (!session) return;
    if (strokes.length === 0) {
      edited = null;
      editedPng = null;
      energyDiv.textContent = '';
      redraw();
      return;
    }
    toast('propagating…');
    const result = await client.edit(session.session_id, strokeDocument(), signal);
    editedPng = result.png;
    edited = await createImageBitmap(new Blob([result.png.slice()], { type: 'image/png' }));
    showingOriginal = false;
    energyDiv.textContent =
      `energy ${result.energy.toExponential(3)} = fidelity ${result.fidelity.toExponential(3)}`
      + ` + propagation ${result.propagation.toExponential(3)}`;
    redraw();
    toast('preview updated');
  },
  // Errors keep the previous preview intact.
  (err) => toast(String(err), true),
);

function canvasPoint(event: PointerEvent): PointerSample {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * canvas.width,
    y: ((event.clientY - rect.top) / rect.height) * canvas.height,
  };
}

canvas.addEventListener('pointerdown', (event) => {
  if (!session) return;
  canvas.setPointerCapture(event.pointerId);
  activePath = [canvasPoint(event)];
  redraw();
});

canvas.addEventListener('pointermove', (event) => {
  if (!activePath) return;
  activePath.push(canvasPoint(event));
  redraw();
});

canvas.addEventListener('pointerup', () => {
  if (!activePath) return;
  const pixels = rasterizeStroke(
    activePath, Number(radiusInput.value), canvas.width, canvas.height,
  );
  if (pixels.length > 0) {
    strokes.push({
      path: activePath,
      radius: Number(radiusInput.value),
      target: hexToRgb01(colorInput.value),
      pixels,
    });
    scheduler.request();
  }
  activePath = null;
  redraw();
});

propagateBtn.addEventListener('click', () => void scheduler.flush());

clearBtn.addEventListener('click', () => {
  strokes = [];
  scheduler.cancel();
  edited = null;
  editedPng = null;
  energyDiv.textContent = '';
  redraw();
  toast('strokes cleared; showing original');
});

toggleBtn.addEventListener('click', () => {
  showingOriginal = !showingOriginal;
  toggleBtn.textContent = showingOriginal ? 'show edited' : 'show original';
  redraw();
});

downloadBtn.addEventListener('click', () => {
  if (!editedPng) return;
  const url = URL.createObjectURL(new Blob([editedPng.slice()], { type: 'image/png' }));
  const link = document.createElement('a');
  link.href = url;
  link.download = 'edited.png';
  link.click();
  URL.revokeObjectURL(url);
});

overlaySelect.addEventListener('change', async () => {
  if (!session) return;
  const value = overlaySelect.value;
  if (value === '') {
    redraw();
    return;
  }
  const entry = Number(value);
  if (!overlayCache.has(entry)) {
    try {
      const png = await client.fetchWeightMap(session.session_id, entry);
      overlayCache.set(
        entry, await createImageBitmap(new Blob([png.slice()], { type: 'image/png' })),
      );
    } catch (err) {
      toast(String(err), true);
      overlaySelect.value = '';
      return;
    }
  }
  redraw();
});

fileInput.addEventListener('change', () => void uploadAndStart());
