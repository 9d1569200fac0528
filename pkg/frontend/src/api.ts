import type { Rgb01 } from './color.js';

export interface PaletteEntry {
  color: Rgb01;
  semantic: Rgb01;
}

export interface SessionInfo {
  session_id: string;
  k: number;
  palette: PaletteEntry[];
}

export interface StrokePayload {
  pixels: Array<[number, number]>;
  target: Rgb01;
}

export interface StrokeDocument {
  image_width: number;
  image_height: number;
  strokes: StrokePayload[];
}

export interface EditResult {
  png: Uint8Array;
  deltas: number[][];
  energy: number;
  fidelity: number;
  propagation: number;
}

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) return;
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.detail === 'string') detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  throw new ServiceError(res.status, detail);
}

/** Thin client for the color-propagation session API. */
export class SempalClient {
  constructor(public readonly baseUrl: string) {}

  async createSession(
    image: Blob,
    options: { features?: Blob; config?: Record<string, unknown> } = {},
  ): Promise<SessionInfo> {
    const form = new FormData();
    form.append('image', image, 'image.png');
    if (options.features) form.append('features', options.features, 'features.bin');
    if (options.config) form.append('config', JSON.stringify(options.config));
    const res = await fetch(`${this.baseUrl}/sessions`, { method: 'POST', body: form });
    await raiseForStatus(res);
    return (await res.json()) as SessionInfo;
  }

  async edit(
    sessionId: string,
    strokes: StrokeDocument,
    signal?: AbortSignal,
  ): Promise<EditResult> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/edit`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(strokes),
      signal,
    });
    await raiseForStatus(res);
    const body = await res.json();
    const binary = atob(body.image_png_base64);
    const png = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) png[i] = binary.charCodeAt(i);
    return {
      png,
      deltas: body.deltas,
      energy: body.energy,
      fidelity: body.fidelity,
      propagation: body.propagation,
    };
  }

  /** Raw PNG variant of edit, for byte-level comparisons and downloads. */
  async editRaw(
    sessionId: string,
    strokes: StrokeDocument,
    signal?: AbortSignal,
  ): Promise<Uint8Array> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/edit`, {
      method: 'POST',
      headers: { 'content-type': 'application/json', accept: 'image/png' },
      body: JSON.stringify(strokes),
      signal,
    });
    await raiseForStatus(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  weightMapUrl(sessionId: string, entry: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/weights/${entry}`;
  }

  async fetchWeightMap(sessionId: string, entry: number): Promise<Uint8Array> {
    const res = await fetch(this.weightMapUrl(sessionId, entry));
    await raiseForStatus(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  async deleteSession(sessionId: string): Promise<void> {
    await fetch(`${this.baseUrl}/sessions/${sessionId}`, { method: 'DELETE' });
  }
}
