/**
 * Round-trip tests against a live service instance. A server is spawned on a
 * private port; the fixture PNGs were written by the same encoder the service
 * uses, so identity responses can be compared byte for byte.
 */
import { ChildProcess, spawn } from 'node:child_process';
import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { SempalClient } from '../src/api.js';
import { rasterizeStroke } from '../src/raster.js';

const fixtures = join(dirname(fileURLToPath(import.meta.url)), 'fixtures');
const constPng = readFileSync(join(fixtures, 'const48.png'));
const whitePng = readFileSync(join(fixtures, 'white48.png'));
const CONST_VALUE = 107 / 255; // channel value of const48.png, exactly representable

let server: ChildProcess | null = null;
let client: SempalClient;

async function waitForService(base: string, attempts = 100): Promise<void> {
  for (let i = 0; i < attempts; i++) {
    try {
      const res = await fetch(`${base}/sessions/probe`, { method: 'DELETE' });
      if (res.status === 204) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service at ${base} did not come up`);
}

beforeAll(async () => {
  const port = 8900 + Math.floor(Math.random() * 600);
  const base = `http://127.0.0.1:${port}`;
  server = spawn('python3', ['-m', 'sempal.service'], {
    env: { ...process.env, SEMPAL_HOST: '127.0.0.1', SEMPAL_PORT: String(port) },
    stdio: 'ignore',
  });
  await waitForService(base);
  client = new SempalClient(base);
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe('UI round trip against the live service', () => {
  it('no-op stroke leaves the preview byte-identical to the original', async () => {
    const info = await client.createSession(new Blob([constPng], { type: 'image/png' }), {
      config: { superpixels: 64 },
    });
    expect(info.k).toBe(1);

    // Recorded pointer path -> deterministic pixel set, twice.
    const path = [
      { x: 10.3, y: 12.1 },
      { x: 14.8, y: 12.9 },
      { x: 19.2, y: 14.4 },
    ];
    const pixels = rasterizeStroke(path, 3, 48, 48);
    expect(pixels).toEqual(rasterizeStroke(path, 3, 48, 48));
    expect(pixels.length).toBeGreaterThan(0);

    const doc = {
      image_width: 48,
      image_height: 48,
      strokes: [{ pixels, target: [CONST_VALUE, CONST_VALUE, CONST_VALUE] as [number, number, number] }],
    };
    const png = await client.editRaw(info.session_id, doc);
    expect(Buffer.from(png).equals(constPng)).toBe(true);

    const parsed = await client.edit(info.session_id, doc);
    expect(Buffer.from(parsed.png).equals(constPng)).toBe(true);
    expect(Math.max(...parsed.deltas.flat().map(Math.abs))).toBeLessThan(1e-8);
    await client.deleteSession(info.session_id);
  }, 60_000);

  it('weight overlay for a k=1 session renders uniformly', async () => {
    const info = await client.createSession(new Blob([constPng], { type: 'image/png' }), {
      config: { superpixels: 64 },
    });
    expect(info.k).toBe(1);
    const map = await client.fetchWeightMap(info.session_id, 0);
    expect(Buffer.from(map).equals(whitePng)).toBe(true);
    await client.deleteSession(info.session_id);
  }, 60_000);

  it('repeated identical edits return identical bytes', async () => {
    const info = await client.createSession(new Blob([constPng], { type: 'image/png' }), {
      config: { superpixels: 64 },
    });
    const pixels = rasterizeStroke([{ x: 24, y: 24 }], 4, 48, 48);
    const doc = {
      image_width: 48,
      image_height: 48,
      strokes: [{ pixels, target: [0.8, 0.3, 0.2] as [number, number, number] }],
    };
    const first = await client.editRaw(info.session_id, doc);
    const second = await client.editRaw(info.session_id, doc);
    expect(Buffer.from(first).equals(Buffer.from(second))).toBe(true);
    await client.deleteSession(info.session_id);
  }, 60_000);

  it('surfaces service errors with status and detail', async () => {
    await expect(
      client.edit('not-a-session', { image_width: 1, image_height: 1, strokes: [] }),
    ).rejects.toThrow(/404/);
  });
});
