export interface PointerSample {
  x: number;
  y: number;
}

/**
 * Rasterize a recorded pointer path with a round brush: every integer pixel
 * within `radius` of the polyline, clipped to the image, deduplicated and
 * sorted by (y, x). Pure and deterministic, so replaying a recorded path
 * always yields the identical pixel set.
 */
export function rasterizeStroke(
  path: PointerSample[],
  radius: number,
  width: number,
  height: number,
): Array<[number, number]> {
  if (path.length === 0 || radius < 0) return [];
  const r2 = radius * radius;
  const hit = new Set<number>();
  const segments: Array<[PointerSample, PointerSample]> =
    path.length === 1
      ? [[path[0], path[0]]]
      : path.slice(1).map((p, i) => [path[i], p] as [PointerSample, PointerSample]);

  for (const [a, b] of segments) {
    const x0 = Math.max(0, Math.floor(Math.min(a.x, b.x) - radius));
    const x1 = Math.min(width - 1, Math.ceil(Math.max(a.x, b.x) + radius));
    const y0 = Math.max(0, Math.floor(Math.min(a.y, b.y) - radius));
    const y1 = Math.min(height - 1, Math.ceil(Math.max(a.y, b.y) + radius));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        if (distSqToSegment(x, y, a, b) <= r2) hit.add(y * width + x);
      }
    }
  }

  const pixels = Array.from(hit, (key) => [key % width, Math.floor(key / width)] as [number, number]);
  pixels.sort((p, q) => (p[1] - q[1]) || (p[0] - q[0]));
  return pixels;
}

function distSqToSegment(px: number, py: number, a: PointerSample, b: PointerSample): number {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const lengthSq = dx * dx + dy * dy;
  let t = 0;
  if (lengthSq > 0) {
    t = ((px - a.x) * dx + (py - a.y) * dy) / lengthSq;
    t = Math.max(0, Math.min(1, t));
  }
  const cx = a.x + t * dx;
  const cy = a.y + t * dy;
  return (px - cx) * (px - cx) + (py - cy) * (py - cy);
}
