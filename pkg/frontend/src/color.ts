export type Rgb01 = [number, number, number];

/** "#rrggbb" from a color input into unit-range RGB. */
export function hexToRgb01(hex: string): Rgb01 {
  const s = hex.replace(/^#/, '');
  const v = s.length === 3 ? s.split('').map((c) => c + c).join('') : s;
  const n = parseInt(v, 16);
  return [((n >> 16) & 0xff) / 255, ((n >> 8) & 0xff) / 255, (n & 0xff) / 255];
}

export function rgb01ToCss(rgb: Rgb01): string {
  const [r, g, b] = rgb.map((c) => Math.round(c * 255));
  return `rgb(${r}, ${g}, ${b})`;
}
