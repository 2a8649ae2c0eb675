/**
 * Hue/saturation/lightness to display color, matching the service's
 * terminal renderer so swatches look identical in both clients.
 */

import type { Patch } from "./protocol.js";

export type Rgb = [number, number, number];

/** Round half to even, so byte values agree with the service exactly. */
function roundHalfEven(value: number): number {
  const floor = Math.floor(value);
  const frac = value - floor;
  if (frac > 0.5) return floor + 1;
  if (frac < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

export function hslToRgb(hue: number, sat: number, light: number): Rgb {
  const h = ((hue % 360) + 360) % 360;
  const c = (1 - Math.abs(2 * light - 1)) * sat;
  const x = c * (1 - Math.abs(((h / 60) % 2) - 1));
  const m = light - c / 2;
  const sector = Math.floor(h / 60) % 6;
  const table: Rgb[] = [
    [c, x, 0],
    [x, c, 0],
    [0, c, x],
    [0, x, c],
    [x, 0, c],
    [c, 0, x],
  ];
  const [r, g, b] = table[sector];
  return [r, g, b].map((v) => roundHalfEven((v + m) * 255)) as Rgb;
}

export function cssColor(patch: Patch): string {
  const [r, g, b] = hslToRgb(patch.hue, patch.sat, patch.light);
  return `rgb(${r}, ${g}, ${b})`;
}
