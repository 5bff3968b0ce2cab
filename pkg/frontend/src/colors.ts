/** Per-point color construction, kept pure so it can be unit-tested. */

import type { CloudPayload } from "./types.js";

export const SOURCE_PALETTE = [
  [0.85, 0.16, 0.16], // red
  [0.12, 0.47, 0.71],
  [0.17, 0.63, 0.17],
  [0.58, 0.40, 0.74],
];
export const REFERENCE_COLOR = [0.15, 0.15, 0.15]; // the fixed cloud renders dark
export const MIDDLE_RING_BOOST = 1.9;
export const SEGMENT_COLOR = [1.0, 0.87, 0.0];
export const PAIR_COLOR = [0.0, 0.95, 0.85];
export const MEASURE_COLOR = [1.0, 0.2, 0.9];

export interface HighlightSpec {
  middleRing: number | null;
  segment: Set<number>;
  pair: Set<number>;
  measure: Set<number>;
}

export function sourceColor(order: number, isReference: boolean): number[] {
  if (isReference) return REFERENCE_COLOR;
  return SOURCE_PALETTE[order % SOURCE_PALETTE.length];
}

export function buildColors(
  cloud: Pick<CloudPayload, "ring">,
  base: number[],
  spec: HighlightSpec,
): Float32Array {
  const n = cloud.ring.length;
  const out = new Float32Array(n * 3);
  for (let i = 0; i < n; i++) {
    let c = base;
    if (spec.middleRing !== null && cloud.ring[i] === spec.middleRing) {
      c = base.map((v) => Math.min(1, v * MIDDLE_RING_BOOST + 0.12));
    }
    if (spec.measure.has(i)) c = MEASURE_COLOR;
    if (spec.pair.has(i)) c = PAIR_COLOR;
    if (spec.segment.has(i)) c = SEGMENT_COLOR;
    out[i * 3] = c[0];
    out[i * 3 + 1] = c[1];
    out[i * 3 + 2] = c[2];
  }
  return out;
}
