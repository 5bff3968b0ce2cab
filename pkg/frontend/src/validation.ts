/**
 * Client-side selection checks.
 *
 * Every rule here mirrors a server invariant and returns the server's exact
 * error name, so anything the client blocks the service would reject with the
 * same name (the service stays authoritative; it checks strictly more).
 */

import type { CloudPayload } from "./types.js";

export type CloudShape = Pick<CloudPayload, "ring_count" | "ring">;

export function middleRing(cloud: CloudShape): number {
  return Math.floor(cloud.ring_count / 2);
}

/** Global indices of one ring in stored (azimuth) order. */
export function ringOrder(cloud: CloudShape, ring: number): number[] {
  const order: number[] = [];
  cloud.ring.forEach((r, i) => {
    if (r === ring) order.push(i);
  });
  return order;
}

export function validateSegment(cloud: CloudShape, indices: number[]): string | null {
  if (indices.length < 3) return "TooFewPoints";
  for (const i of indices) {
    if (!Number.isInteger(i) || i < 0 || i >= cloud.ring.length) return "DanglingIndex";
  }
  const rings = new Set(indices.map((i) => cloud.ring[i]));
  if (rings.size !== 1) return "MixedRings";
  const ring = indices.map((i) => cloud.ring[i])[0];
  if (ring !== middleRing(cloud)) return "NotMiddleRing";
  const order = ringOrder(cloud, ring);
  const position = new Map(order.map((g, p) => [g, p]));
  const positions = indices.map((i) => position.get(i)!).sort((a, b) => a - b);
  for (let k = 1; k < positions.length; k++) {
    if (positions[k] !== positions[0] + k) return "NonConsecutiveIndices";
  }
  return null;
}

export function validatePairPoint(cloud: CloudShape, index: number): string | null {
  if (!Number.isInteger(index) || index < 0 || index >= cloud.ring.length) {
    return "DanglingIndex";
  }
  const ring = cloud.ring[index];
  if (ring === 0 || ring === cloud.ring_count - 1) return "EdgeRing";
  const population = (r: number) => cloud.ring.filter((v) => v === r).length;
  if (population(ring) < 3) return "SparseRing";
  if (population(ring + 1) === 0 || population(ring - 1) === 0) return "SparseRing";
  return null;
}

export function validatePointPair(
  cloud: CloudShape,
  index: number,
  refCloud: CloudShape,
  refIndex: number,
): string | null {
  return validatePairPoint(cloud, index) ?? validatePairPoint(refCloud, refIndex);
}
