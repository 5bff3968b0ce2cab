import { describe, expect, it } from "vitest";

import { middleRing, ringOrder, validatePointPair, validateSegment } from "../src/validation.js";
import parity from "./parity_cases.json";

const cloud = { ring_count: parity.cloud.ring_count, ring: parity.cloud.rings };

describe("shared parity table", () => {
  // The same table drives a server-side test (tests/test_validation_parity.py):
  // whatever the client blocks, the service must reject with the same name.
  for (const c of parity.cases) {
    it(c.name, () => {
      const got = c.kind === "segment"
        ? validateSegment(cloud, c.indices as number[])
        : validatePointPair(cloud, c.index as number, cloud, c.ref_index as number);
      expect(got).toBe(c.expect);
    });
  }
});

describe("validateSegment", () => {
  it("accepts any consecutive middle-ring run", () => {
    expect(validateSegment(cloud, [5, 6, 7])).toBeNull();
    expect(validateSegment(cloud, [6, 5, 4])).toBeNull(); // order-insensitive
  });

  it("rejects duplicates as non-consecutive", () => {
    expect(validateSegment(cloud, [4, 4, 5])).toBe("NonConsecutiveIndices");
  });
});

describe("helpers", () => {
  it("middle ring matches floor(ring_count / 2)", () => {
    expect(middleRing(cloud)).toBe(1);
    expect(middleRing({ ring_count: 16, ring: [] })).toBe(8);
  });

  it("ring order lists global indices in stored order", () => {
    expect(ringOrder(cloud, 1)).toEqual([4, 5, 6, 7]);
  });
});

describe("validatePointPair", () => {
  it("flags sparse rings", () => {
    const sparse = { ring_count: 3, ring: [0, 1, 1, 2] };
    expect(validatePointPair(sparse, 1, sparse, 2)).toBe("SparseRing");
  });

  it("checks the reference point too", () => {
    expect(validatePointPair(cloud, 5, cloud, 0)).toBe("EdgeRing");
  });
});
