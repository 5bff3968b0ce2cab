import type { CloudPayload, CloudSummary, SelectionOut } from "../src/types.js";

/** Three rings of four points each; ring 1 is the middle ring. */
export function fakeCloud(id: string, offset = 0): CloudPayload {
  const rings = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2];
  const n = rings.length;
  const x: number[] = [];
  const y: number[] = [];
  const z: number[] = [];
  for (let i = 0; i < n; i++) {
    const angle = (i % 4) * (Math.PI / 2);
    const radius = 2 + rings[i] * 0.1;
    x.push(offset + radius * Math.cos(angle));
    y.push(radius * Math.sin(angle));
    z.push(rings[i] * 0.3);
  }
  return {
    id, frame_id: id, ring_count: 3, middle_ring: 1,
    x, y, z, intensity: new Array(n).fill(0.5), ring: rings,
  };
}

export function summaries(): CloudSummary[] {
  return [
    { id: "s0", frame_id: "s0", point_count: 12, ring_count: 3, middle_ring: 1,
      timestamp_ns: 0, is_reference: true },
    { id: "s1", frame_id: "s1", point_count: 12, ring_count: 3, middle_ring: 1,
      timestamp_ns: 0, is_reference: false },
  ];
}

interface Call {
  path: string;
  init?: RequestInit;
}

/** Canned-response fetch double recording every request. */
export function fakeFetch(routes: Record<string, (init?: RequestInit) => unknown>) {
  const calls: Call[] = [];
  const impl = async (path: string, init?: RequestInit): Promise<Response> => {
    calls.push({ path, init });
    const key = `${init?.method ?? "GET"} ${path}`;
    const handler = routes[key];
    if (!handler) {
      return new Response(JSON.stringify({ error: "UnknownRoute", detail: key }),
        { status: 404, headers: { "content-type": "application/json" } });
    }
    const result = handler(init);
    if (result instanceof Response) return result;
    if (result === undefined) return new Response(null, { status: 204 });
    return new Response(JSON.stringify(result),
      { status: 200, headers: { "content-type": "application/json" } });
  };
  return { impl, calls };
}

export function errorResponse(name: string, detail: string, status = 400): Response {
  return new Response(JSON.stringify({ error: name, detail }),
    { status, headers: { "content-type": "application/json" } });
}

export function selection(id: number, kind: "segment" | "pointpair"): SelectionOut {
  return kind === "segment"
    ? { id, kind, cloud_id: "s1", indices: [4, 5, 6] }
    : { id, kind, cloud_id: "s1", axis: "x", index: 5, ref_cloud_id: "s0", ref_index: 6 };
}
