/** Thin typed client for the selection service. */

import type {
  Axis,
  CloudPayload,
  CloudSummary,
  SelectionOut,
  ServiceError,
  TransformPreview,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly name: string,
    public readonly detail: string,
    public readonly status: number,
  ) {
    super(`${name}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let name = `HTTP${response.status}`;
      let detail = response.statusText;
      try {
        const body = (await response.json()) as ServiceError;
        if (body && body.error) {
          name = body.error;
          detail = body.detail ?? detail;
        }
      } catch {
        // non-JSON error body; keep the HTTP status as the name
      }
      throw new ApiError(name, detail, response.status);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  listClouds(): Promise<CloudSummary[]> {
    return this.request("/clouds");
  }

  getCloud(id: string): Promise<CloudPayload> {
    return this.request(`/clouds/${encodeURIComponent(id)}`);
  }

  listSelections(): Promise<SelectionOut[]> {
    return this.request("/selections");
  }

  submitSegment(cloudId: string, indices: number[]): Promise<SelectionOut> {
    return this.request("/selections/segment", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ cloud_id: cloudId, indices }),
    });
  }

  submitPointPair(
    axis: Axis,
    cloudId: string,
    index: number,
    refCloudId: string,
    refIndex: number,
  ): Promise<SelectionOut> {
    return this.request("/selections/pointpair", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        axis,
        cloud_id: cloudId,
        index,
        ref_cloud_id: refCloudId,
        ref_index: refIndex,
      }),
    });
  }

  deleteSelection(id: number): Promise<void> {
    return this.request(`/selections/${id}`, { method: "DELETE" });
  }

  previewTransform(): Promise<TransformPreview> {
    return this.request("/preview/transform");
  }
}
