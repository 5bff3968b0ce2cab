/**
 * UI state machine for the setup workflow, free of DOM and WebGL concerns so
 * it can be unit-tested.  Coordinates never originate here: every buffered
 * item is an index into a cloud served by the backend.
 */

import { ApiError, ServiceClient } from "./api.js";
import type { Axis, CloudPayload, CloudSummary, SelectionOut, TransformPreview } from "./types.js";
import { middleRing, ringOrder, validatePairPoint, validateSegment } from "./validation.js";

export type Tool =
  | { kind: "segment" }
  | { kind: "pointpair"; axis: Axis }
  | { kind: "measure" };

export interface PairBuffer {
  index?: number;      // point in the active (non-reference) cloud
  refIndex?: number;   // point in the reference cloud
}

export interface MeasurePick {
  cloudId: string;
  index: number;
}

export class ViewState {
  summaries: CloudSummary[] = [];
  clouds = new Map<string, CloudPayload>();
  reference: string | null = null;
  activeCloud: string | null = null;
  tool: Tool = { kind: "segment" };
  segmentBuffer: number[] = [];
  pairBuffer: PairBuffer = {};
  measureBuffer: MeasurePick[] = [];
  selections: SelectionOut[] = [];
  preview: TransformPreview | null = null;
  previewEnabled = false;
  lastError: string | null = null;

  constructor(private readonly api: ServiceClient) {}

  async load(): Promise<void> {
    this.summaries = await this.api.listClouds();
    this.reference = this.summaries.find((s) => s.is_reference)?.id ?? null;
    for (const summary of this.summaries) {
      this.clouds.set(summary.id, await this.api.getCloud(summary.id));
    }
    const nonReference = this.summaries.find((s) => !s.is_reference);
    this.activeCloud = nonReference?.id ?? this.reference;
    this.selections = await this.api.listSelections();
  }

  cloud(id: string): CloudPayload {
    const payload = this.clouds.get(id);
    if (!payload) throw new Error(`cloud ${id} is not loaded`);
    return payload;
  }

  setTool(tool: Tool): void {
    this.tool = tool;
    this.segmentBuffer = [];
    this.pairBuffer = {};
    this.measureBuffer = [];
    this.lastError = null;
  }

  setActiveCloud(id: string): void {
    this.activeCloud = id;
    this.segmentBuffer = [];
    this.pairBuffer = {};
  }

  highlightRing(cloudId: string): number {
    return middleRing(this.cloud(cloudId));
  }

  /**
   * Feed one picked point into the active tool's buffer.  Returns the
   * violated invariant name when the pick is blocked client-side, else null.
   */
  addPick(cloudId: string, index: number): string | null {
    this.lastError = null;
    if (this.tool.kind === "segment") {
      return this.addSegmentPick(cloudId, index);
    }
    if (this.tool.kind === "pointpair") {
      return this.addPairPick(cloudId, index);
    }
    this.measureBuffer = [...this.measureBuffer.slice(-1), { cloudId, index }];
    return null;
  }

  private addSegmentPick(cloudId: string, index: number): string | null {
    if (cloudId !== this.activeCloud) return "WrongCloud";
    const cloud = this.cloud(cloudId);
    if (cloud.ring[index] !== middleRing(cloud)) return "NotMiddleRing";
    if (this.segmentBuffer.includes(index)) return null; // idempotent pick
    const candidate = [...this.segmentBuffer, index];
    if (candidate.length >= 2) {
      // While building, require the picks to stay one consecutive run.
      const order = ringOrder(cloud, middleRing(cloud));
      const position = new Map(order.map((g, p) => [g, p]));
      const positions = candidate.map((i) => position.get(i)!).sort((a, b) => a - b);
      for (let k = 1; k < positions.length; k++) {
        if (positions[k] !== positions[0] + k) {
          this.lastError = "NonConsecutiveIndices";
          return "NonConsecutiveIndices";
        }
      }
    }
    this.segmentBuffer = candidate;
    return null;
  }

  private addPairPick(cloudId: string, index: number): string | null {
    const blocked = validatePairPoint(this.cloud(cloudId), index);
    if (blocked) {
      this.lastError = blocked;
      return blocked;
    }
    if (cloudId === this.reference) {
      this.pairBuffer = { ...this.pairBuffer, refIndex: index };
      return null;
    }
    if (cloudId !== this.activeCloud) return "WrongCloud";
    this.pairBuffer = { ...this.pairBuffer, index };
    return null;
  }

  segmentReady(): boolean {
    return this.activeCloud !== null
      && validateSegment(this.cloud(this.activeCloud), this.segmentBuffer) === null;
  }

  pairReady(): boolean {
    return this.tool.kind === "pointpair"
      && this.pairBuffer.index !== undefined
      && this.pairBuffer.refIndex !== undefined;
  }

  async submitSegment(): Promise<boolean> {
    if (!this.activeCloud) return false;
    const blocked = validateSegment(this.cloud(this.activeCloud), this.segmentBuffer);
    if (blocked) {
      this.lastError = blocked;
      return false; // blocked before any POST
    }
    try {
      await this.api.submitSegment(this.activeCloud, this.segmentBuffer);
    } catch (err) {
      this.lastError = err instanceof ApiError ? err.name : String(err);
      return false; // buffer preserved for correction
    }
    this.segmentBuffer = [];
    this.selections = await this.api.listSelections();
    return true;
  }

  async submitPointPair(): Promise<boolean> {
    if (this.tool.kind !== "pointpair" || !this.activeCloud || !this.reference) {
      return false;
    }
    const { index, refIndex } = this.pairBuffer;
    if (index === undefined || refIndex === undefined) {
      this.lastError = "IncompletePair";
      return false;
    }
    const blocked = validatePairPoint(this.cloud(this.activeCloud), index)
      ?? validatePairPoint(this.cloud(this.reference), refIndex);
    if (blocked) {
      this.lastError = blocked;
      return false;
    }
    try {
      await this.api.submitPointPair(
        this.tool.axis, this.activeCloud, index, this.reference, refIndex);
    } catch (err) {
      this.lastError = err instanceof ApiError ? err.name : String(err);
      return false;
    }
    this.pairBuffer = {};
    this.selections = await this.api.listSelections();
    return true;
  }

  async deleteSelection(id: number): Promise<void> {
    await this.api.deleteSelection(id);
    this.selections = await this.api.listSelections();
  }

  async refreshPreview(): Promise<void> {
    this.preview = await this.api.previewTransform();
  }

  /** Preview matrix for a cloud, when the preview toggle is on. */
  previewMatrix(cloudId: string): number[][] | null {
    if (!this.previewEnabled || this.preview === null) return null;
    if (cloudId === this.reference) return null;
    const entry = this.preview.clouds.find((c) => c.cloud_id === cloudId);
    return entry?.matrix ?? null;
  }

  /** Position of a point as currently displayed (preview transform applied). */
  displayedPoint(cloudId: string, index: number): [number, number, number] {
    const cloud = this.cloud(cloudId);
    const p: [number, number, number] = [cloud.x[index], cloud.y[index], cloud.z[index]];
    const m = this.previewMatrix(cloudId);
    if (!m) return p;
    return [
      m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + m[0][3],
      m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + m[1][3],
      m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + m[2][3],
    ];
  }

  /** Distance between the two measure picks, or null until both exist. */
  measuredDistance(): number | null {
    if (this.measureBuffer.length !== 2) return null;
    const [a, b] = this.measureBuffer;
    const pa = this.displayedPoint(a.cloudId, a.index);
    const pb = this.displayedPoint(b.cloudId, b.index);
    const dx = pa[0] - pb[0];
    const dy = pa[1] - pb[1];
    const dz = pa[2] - pb[2];
    return Math.sqrt(dx * dx + dy * dy + dz * dz);
  }
}
