/** Wire types of the selection service (mirrors the pydantic schemas). */

export interface CloudSummary {
  id: string;
  frame_id: string;
  point_count: number;
  ring_count: number;
  middle_ring: number;
  timestamp_ns: number;
  is_reference: boolean;
}

export interface CloudPayload {
  id: string;
  frame_id: string;
  ring_count: number;
  middle_ring: number;
  x: number[];
  y: number[];
  z: number[];
  intensity: number[];
  ring: number[];
}

export type Axis = "x" | "y" | "z";

export interface SelectionOut {
  id: number;
  kind: "segment" | "pointpair";
  cloud_id: string;
  indices?: number[] | null;
  axis?: string | null;
  index?: number | null;
  ref_cloud_id?: string | null;
  ref_index?: number | null;
}

export interface CloudPreview {
  cloud_id: string;
  complete: boolean;
  missing: string[];
  roll_deg?: number | null;
  pitch_deg?: number | null;
  yaw_deg?: number | null;
  yaw_readings?: number | null;
  matrix?: number[][] | null;
}

export interface TransformPreview {
  reference: string;
  clouds: CloudPreview[];
}

export interface ServiceError {
  error: string;
  detail: string;
}
