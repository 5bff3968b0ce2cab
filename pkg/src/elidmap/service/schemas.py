"""Request/response models for the selection service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class CloudSummary(BaseModel):
    id: str
    frame_id: str
    point_count: int
    ring_count: int
    middle_ring: int
    timestamp_ns: int
    is_reference: bool


class CloudPayload(BaseModel):
    id: str
    frame_id: str
    ring_count: int
    middle_ring: int
    x: list[float]
    y: list[float]
    z: list[float]
    intensity: list[float]
    ring: list[int]


class RingSlice(BaseModel):
    cloud_id: str
    ring: int
    indices: list[int]
    x: list[float]
    y: list[float]
    z: list[float]


class SegmentRequest(BaseModel):
    cloud_id: str
    indices: list[int] = Field(min_length=1)


class PointPairRequest(BaseModel):
    axis: Literal["x", "y", "z"]
    cloud_id: str
    index: int
    ref_cloud_id: str
    ref_index: int


class SelectionOut(BaseModel):
    id: int
    kind: Literal["segment", "pointpair"]
    cloud_id: str
    indices: Optional[list[int]] = None
    axis: Optional[str] = None
    index: Optional[int] = None
    ref_cloud_id: Optional[str] = None
    ref_index: Optional[int] = None


class CloudPreview(BaseModel):
    cloud_id: str
    complete: bool
    missing: list[str]
    roll_deg: Optional[float] = None
    pitch_deg: Optional[float] = None
    yaw_deg: Optional[float] = None
    yaw_readings: Optional[int] = None
    matrix: Optional[list[list[float]]] = None


class TransformPreview(BaseModel):
    reference: str
    clouds: list[CloudPreview]


class ErrorBody(BaseModel):
    error: str
    detail: str
