"""HTTP service hosting the human-in-the-loop selection workflow.

Serves session clouds to the browser UI, validates submitted segment and
point-pair selections against the same invariants the register step enforces,
persists them atomically into the session's selection file, and previews the
registration the current selections would produce.  Reads are concurrent;
all mutations serialize through a single writer lock.
"""

from __future__ import annotations

import math
import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import cloud_io
from ..cloud_io import PointPairSelection, SegmentSelection, SelectionSet
from ..errors import DanglingIndex, ElidError, FileNotFound, IncompleteSelections
from ..geometry import PointCloud
from ..pipeline import estimate_registration, estimate_rotation_angles
from ..rotation import build_ring_segment
from ..session import Session, load_session
from ..translation import filter_neighbors
from .schemas import (
    CloudPayload,
    CloudPreview,
    CloudSummary,
    PointPairRequest,
    RingSlice,
    SegmentRequest,
    SelectionOut,
    TransformPreview,
)


class UnknownCloud(ElidError):
    pass


class UnknownSelection(ElidError):
    pass


class SelectionStore:
    """Session state behind the service: cached clouds + the selection list."""

    def __init__(self, session: Session):
        self.session = session
        self._lock = threading.Lock()
        self._clouds: dict[str, PointCloud] = {}
        selection = session.load_selection()
        self.records: list[SegmentSelection | PointPairSelection] = \
            list(selection.segments) + list(selection.pairs)

    def cloud(self, cloud_id: str) -> PointCloud:
        if cloud_id not in self.session.cloud_ids:
            raise UnknownCloud(f"no cloud {cloud_id!r} in this session")
        if cloud_id not in self._clouds:
            self._clouds[cloud_id] = self.session.load_cloud(cloud_id)
        return self._clouds[cloud_id]

    def selection_set(self) -> SelectionSet:
        segments = tuple(r for r in self.records if isinstance(r, SegmentSelection))
        pairs = tuple(r for r in self.records if isinstance(r, PointPairSelection))
        return SelectionSet(segments, pairs)

    def _persist(self) -> None:
        cloud_io.write_selection(self.selection_set(), self.session.selection_path())

    def add(self, record) -> int:
        with self._lock:
            self.records.append(record)
            self._persist()
            return len(self.records) - 1

    def delete(self, index: int) -> None:
        with self._lock:
            if not 0 <= index < len(self.records):
                raise UnknownSelection(f"no selection with id {index}")
            del self.records[index]
            self._persist()


def _selection_out(index: int, record) -> SelectionOut:
    if isinstance(record, SegmentSelection):
        return SelectionOut(id=index, kind="segment", cloud_id=record.cloud_id,
                            indices=list(record.indices))
    return SelectionOut(id=index, kind="pointpair", cloud_id=record.cloud_id,
                        axis=record.axis, index=record.index,
                        ref_cloud_id=record.ref_cloud_id, ref_index=record.ref_index)


def create_app(session_dir, ui_dir=None) -> FastAPI:
    session = load_session(Path(session_dir))
    store = SelectionStore(session)
    app = FastAPI(title="ELiD selection service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.store = store

    @app.exception_handler(ElidError)
    async def elid_error_handler(_, exc: ElidError):
        status = 404 if isinstance(exc, (UnknownCloud, UnknownSelection, FileNotFound)) else 400
        return JSONResponse(status_code=status,
                            content={"error": exc.name, "detail": str(exc)})

    @app.get("/clouds", response_model=list[CloudSummary])
    def list_clouds():
        out = []
        for cid in session.cloud_ids:
            cloud = store.cloud(cid)
            out.append(CloudSummary(
                id=cid, frame_id=cloud.frame_id, point_count=len(cloud),
                ring_count=cloud.ring_count, middle_ring=cloud.ring_count // 2,
                timestamp_ns=cloud.timestamp_ns,
                is_reference=cid == session.reference,
            ))
        return out

    @app.get("/clouds/{cloud_id}", response_model=CloudPayload)
    def get_cloud(cloud_id: str):
        cloud = store.cloud(cloud_id)
        return CloudPayload(
            id=cloud_id, frame_id=cloud.frame_id, ring_count=cloud.ring_count,
            middle_ring=cloud.ring_count // 2,
            x=cloud.xyz[:, 0].tolist(), y=cloud.xyz[:, 1].tolist(),
            z=cloud.xyz[:, 2].tolist(),
            intensity=cloud.intensity.tolist(), ring=cloud.ring.tolist(),
        )

    @app.get("/clouds/{cloud_id}/ring/{ring}", response_model=RingSlice)
    def get_ring(cloud_id: str, ring: int):
        cloud = store.cloud(cloud_id)
        if not 0 <= ring < cloud.ring_count:
            raise UnknownCloud(f"cloud {cloud_id!r} has no ring {ring}")
        idx = cloud.ring_indices(ring)
        pts = cloud.xyz[idx]
        return RingSlice(
            cloud_id=cloud_id, ring=ring, indices=idx.tolist(),
            x=pts[:, 0].tolist(), y=pts[:, 1].tolist(), z=pts[:, 2].tolist(),
        )

    @app.get("/selections", response_model=list[SelectionOut])
    def list_selections():
        return [_selection_out(i, r) for i, r in enumerate(store.records)]

    @app.post("/selections/segment", response_model=SelectionOut, status_code=201)
    def post_segment(req: SegmentRequest):
        cloud = store.cloud(req.cloud_id)
        # Raises the violated invariant (TooFewPoints, NotMiddleRing, ...).
        build_ring_segment(cloud, req.indices, req.cloud_id)
        record = SegmentSelection(req.cloud_id, tuple(int(i) for i in req.indices))
        return _selection_out(store.add(record), record)

    @app.post("/selections/pointpair", response_model=SelectionOut, status_code=201)
    def post_pointpair(req: PointPairRequest):
        cloud = store.cloud(req.cloud_id)
        ref = store.cloud(req.ref_cloud_id)
        for c, idx, label in ((cloud, req.index, req.cloud_id),
                              (ref, req.ref_index, req.ref_cloud_id)):
            if not 0 <= idx < len(c):
                raise DanglingIndex(f"index {idx} out of range for cloud {label!r}")
        filter_neighbors(cloud, req.index)      # EdgeRing / SparseRing surface here
        filter_neighbors(ref, req.ref_index)
        record = PointPairSelection(req.axis, req.cloud_id, req.index,
                                    req.ref_cloud_id, req.ref_index)
        return _selection_out(store.add(record), record)

    @app.delete("/selections/{selection_id}", status_code=204)
    def delete_selection(selection_id: int):
        store.delete(selection_id)

    @app.get("/preview/transform", response_model=TransformPreview)
    def preview_transform():
        previews = []
        for cid in session.cloud_ids:
            if cid == session.reference:
                continue
            missing: list[str] = []
            roll = pitch = yaw = None
            readings = None
            matrix = None
            try:
                r, p, y, readings = estimate_rotation_angles(session, cid)
                roll, pitch, yaw = math.degrees(r), math.degrees(p), math.degrees(y)
            except ElidError as exc:
                missing.append(f"rotation: {exc.name}: {exc}")
            if not missing:
                try:
                    result = estimate_registration(session, cid)
                    matrix = result.transform.homogeneous.tolist()
                except ElidError as exc:
                    missing.append(f"translation: {exc.name}: {exc}")
            previews.append(CloudPreview(
                cloud_id=cid, complete=matrix is not None, missing=missing,
                roll_deg=roll, pitch_deg=pitch, yaw_deg=yaw,
                yaw_readings=readings, matrix=matrix,
            ))
        return TransformPreview(reference=session.reference, clouds=previews)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
