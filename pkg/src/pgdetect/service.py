"""Blind annotation queue as an HTTP+JSON service.

Queue items carry exactly {id, text}. Items are handed out under
expiring leases (one active lease per item); submissions are persisted
append-only. Authentication is a static per-annotator token passed in
the ``X-Auth-Token`` header. Errors come back as
``{"error": code, "detail": str}`` with matching status codes.

Endpoints: GET /api/queue/next, POST /api/annotations,
GET /api/progress, GET /api/export, GET /api/schema; ``/`` serves the
browser UI bundle when one is configured.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse

from .annotation import AnnotationRecord, CriteriaSchema, Label, default_schema, resolve_label
from .errors import UnknownCriterionError

DEFAULT_LEASE_SECONDS = 1800


@dataclass
class QueueAssignment:
    item: dict
    assigned_to: str
    assigned_at: float
    lease_seconds: int

    def expired(self, now: float) -> bool:
        return now - self.assigned_at > self.lease_seconds


class ServiceError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail


class AnnotationQueue:
    """Lease bookkeeping and append-only record storage.

    All queue mutations run under one lock, so an item can never be
    leased to two annotators at once; reads only take snapshots.
    """

    def __init__(
        self,
        items,
        schema: CriteriaSchema | None = None,
        records_path=None,
        lease_seconds: int = DEFAULT_LEASE_SECONDS,
        clock=time.monotonic,
    ):
        for item in items:
            if set(item) != {"id", "text"}:
                raise ValueError("queue items must carry exactly id and text")
        ids = [item["id"] for item in items]
        if len(set(ids)) != len(ids):
            raise ValueError("queue item ids must be unique")
        self.items = list(items)
        self.schema = schema or default_schema()
        self.records_path = Path(records_path) if records_path else None
        self.lease_seconds = lease_seconds
        self.clock = clock
        self._lock = threading.Lock()
        self._leases: dict[str, QueueAssignment] = {}
        self._records: list[AnnotationRecord] = []
        self._annotated: set[str] = set()
        if self.records_path and self.records_path.exists():
            for line in self.records_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = AnnotationRecord.from_dict(json.loads(line))
                    self._records.append(rec)
                    self._annotated.add(rec.post_id)

    def _drop_expired(self, now: float) -> None:
        expired = [pid for pid, lease in self._leases.items() if lease.expired(now)]
        for pid in expired:
            del self._leases[pid]

    def next_item(self, annotator_id: str) -> QueueAssignment | None:
        now = self.clock()
        with self._lock:
            self._drop_expired(now)
            for lease in self._leases.values():
                if lease.assigned_to == annotator_id:
                    lease.assigned_at = now  # re-fetch refreshes the lease
                    return lease
            for item in self.items:
                pid = item["id"]
                if pid in self._annotated or pid in self._leases:
                    continue
                lease = QueueAssignment(
                    item=item,
                    assigned_to=annotator_id,
                    assigned_at=now,
                    lease_seconds=self.lease_seconds,
                )
                self._leases[pid] = lease
                return lease
        return None

    def submit(self, annotator_id: str, record: AnnotationRecord) -> str:
        if record.annotator_id != annotator_id:
            raise ServiceError(403, "forbidden", "record annotator does not match token")
        try:
            resolve_label(record, self.schema)  # validates codes and flags
        except UnknownCriterionError as exc:
            raise ServiceError(400, "validation", str(exc)) from exc
        now = self.clock()
        with self._lock:
            self._drop_expired(now)
            known = {item["id"] for item in self.items}
            if record.post_id not in known:
                raise ServiceError(404, "not_found", f"unknown item {record.post_id}")
            if any(
                r.post_id == record.post_id and r.annotator_id == annotator_id
                for r in self._records
            ):
                raise ServiceError(409, "conflict", "already submitted by this annotator")
            if record.post_id in self._annotated:
                raise ServiceError(409, "conflict", "item already annotated")
            lease = self._leases.get(record.post_id)
            if lease is not None and lease.assigned_to != annotator_id:
                raise ServiceError(409, "lease_expired", "item is leased to another annotator")
            self._records.append(record)
            self._annotated.add(record.post_id)
            self._leases.pop(record.post_id, None)
            if self.records_path:
                with open(self.records_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
        return record.post_id

    def progress(self) -> dict:
        with self._lock:
            inconclusive = sum(
                1
                for r in self._records
                if resolve_label(r, self.schema) is Label.INCONCLUSIVE
            )
            annotated = len(self._annotated)
        total = len(self.items)
        return {
            "total": total,
            "annotated": annotated,
            "inconclusive_so_far": inconclusive,
            "remaining": total - annotated,
        }

    def export(self) -> list:
        with self._lock:
            return [r.to_dict() for r in self._records]


def create_app(
    queue_items,
    tokens: dict,
    schema: CriteriaSchema | None = None,
    records_path=None,
    lease_seconds: int = DEFAULT_LEASE_SECONDS,
    clock=time.monotonic,
    static_dir=None,
) -> FastAPI:
    """Build the service around a blind queue.

    ``tokens`` maps auth token -> annotator id.
    """
    queue = AnnotationQueue(
        queue_items,
        schema=schema,
        records_path=records_path,
        lease_seconds=lease_seconds,
        clock=clock,
    )
    app = FastAPI(title="annotation service", docs_url=None, redoc_url=None)
    app.state.queue = queue
    static = Path(static_dir) if static_dir else None

    def authed(token: str | None) -> str:
        if token is None or token not in tokens:
            raise ServiceError(401, "unauthorized", "missing or unknown token")
        return tokens[token]

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.code, "detail": exc.detail}
        )

    @app.get("/api/queue/next")
    def queue_next(x_auth_token: str | None = Header(default=None)):
        annotator = authed(x_auth_token)
        lease = queue.next_item(annotator)
        if lease is None:
            return {"item": None, "exhausted": True}
        return {
            "item": lease.item,
            "lease_seconds": lease.lease_seconds,
            "exhausted": False,
        }

    @app.post("/api/annotations")
    async def submit(request: Request, x_auth_token: str | None = Header(default=None)):
        annotator = authed(x_auth_token)
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            raise ServiceError(400, "validation", "body is not valid JSON") from exc
        if not isinstance(body, dict) or "post_id" not in body:
            raise ServiceError(400, "validation", "body must carry post_id")
        body.setdefault("annotator_id", annotator)
        try:
            record = AnnotationRecord.from_dict(body)
        except (KeyError, ValueError) as exc:
            raise ServiceError(400, "validation", f"malformed record: {exc}") from exc
        stored = queue.submit(annotator, record)
        return {"stored": stored}

    @app.get("/api/progress")
    def progress():
        return queue.progress()

    @app.get("/api/export")
    def export():
        lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in queue.export())
        return PlainTextResponse(lines, media_type="application/jsonl")

    @app.get("/api/schema")
    def schema_endpoint():
        return queue.schema.to_dict()

    @app.get("/")
    def index():
        if static and (static / "index.html").exists():
            return FileResponse(static / "index.html")
        return {"service": "annotation", "endpoints": [
            "/api/queue/next", "/api/annotations", "/api/progress",
            "/api/export", "/api/schema",
        ]}

    if static and (static / "assets").is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/assets", StaticFiles(directory=str(static / "assets")), name="assets")

    return app
