"""HTTP service: upload exports, poll jobs, query the map/timeline/topics.

Uploads enqueue a pipeline job and return immediately; clients poll
GET /jobs/{id} (an optional webhook fires on completion). Query responses
are serialized deterministically (sorted keys, stable list order) so the
same query always returns byte-identical payloads. Request logging carries
no content fields, and no endpoint ever serves raw export bytes.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from starlette.datastructures import UploadFile

from .config import DatasetConfig
from .contours import density_contours, density_rank
from .errors import AmbiguousExport, NotFound, UnknownExport
from .layout import Layout2D, semantic_axes_layout
from .model import EmbeddedItem, EnrichedItem, parse_timestamp
from .embed import read_vectors
from .pipeline import PipelineContext, group_files_by_platform, run_pipeline
from .store import Stage, stage_index
from .temporal import slice_until
from .topics import TopicTree

log = logging.getLogger("mirror.server")

JOB_STATES = ("queued", "running", "failed", "done")
_TERMINAL = ("failed", "done")

# Level-of-detail thresholds over the [0, map_zoom_levels) zoom range.
LOD_TITLE_ZOOM = 3
LOD_THUMBNAIL_ZOOM = 5


@dataclass
class Job:
    job_id: str
    dataset_id: str
    kind: str
    state: str = "queued"
    progress: list[str] = field(default_factory=list)
    error: str | None = None
    result: dict = field(default_factory=dict)
    webhook_url: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "dataset_id": self.dataset_id,
            "kind": self.kind,
            "state": self.state,
            "progress": self.progress,
            "error": self.error,
            "result": self.result,
        }


class JobManager:
    """One background worker runs pipeline jobs; many readers poll state."""

    def __init__(self, webhook_post: Callable[[str, dict], None] | None = None):
        self._jobs: dict[str, Job] = {}
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._webhook_post = webhook_post or _default_webhook_post
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, dataset_id: str, kind: str, fn: Callable[[Job], dict | None],
               webhook_url: str | None = None) -> Job:
        job = Job(job_id=uuid.uuid4().hex[:12], dataset_id=dataset_id, kind=kind,
                  webhook_url=webhook_url)
        with self._lock:
            self._jobs[job.job_id] = job
        self._queue.put((job, fn))
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def mark_progress(self, job: Job, stage: str) -> None:
        with self._lock:
            if job.state in _TERMINAL:
                raise RuntimeError("terminal jobs are immutable")
            job.progress.append(stage)

    def _finish(self, job: Job, state: str, error: str | None = None,
                result: dict | None = None) -> None:
        with self._lock:
            if job.state in _TERMINAL:
                return
            job.state = state
            job.error = error
            if result:
                job.result = result
        if job.webhook_url:
            try:
                self._webhook_post(job.webhook_url, job.to_dict())
            except Exception as exc:
                log.warning("webhook delivery failed: %s", exc)

    def _run(self) -> None:
        while True:
            job, fn = self._queue.get()
            with self._lock:
                job.state = "running"
            try:
                result = fn(job)
                self._finish(job, "done", result=result or {})
            except Exception as exc:
                log.exception("job %s failed", job.job_id)
                self._finish(job, "failed", error=str(exc))

    def wait(self, job_id: str, timeout: float = 120.0) -> Job:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self.get(job_id)
            if job and job.state in _TERMINAL:
                return job
            time.sleep(0.02)
        raise TimeoutError(f"job {job_id} did not finish in {timeout}s")


def _default_webhook_post(url: str, payload: dict) -> None:
    import requests

    requests.post(url, json=payload, timeout=5)


def canonical_json(payload) -> Response:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return Response(content=body, media_type="application/json")


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def create_app(store_root: Path, ctx: PipelineContext | None = None,
               webhook_post: Callable[[str, dict], None] | None = None) -> FastAPI:
    from .store import DatasetStore

    if ctx is None:
        ctx = PipelineContext(store=DatasetStore(Path(store_root)))
    store = ctx.store
    jobs = JobManager(webhook_post=webhook_post)
    app = FastAPI(title="mirror", docs_url=None, redoc_url=None)
    app.state.ctx = ctx
    app.state.jobs = jobs
    cache: dict[tuple, object] = {}

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        start = time.monotonic()
        response = await call_next(request)
        log.info("%s %s -> %s (%.1f ms)", request.method, request.url.path,
                 response.status_code, (time.monotonic() - start) * 1000)
        return response

    # -- helpers ------------------------------------------------------------

    def load_json_artifact(dataset_id: str, name: str):
        dataset = store.get(dataset_id)
        key = (dataset_id, name, dataset.artifacts.get(name))
        if key not in cache:
            cache[key] = json.loads(store.get_artifact(dataset_id, name))
        return cache[key]

    def dataset_ready(dataset_id: str) -> bool:
        return stage_index(store.get(dataset_id).stage) >= stage_index(Stage.READY)

    def config_of(dataset_id: str) -> DatasetConfig:
        return DatasetConfig.from_dict(store.get(dataset_id).config)

    # -- endpoints ------------------------------------------------------------

    @app.post("/datasets", status_code=202)
    async def upload_dataset(request: Request, webhook_url: str | None = None):
        form = await request.form()
        uploads = [v for v in form.multi_items() if isinstance(v[1], UploadFile)]
        if not uploads:
            return _error(422, "no files uploaded")
        files = []
        total = 0
        for _, upload in uploads:
            data = await upload.read()
            total += len(data)
            files.append((upload.filename or "upload", data))
        if total > ctx.config.max_upload_bytes:
            return _error(413, "upload exceeds the size limit")
        try:
            group_files_by_platform(files)
        except (UnknownExport, AmbiguousExport) as exc:
            return _error(422, str(exc))

        dataset = store.create_dataset(ctx.config)
        store.save_raw(dataset.dataset_id, files)

        def run(job: Job):
            run_pipeline(ctx, dataset.dataset_id,
                         on_stage=lambda stage: jobs.mark_progress(job, stage.value))

        job = jobs.submit(dataset.dataset_id, "pipeline", run, webhook_url)
        return JSONResponse(status_code=202, content={
            "dataset_id": dataset.dataset_id, "job_id": job.job_id})

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            return _error(404, "job not found")
        return canonical_json(job.to_dict())

    @app.get("/datasets")
    def list_datasets():
        out = []
        for dataset_id in store.list_datasets():
            dataset = store.get(dataset_id)
            out.append({"dataset_id": dataset_id, "stage": dataset.stage.value,
                        "created_at": dataset.created_at})
        return canonical_json({"datasets": out})

    @app.get("/datasets/{dataset_id}/map")
    def get_map(dataset_id: str, bbox: str | None = None, zoom: int = 0,
                platforms: str | None = None, until: str | None = None,
                max_points: int | None = None, layout: str = "semantic_map"):
        try:
            dataset = store.get(dataset_id)
        except NotFound:
            return _error(404, "dataset not found")
        if not dataset_ready(dataset_id):
            return _error(409, f"dataset not ready (stage={dataset.stage.value})")
        config = config_of(dataset_id)
        if not 0 <= zoom < config.map_zoom_levels:
            return _error(422, f"zoom must be in [0, {config.map_zoom_levels - 1}]")
        try:
            layout_doc = Layout2D.from_dict(
                load_json_artifact(dataset_id, f"layouts/{layout}.json"))
        except NotFound:
            return _error(404, f"layout {layout} not found")
        points = layout_doc.points

        if bbox is not None:
            try:
                xmin, ymin, xmax, ymax = (float(v) for v in bbox.split(","))
            except ValueError:
                return _error(422, "bbox must be xmin,ymin,xmax,ymax")
            if not (xmin < xmax and ymin < ymax):
                return _error(422, "bbox must satisfy xmin < xmax and ymin < ymax")
        else:
            xs = [p.x for p in points]
            ys = [p.y for p in points]
            xmin, xmax = min(xs), max(xs)
            ymin, ymax = min(ys), max(ys)
            xmax += 1e-9
            ymax += 1e-9

        selected = [p for p in points if xmin <= p.x <= xmax and ymin <= p.y <= ymax]
        if platforms:
            wanted = set(platforms.split(","))
            selected = [p for p in selected if p.platform.value in wanted]
        if until:
            try:
                cutoff = parse_timestamp(until)
            except ValueError:
                return _error(422, "until must be an RFC 3339 timestamp")
            selected = slice_until(selected, cutoff)

        limit = max_points if max_points is not None else config.default_max_points
        total_candidates = len(selected)
        contours = []
        if total_candidates > limit:
            xy = np.array([[p.x, p.y] for p in selected])
            contours = density_contours(xy, (xmin, ymin, xmax, ymax))
            ranks = density_rank(xy, (xmin, ymin, xmax, ymax))
            order = sorted(range(len(selected)),
                           key=lambda i: (-ranks[i], selected[i].item_id))
            selected = [selected[i] for i in order[:limit]]

        lod = "dot" if zoom < LOD_TITLE_ZOOM else (
            "title" if zoom < LOD_THUMBNAIL_ZOOM else "thumbnail")
        selected.sort(key=lambda p: p.item_id)
        out_points = [{**p.to_dict(), "lod": lod} for p in selected]

        labels = []
        if layout_doc.kind == "semantic_map":
            tree = TopicTree.from_dict(load_json_artifact(dataset_id, "topics.json"))
            for node, _ in tree.all_nodes():
                label = node.label
                cx, cy = label.centroid
                if label.min_zoom <= zoom and xmin <= cx <= xmax and ymin <= cy <= ymax:
                    labels.append(label.to_dict())
            labels.sort(key=lambda d: d["topic_id"])

        return canonical_json({
            "points": out_points,
            "labels": labels,
            "contours": contours,
            "total_candidates": total_candidates,
            "zoom": zoom,
        })

    @app.get("/datasets/{dataset_id}/timeline")
    def get_timeline(dataset_id: str):
        try:
            if not dataset_ready(dataset_id):
                return _error(409, "dataset not ready")
            return canonical_json(load_json_artifact(dataset_id, "timeline.json"))
        except NotFound:
            return _error(404, "dataset not found")

    @app.get("/datasets/{dataset_id}/topics")
    def get_topics(dataset_id: str):
        try:
            if not dataset_ready(dataset_id):
                return _error(409, "dataset not ready")
            return canonical_json(load_json_artifact(dataset_id, "topics.json"))
        except NotFound:
            return _error(404, "dataset not found")

    @app.get("/datasets/{dataset_id}/topics/{topic_id}/items")
    def get_topic_items(dataset_id: str, topic_id: str):
        try:
            if not dataset_ready(dataset_id):
                return _error(409, "dataset not ready")
            tree = TopicTree.from_dict(load_json_artifact(dataset_id, "topics.json"))
            node = tree.find(topic_id)
            if node is None:
                return _error(404, "topic not found")
            enriched = [EnrichedItem.from_dict(d) for d in
                        load_json_artifact(dataset_id, "enriched.json")]
        except NotFound:
            return _error(404, "dataset not found")
        by_id = {item.event.id: item for item in enriched}
        members = set(node.member_ids)
        items = [{
            "item_id": item.event.id,
            "title": item.title,
            "platform": item.event.platform.value,
            "watched_at": item.event.to_dict()["watched_at"],
            "url": item.event.raw_url,  # lets the UI fetch thumbnails itself
        } for item in by_id.values() if item.event.id in members]
        items.sort(key=lambda d: (d["watched_at"], d["item_id"]))
        return canonical_json({"topic_id": topic_id, "label": node.label.label,
                               "items": items})

    @app.post("/datasets/{dataset_id}/layouts", status_code=202)
    async def create_layout(dataset_id: str, request: Request):
        try:
            if not dataset_ready(dataset_id):
                return _error(409, "dataset not ready")
        except NotFound:
            return _error(404, "dataset not found")
        body = await request.json()
        kind = body.get("kind")
        if kind not in ("grid", "semantic_axes", "semantic_map"):
            return _error(422, "kind must be grid, semantic_axes, or semantic_map")
        time_x = bool(body.get("time_x"))
        x_concept = (body.get("x_concept") or "").strip()
        y_concept = (body.get("y_concept") or "").strip()
        if kind == "semantic_axes":
            if (not x_concept and not time_x) or not y_concept:
                return _error(422, "semantic_axes needs non-empty axis concepts")
            digest = json.dumps([x_concept, y_concept, time_x], sort_keys=True)
            import hashlib
            layout_id = "axes-" + hashlib.sha256(digest.encode()).hexdigest()[:8]
        else:
            layout_id = kind

        def run(job: Job) -> dict:
            layout = _compute_alt_layout(ctx, dataset_id, kind, layout_id,
                                         x_concept, y_concept, time_x)
            store.put_artifact(dataset_id, f"layouts/{layout_id}.json",
                               json.dumps(layout.to_dict()).encode())
            return {"layout_id": layout_id}

        job = jobs.submit(dataset_id, f"layout:{kind}", run)
        return JSONResponse(status_code=202,
                            content={"layout_id": layout_id, "job_id": job.job_id})

    @app.get("/datasets/{dataset_id}/layouts/{layout_id}")
    def get_layout(dataset_id: str, layout_id: str):
        try:
            return canonical_json(load_json_artifact(dataset_id, f"layouts/{layout_id}.json"))
        except NotFound:
            return _error(404, "layout not found")

    @app.delete("/datasets/{dataset_id}", status_code=204)
    def delete_dataset(dataset_id: str):
        try:
            store.delete_dataset(dataset_id)
        except NotFound:
            return _error(404, "dataset not found")
        stale = [key for key in cache if key[0] == dataset_id]
        for key in stale:
            del cache[key]
        return Response(status_code=204)

    @app.get("/health")
    def health():
        return canonical_json({"status": "ok"})

    return app


def _compute_alt_layout(ctx: PipelineContext, dataset_id: str, kind: str,
                        layout_id: str, x_concept: str, y_concept: str,
                        time_x: bool) -> Layout2D:
    from .layout import grid_layout
    from .model import WatchEvent
    from .pipeline import _load_harmonized

    store = ctx.store
    base = Layout2D.from_dict(json.loads(
        store.get_artifact(dataset_id, "layouts/semantic_map.json")))
    if kind == "grid":
        tree = TopicTree.from_dict(json.loads(store.get_artifact(dataset_id, "topics.json")))
        return grid_layout(base.points, tree, layout_id=layout_id)
    if kind == "semantic_map":
        return base

    matrix, ids, _ = read_vectors(store.artifact_path(dataset_id, "vectors.f32"))
    embedded = [EmbeddedItem(item_id=i, vector=tuple(row.tolist()),
                             norm=float(np.linalg.norm(row)))
                for i, row in zip(ids, matrix)]
    harmonized = _load_harmonized(store, dataset_id)
    events: dict[str, WatchEvent] = {h.item.event.id: h.item.event for h in harmonized}
    topic_of = {p.item_id: p.topic_id for p in base.points if p.topic_id}
    provider = ctx.resolve_embedder()
    return semantic_axes_layout(embedded, x_concept, y_concept, provider, events,
                                topic_of=topic_of, time_x=time_x, layout_id=layout_id)
