"""HTTP surface for devices, operators and the dashboard."""

import asyncio
import contextlib
import json
import logging
import os

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .config import ServiceConfig
from .errors import ImageTooLarge, PipelineError, QueueFull
from .gateway import ImageRecord, parse_ingest_request
from .pipeline import Pipeline
from .store import Store, open_store

log = logging.getLogger("orchard_edge.service")


def _record_json(rec: ImageRecord) -> dict:
    return {
        "image_id": rec.image_id,
        "meta": rec.meta.to_json_dict(),
        "width_px": rec.width_px,
        "height_px": rec.height_px,
        "byte_len": rec.byte_len,
        "status": rec.status,
        "task": rec.task,
        "failure_reason": rec.failure_reason,
    }


def _error_response(exc: PipelineError, status: int) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": exc.code, "detail": exc.detail})


class _EventHub:
    """Fans completed-result events out to SSE subscribers. The worker thread
    publishes; delivery hops onto the server's event loop."""

    def __init__(self):
        self.loop: asyncio.AbstractEventLoop | None = None
        self._subscribers: set[asyncio.Queue] = set()

    def publish(self, result: dict):
        if self.loop is None:
            return
        def _fanout():
            for q in list(self._subscribers):
                q.put_nowait(result)
        self.loop.call_soon_threadsafe(_fanout)

    def subscribe(self) -> asyncio.Queue:
        q = asyncio.Queue()
        self._subscribers.add(q)
        return q

    def unsubscribe(self, q: asyncio.Queue):
        self._subscribers.discard(q)


def create_app(pipeline: Pipeline, store: Store,
               dashboard_dir: str = "") -> FastAPI:
    hub = _EventHub()
    pipeline.on_result = hub.publish

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        hub.loop = asyncio.get_running_loop()
        pipeline.start()
        yield
        pipeline.stop()

    app = FastAPI(lifespan=lifespan)

    @app.post("/api/v1/ingest", status_code=201)
    async def ingest(request: Request):
        body = await request.body()
        content_type = request.headers.get("content-type", "")
        try:
            meta, image_bytes, width, height = parse_ingest_request(body, content_type)
            rec = await asyncio.to_thread(
                pipeline.ingest, meta, image_bytes, width, height)
        except ImageTooLarge as e:
            return _error_response(e, 413)
        except QueueFull as e:
            return _error_response(e, 503)
        except PipelineError as e:
            return _error_response(e, 400)
        return {"image_id": rec.image_id, "task": rec.task, "status": "queued"}

    @app.get("/api/v1/images")
    async def list_images(since: str | None = None, device_id: str | None = None,
                          task: str | None = None, status: str | None = None,
                          limit: int = 50):
        records, cursor = store.list_images(since=since, device_id=device_id,
                                            task=task, status=status, limit=limit)
        return {"images": [_record_json(r) for r in records], "next": cursor}

    @app.get("/api/v1/images/{image_id}/file")
    async def image_file(image_id: str):
        rec = store.get_image(image_id)
        if rec is None or not os.path.isfile(rec.stored_path):
            return JSONResponse(status_code=404,
                                content={"error": "not_found", "detail": image_id})
        media = "image/jpeg" if rec.stored_path.endswith(".jpg") else "image/png"
        return FileResponse(rec.stored_path, media_type=media)

    @app.get("/api/v1/results/{image_id}")
    async def get_result(image_id: str):
        result = store.get_result(image_id)
        if result is None:
            return JSONResponse(status_code=404,
                                content={"error": "not_found", "detail": image_id})
        return result

    @app.get("/api/v1/stats")
    async def stats():
        return store.stats()

    @app.get("/api/v1/events")
    async def events():
        async def stream():
            q = hub.subscribe()
            try:
                while True:
                    result = await q.get()
                    yield f"data: {json.dumps(result)}\n\n"
            finally:
                hub.unsubscribe(q)
        return StreamingResponse(stream(), media_type="text/event-stream")

    if dashboard_dir and os.path.isdir(dashboard_dir):
        app.mount("/", StaticFiles(directory=dashboard_dir, html=True))

    return app


def serve(cfg: ServiceConfig):
    """Open the store, build backends fail-fast, run the server until
    interrupted. Startup errors exit nonzero with one parseable line."""
    import uvicorn

    try:
        slots = cfg.build_slots()
        store = open_store(cfg.db_path)
        pipeline = Pipeline(store, cfg.data_dir, slots,
                            routing_cfg=cfg.routing,
                            queue_capacity=cfg.queue_capacity)
    except (PipelineError, ValueError, OSError) as e:
        print(f"startup_error: {type(e).__name__}: {e}")
        raise SystemExit(1)
    app = create_app(pipeline, store, dashboard_dir=cfg.dashboard_dir)
    host, _, port = cfg.bind.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080),
                    log_level="info")
    finally:
        store.close()
