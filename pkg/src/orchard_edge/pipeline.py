"""Glue between gateway, store and model runtime: the ingest operation and
the single sequential inference worker."""

import logging
import os
import threading
import time

import numpy as np

from .detect import postprocess
from .errors import PipelineError, QueueFull, StorageFailure
from .gateway import CaptureMeta, ImageRecord, sniff_image_format
from .ids import new_image_id
from .prep import decode_image, letterbox, resize_normalize
from .routing import RoutingConfig, TaskKind, route
from .runtime import ModelSlot, classify, run_backend, softmax
from .store import Store

log = logging.getLogger("orchard_edge")

DEFAULT_QUEUE_CAPACITY = 128
STORE_RETRIES = 3


class Pipeline:
    """Multi-producer ingest, single-consumer inference.

    The durable queue is the set of images with status=queued; the
    in-process condition variable only wakes the worker early.
    """

    def __init__(self, store: Store, data_dir: str,
                 slots: dict[TaskKind, ModelSlot],
                 routing_cfg: RoutingConfig = RoutingConfig(),
                 queue_capacity: int = DEFAULT_QUEUE_CAPACITY):
        self.store = store
        self.data_dir = data_dir
        self.slots = slots
        self.routing_cfg = routing_cfg
        self.queue_capacity = queue_capacity
        self.on_result = None  # callback(result_dict), used for SSE fan-out
        self.in_flight = 0
        self.max_in_flight_seen = 0
        self._cond = threading.Condition()
        self._stop = threading.Event()
        self._thread = None
        os.makedirs(data_dir, exist_ok=True)

    # --- ingest side ---

    def ingest(self, meta: CaptureMeta, image_bytes: bytes,
               width: int, height: int) -> ImageRecord:
        if self.store.queued_count() >= self.queue_capacity:
            raise QueueFull(f"inference queue at capacity {self.queue_capacity}")
        task = route(meta.frame_kind, meta.altitude_m, self.routing_cfg)
        image_id = new_image_id()
        ext = "jpg" if sniff_image_format(image_bytes) == "jpeg" else "png"
        stored_path = os.path.join(self.data_dir, f"{image_id}.{ext}")
        try:
            with open(stored_path, "wb") as fh:
                fh.write(image_bytes)
        except OSError as e:
            raise StorageFailure(f"could not persist image bytes: {e}")
        rec = ImageRecord(image_id=image_id, meta=meta, width_px=width,
                          height_px=height, byte_len=len(image_bytes),
                          status="queued", stored_path=stored_path,
                          task=task.value)
        try:
            self.store.put_image(rec)
        except PipelineError:
            os.unlink(stored_path)
            raise
        with self._cond:
            self._cond.notify()
        return rec

    # --- worker side ---

    def _infer(self, rec: ImageRecord, image_bytes: bytes):
        """Returns (payload, label, task) for one capture."""
        img = decode_image(image_bytes)
        task = route(rec.meta.frame_kind, rec.meta.altitude_m, self.routing_cfg)
        if task.value != rec.task:
            log.warning("image %s: routed task changed %s -> %s since ingest",
                        rec.image_id, rec.task, task.value)
        slot = self.slots[task]
        if task == TaskKind.APPLE_DETECTION:
            tensor, transform = letterbox(img, slot.input_side)
            mean = np.asarray(slot.norm.mean, dtype=np.float32).reshape(3, 1, 1)
            std = np.asarray(slot.norm.std, dtype=np.float32).reshape(3, 1, 1)
            tensor = (tensor - mean) / std
            raw = run_backend(slot, tensor, image_bytes)
            dets = postprocess(raw, transform, rec.width_px, rec.height_px,
                               slot.conf_thresh, slot.iou_thresh)
            payload = [{"box": [d.x1, d.y1, d.x2, d.y2],
                        "score": d.score, "class_id": d.class_id}
                       for d in dets]
            return payload, None, task
        tensor = resize_normalize(img, slot.input_side, slot.norm)
        logits = run_backend(slot, tensor, image_bytes)
        result = classify(softmax(logits), slot)
        payload = {"task": task.value, "probs": result.probs,
                   "label": result.label, "confidence": result.confidence}
        return payload, result.label, task

    def process_one(self, rec: ImageRecord):
        self.in_flight += 1
        self.max_in_flight_seen = max(self.max_in_flight_seen, self.in_flight)
        started = time.monotonic()
        try:
            with open(rec.stored_path, "rb") as fh:
                image_bytes = fh.read()
            payload, label, task = self._infer(rec, image_bytes)
            latency_ms = (time.monotonic() - started) * 1000.0
            last_err = None
            for _ in range(STORE_RETRIES):
                try:
                    self.store.put_result(
                        rec.image_id, task.value, payload, label,
                        latency_ms, self.slots[task].model_version)
                    last_err = None
                    break
                except StorageFailure as e:
                    last_err = e
            if last_err is not None:
                raise last_err
            if self.on_result is not None:
                self.on_result(self.store.get_result(rec.image_id))
        except Exception as e:
            log.warning("image %s failed: %s", rec.image_id, e)
            try:
                self.store.set_status(rec.image_id, "failed", reason=str(e))
            except PipelineError:
                log.error("could not mark image %s failed", rec.image_id)
        finally:
            self.in_flight -= 1

    def worker_loop(self):
        """Pops queued jobs FIFO, one in flight at a time, until shutdown.
        Per-job failures never kill the loop."""
        while not self._stop.is_set():
            rec = self.store.next_queued()
            if rec is None:
                with self._cond:
                    self._cond.wait(timeout=0.05)
                continue
            self.process_one(rec)

    def start(self):
        self._stop.clear()
        self._thread = threading.Thread(target=self.worker_loop,
                                        name="inference-worker", daemon=True)
        self._thread.start()

    def stop(self):
        """Graceful: the in-flight job completes; queued jobs stay queued."""
        self._stop.set()
        with self._cond:
            self._cond.notify()
        if self._thread is not None:
            self._thread.join(timeout=30)
            self._thread = None

    def drain(self, timeout: float = 30.0) -> bool:
        """Block until the queue empties (test/simulation helper)."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.store.queued_count() == 0 and self.in_flight == 0:
                return True
            time.sleep(0.01)
        return False
