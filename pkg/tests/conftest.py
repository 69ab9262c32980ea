import io
import json

import numpy as np
import pytest
from PIL import Image

from orchard_edge.pipeline import Pipeline
from orchard_edge.routing import RoutingConfig, TaskKind
from orchard_edge.runtime import build_slot
from orchard_edge.store import open_store

BOUNDARY = "testboundary123"


def make_image_bytes(width=64, height=48, fmt="JPEG", color=(120, 180, 60),
                     seed=None):
    if seed is not None:
        rng = np.random.default_rng(seed)
        arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        im = Image.fromarray(arr)
    else:
        im = Image.new("RGB", (width, height), color)
    buf = io.BytesIO()
    im.save(buf, format=fmt)
    return buf.getvalue()


def make_meta(**overrides):
    meta = {
        "device_id": "esp32-01",
        "captured_at": "2024-05-01T10:00:00.000Z",
        "altitude_m": 12.5,
        "frame_kind": "canopy_wide",
        "sequence_no": 7,
    }
    meta.update(overrides)
    return meta


def multipart_body(meta: dict | None, image: bytes | None,
                   boundary=BOUNDARY, order=("meta", "image")) -> bytes:
    parts = []
    for name in order:
        if name == "meta" and meta is not None:
            parts.append(
                f'--{boundary}\r\nContent-Disposition: form-data; name="meta"\r\n'
                f'Content-Type: application/json\r\n\r\n'.encode()
                + json.dumps(meta).encode() + b"\r\n")
        elif name == "image" and image is not None:
            parts.append(
                f'--{boundary}\r\nContent-Disposition: form-data; name="image"; '
                f'filename="frame.jpg"\r\nContent-Type: image/jpeg\r\n\r\n'.encode()
                + image + b"\r\n")
    return b"".join(parts) + f"--{boundary}--\r\n".encode()


def content_type(boundary=BOUNDARY) -> str:
    return f"multipart/form-data; boundary={boundary}"


@pytest.fixture
def stub_slots():
    return {t: build_slot(t) for t in TaskKind}


@pytest.fixture
def pipeline(tmp_path, stub_slots):
    store = open_store(str(tmp_path / "orchard.db"))
    pl = Pipeline(store, str(tmp_path / "data"), stub_slots,
                  routing_cfg=RoutingConfig(), queue_capacity=128)
    yield pl
    pl.stop()
    store.close()
