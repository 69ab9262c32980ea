"""Capture ingestion: multipart protocol parsing, metadata validation,
persistence and job enqueue.

Wire protocol: multipart/form-data with exactly two parts, "meta"
(application/json) then "image" (JPEG or PNG bytes).
"""

import io
import json
import re
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

from PIL import Image

from .errors import (
    DimensionOutOfRange,
    ImageTooLarge,
    MalformedMeta,
    MissingPart,
    UnsupportedImageFormat,
)
from .routing import FrameKind

MAX_IMAGE_BYTES = 10 * 1024 * 1024
MIN_SIDE, MAX_SIDE = 16, 8192

_DEVICE_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


@dataclass(frozen=True)
class CaptureMeta:
    device_id: str
    captured_at: datetime  # tz-aware UTC
    altitude_m: float
    frame_kind: FrameKind = FrameKind.UNKNOWN
    sequence_no: int = 0

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["captured_at"] = self.captured_at.astimezone(timezone.utc).strftime(
            "%Y-%m-%dT%H:%M:%S.%f")[:-3] + "Z"
        d["frame_kind"] = self.frame_kind.value
        return d


@dataclass
class ImageRecord:
    image_id: str
    meta: CaptureMeta
    width_px: int
    height_px: int
    byte_len: int
    status: str  # received | queued | processed | failed
    stored_path: str
    task: str = ""
    failure_reason: str = ""


def parse_capture_meta(raw: bytes | str) -> CaptureMeta:
    """Validate the JSON "meta" part field by field."""
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedMeta(f"meta is not valid JSON: {e}")
    if not isinstance(obj, dict):
        raise MalformedMeta("meta must be a JSON object")

    device_id = obj.get("device_id")
    if not isinstance(device_id, str) or not _DEVICE_ID_RE.match(device_id):
        raise MalformedMeta("device_id must be 1-64 chars of [A-Za-z0-9_-]")

    captured_at = obj.get("captured_at")
    if not isinstance(captured_at, str):
        raise MalformedMeta("captured_at missing or not a string")
    ts = captured_at.replace("Z", "+00:00") if captured_at.endswith("Z") else captured_at
    try:
        dt = datetime.fromisoformat(ts)
    except ValueError:
        raise MalformedMeta(f"captured_at is not an RFC 3339 timestamp: {captured_at!r}")
    if dt.tzinfo is None:
        raise MalformedMeta("captured_at must carry an explicit UTC offset")
    dt = dt.astimezone(timezone.utc)

    altitude = obj.get("altitude_m")
    if not isinstance(altitude, (int, float)) or isinstance(altitude, bool):
        raise MalformedMeta("altitude_m missing or not a number")
    if not (0 <= altitude <= 500):
        raise MalformedMeta(f"altitude_m out of range [0, 500]: {altitude}")

    fk_raw = obj.get("frame_kind", "unknown")
    try:
        frame_kind = FrameKind(fk_raw)
    except ValueError:
        raise MalformedMeta(f"unknown frame_kind: {fk_raw!r}")

    seq = obj.get("sequence_no", 0)
    if not isinstance(seq, int) or isinstance(seq, bool) or not (0 <= seq < 2**32):
        raise MalformedMeta(f"sequence_no must be an unsigned 32-bit integer: {seq!r}")

    return CaptureMeta(device_id=device_id, captured_at=dt, altitude_m=float(altitude),
                       frame_kind=frame_kind, sequence_no=seq)


def _split_multipart(body: bytes, boundary: str) -> list[tuple[str, bytes]]:
    """Return ordered (part-name, payload) pairs from a multipart body."""
    delim = b"--" + boundary.encode()
    chunks = body.split(delim)
    parts = []
    for chunk in chunks[1:]:
        if chunk.startswith(b"--"):  # closing delimiter
            break
        chunk = chunk.lstrip(b"\r\n")
        head, sep, payload = chunk.partition(b"\r\n\r\n")
        if not sep:
            raise MissingPart("malformed multipart part (no header/body separator)")
        if payload.endswith(b"\r\n"):
            payload = payload[:-2]
        m = re.search(rb'name="([^"]*)"', head)
        if not m:
            raise MissingPart("multipart part without a name")
        parts.append((m.group(1).decode(), payload))
    return parts


def sniff_image_format(data: bytes) -> str:
    if data[:3] == b"\xff\xd8\xff":
        return "jpeg"
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return "png"
    raise UnsupportedImageFormat("image must be JPEG or PNG")


def parse_ingest_request(body: bytes, content_type: str) -> tuple[CaptureMeta, bytes, int, int]:
    """Parse one upload. Returns (meta, image bytes, width, height).

    The image header is decoded only far enough to read dimensions; the raw
    bytes are passed through unmodified.
    """
    m = re.search(r'boundary="?([^";]+)"?', content_type or "")
    if "multipart/form-data" not in (content_type or "") or not m:
        raise MissingPart("expected multipart/form-data with a boundary")
    parts = _split_multipart(body, m.group(1))
    names = [n for n, _ in parts]
    if "meta" not in names:
        raise MissingPart("meta")
    if "image" not in names:
        raise MissingPart("image")
    if names != ["meta", "image"]:
        raise MissingPart(f'expected exactly parts ["meta", "image"], got {names}')

    meta = parse_capture_meta(parts[0][1])
    image_bytes = parts[1][1]
    if len(image_bytes) > MAX_IMAGE_BYTES:
        raise ImageTooLarge(f"image is {len(image_bytes)} bytes, cap {MAX_IMAGE_BYTES}")
    sniff_image_format(image_bytes)
    try:
        with Image.open(io.BytesIO(image_bytes)) as im:
            width, height = im.size
            orientation = im.getexif().get(0x0112, 1)
    except Exception:
        raise UnsupportedImageFormat("image header could not be decoded")
    if orientation in (5, 6, 7, 8):  # EXIF rotations that swap axes
        width, height = height, width
    for side in (width, height):
        if not (MIN_SIDE <= side <= MAX_SIDE):
            raise DimensionOutOfRange(
                f"dimensions {width}x{height} outside [{MIN_SIDE}, {MAX_SIDE}]")
    return meta, image_bytes, width, height
