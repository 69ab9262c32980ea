"""Protocol-faithful device simulator: uploads a directory of images to the
ingest endpoint at a fixed rate, as the camera firmware would."""

import json
import os
import time
from datetime import datetime, timezone

import requests

RETRIES = 3
BACKOFF_S = 0.2


def _default_meta(device_id: str, sequence_no: int) -> dict:
    now = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3] + "Z"
    return {"device_id": device_id, "captured_at": now, "altitude_m": 10.0,
            "frame_kind": "unknown", "sequence_no": sequence_no}


def _upload(url: str, meta: dict, image_path: str) -> requests.Response:
    with open(image_path, "rb") as fh:
        data = fh.read()
    mime = "image/png" if data[:8] == b"\x89PNG\r\n\x1a\n" else "image/jpeg"
    files = [
        ("meta", (None, json.dumps(meta), "application/json")),
        ("image", (os.path.basename(image_path), data, mime)),
    ]
    return requests.post(url, files=files, timeout=30)


def simulate_device(directory: str, rate_per_s: float, target_url: str,
                    meta_template: dict | None = None,
                    device_id: str = "sim-01") -> int:
    """Upload every image in the directory; returns the failure count.

    A sidecar ``<name>.json`` next to an image overrides template fields
    for that capture. Connection errors and 503s are retried 3x with
    backoff before counting as failures.
    """
    names = sorted(f for f in os.listdir(directory)
                   if f.lower().endswith((".jpg", ".jpeg", ".png")))
    interval = 1.0 / rate_per_s if rate_per_s > 0 else 0.0
    failures = 0
    for seq, name in enumerate(names):
        path = os.path.join(directory, name)
        meta = _default_meta(device_id, seq)
        meta.update(meta_template or {})
        sidecar = os.path.splitext(path)[0] + ".json"
        if os.path.isfile(sidecar):
            with open(sidecar) as fh:
                meta.update(json.load(fh))
        meta["sequence_no"] = seq

        status = None
        for attempt in range(RETRIES):
            try:
                resp = _upload(target_url, meta, path)
            except requests.RequestException as e:
                status = f"connection error: {e}"
                time.sleep(BACKOFF_S * (attempt + 1))
                continue
            status = resp.status_code
            if resp.status_code == 503:  # backpressure: retry later
                time.sleep(BACKOFF_S * (attempt + 1))
                continue
            break
        ok = status == 201
        if not ok:
            failures += 1
        print(f"{name}: {status}{'' if ok else '  FAILED'}")
        if interval:
            time.sleep(interval)
    print(f"uploaded {len(names) - failures}/{len(names)} "
          f"({failures} failures)")
    return failures
