"""Model slots, the pluggable backend contract, classification postprocessing
and the deterministic stub backend.

The stub lets the whole pipeline run and be tested bit-reproducibly with no
model weights: outputs are a pure function of (raw image bytes, task name).
"""

import os
from dataclasses import dataclass

import numpy as np

from .detect import RawCandidate
from .errors import BackendUnavailable, ShapeMismatch
from .prep import IMAGENET_NORM, NormSpec
from .routing import TaskKind

LABEL_MAPS: dict[TaskKind, list[str]] = {
    TaskKind.LEAF_DISEASE: ["apple_scab", "black_rot", "cedar_apple_rust", "healthy"],
    TaskKind.FRESHNESS: ["fresh", "rotten"],
    TaskKind.APPLE_DETECTION: ["apple"],
}

INPUT_SIDES: dict[TaskKind, int] = {
    TaskKind.LEAF_DISEASE: 224,
    TaskKind.FRESHNESS: 256,
    TaskKind.APPLE_DETECTION: 640,
}


@dataclass
class ClassificationResult:
    task: TaskKind
    probs: list[float]
    label: str
    confidence: float
    latency_ms: float = 0.0


# --- deterministic stub primitives ---

_U64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & _U64
    return h


class SplitMix64:
    """Tiny deterministic generator; identical sequences on every platform."""

    def __init__(self, seed: int):
        self.state = seed & _U64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _U64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
        return (z ^ (z >> 31)) & _U64

    def next_float(self) -> float:
        # 53-bit mantissa draw in [0, 1)
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()


class StubBackend:
    """Pseudo-model seeded from FNV-1a(image bytes + task name)."""

    def __init__(self, task: TaskKind):
        self.task = task

    def run(self, tensor: np.ndarray, image_bytes: bytes):
        seed = fnv1a64(image_bytes + self.task.value.encode())
        rng = SplitMix64(seed)
        if self.task == TaskKind.APPLE_DETECTION:
            k = seed % 6
            out = []
            for _ in range(k):
                cx = rng.uniform(64, 576)
                cy = rng.uniform(64, 576)
                w = rng.uniform(32, 160)
                h = rng.uniform(32, 160)
                score = rng.uniform(0.05, 0.95)
                out.append(RawCandidate(cx, cy, w, h, score))
            return out
        n = len(LABEL_MAPS[self.task])
        return np.array([rng.uniform(-3, 3) for _ in range(n)], dtype=np.float64)


class ExternalBackend:
    """Adapter for a serialized (TorchScript) model artifact.

    Fails fast at construction if the artifact is missing or unloadable;
    grid/DFL decoding for detectors is this adapter's concern, and the
    module is expected to emit Nx5 (cx,cy,w,h,score) rows for detection or
    a logits vector for classification.
    """

    def __init__(self, task: TaskKind, model_path: str):
        self.task = task
        if not model_path or not os.path.isfile(model_path):
            raise BackendUnavailable(f"model artifact not found: {model_path!r}")
        try:
            import torch
            self._torch = torch
            self.module = torch.jit.load(model_path, map_location="cpu")
            self.module.eval()
        except BackendUnavailable:
            raise
        except Exception as e:
            raise BackendUnavailable(f"model artifact failed to load: {e}")

    def run(self, tensor: np.ndarray, image_bytes: bytes):
        torch = self._torch
        with torch.no_grad():
            out = self.module(torch.from_numpy(tensor).unsqueeze(0))
        arr = out.squeeze(0).numpy()
        if self.task == TaskKind.APPLE_DETECTION:
            return [RawCandidate(*row[:4], score=float(row[4])) for row in arr.tolist()]
        return np.asarray(arr, dtype=np.float64).reshape(-1)


@dataclass
class ModelSlot:
    task: TaskKind
    backend: object  # StubBackend | ExternalBackend
    label_map: list[str] = None
    input_side: int = 0
    norm: NormSpec = None
    conf_thresh: float = 0.25  # detection only
    iou_thresh: float = 0.45
    model_version: str = "stub-1"

    def __post_init__(self):
        if self.label_map is None:
            self.label_map = list(LABEL_MAPS[self.task])
        if not self.input_side:
            self.input_side = INPUT_SIDES[self.task]
        if self.norm is None:
            self.norm = NormSpec() if self.task == TaskKind.APPLE_DETECTION else IMAGENET_NORM


def run_backend(slot: ModelSlot, tensor: np.ndarray, image_bytes: bytes):
    """Invoke the slot's backend after checking the input shape."""
    expect = (3, slot.input_side, slot.input_side)
    if tuple(tensor.shape) != expect:
        raise ShapeMismatch(f"expected {expect}, got {tuple(tensor.shape)}")
    return slot.backend.run(tensor, image_bytes)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max-subtraction)."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def classify(probs: np.ndarray, slot: ModelSlot,
             latency_ms: float = 0.0) -> ClassificationResult:
    """Argmax with lowest-index tie-break."""
    probs = np.asarray(probs, dtype=np.float64)
    idx = int(np.argmax(probs))  # np.argmax already returns the first maximum
    return ClassificationResult(
        task=slot.task,
        probs=[float(p) for p in probs],
        label=slot.label_map[idx],
        confidence=float(probs[idx]),
        latency_ms=latency_ms,
    )


def build_slot(task: TaskKind, backend_kind: str = "stub",
               model_path: str = "", norm: NormSpec | None = None,
               conf_thresh: float = 0.25, iou_thresh: float = 0.45) -> ModelSlot:
    if backend_kind == "stub":
        backend = StubBackend(task)
        version = "stub-1"
    elif backend_kind == "external":
        backend = ExternalBackend(task, model_path)
        version = os.path.basename(model_path)
    else:
        raise ValueError(f"unknown backend kind: {backend_kind!r}")
    return ModelSlot(task=task, backend=backend, norm=norm,
                     conf_thresh=conf_thresh, iou_thresh=iou_thresh,
                     model_version=version)
