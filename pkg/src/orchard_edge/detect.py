"""Detection postprocessing: confidence filter, box conversion, letterbox
inversion, clipping and greedy NMS."""

from dataclasses import dataclass

from .errors import DegenerateBox
from .prep import LetterboxTransform, unletterbox_box

MAX_DETECTIONS = 300

# candidates dropped because clipping collapsed them (observability counter)
degenerate_dropped = 0


@dataclass(frozen=True)
class RawCandidate:
    """One decoded detector output in 640x640 letterboxed coordinates."""
    cx: float
    cy: float
    w: float
    h: float
    score: float


@dataclass(frozen=True)
class Detection:
    x1: float
    y1: float
    x2: float
    y2: float
    score: float
    class_id: int = 0  # single class: apple

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def iou(a: tuple[float, float, float, float],
        b: tuple[float, float, float, float]) -> float:
    """Intersection over union of two (x1,y1,x2,y2) boxes."""
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    iw, ih = ix2 - ix1, iy2 - iy1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _sort_key(d: Detection):
    # score descending, then smaller x1, then smaller y1: deterministic order
    return (-d.score, d.x1, d.y1)


def nms(dets: list[Detection], iou_thresh: float) -> list[Detection]:
    """Greedy non-maximum suppression; output kept in score-descending order."""
    remaining = sorted(dets, key=_sort_key)
    kept: list[Detection] = []
    while remaining:
        top = remaining.pop(0)
        kept.append(top)
        remaining = [d for d in remaining if iou(top.bbox, d.bbox) <= iou_thresh]
    return kept


def postprocess(raw: list[RawCandidate], t: LetterboxTransform,
                orig_w: int, orig_h: int,
                conf_thresh: float = 0.25,
                iou_thresh: float = 0.45) -> list[Detection]:
    """Full decode from raw candidates to final detections in original pixels."""
    global degenerate_dropped
    dets: list[Detection] = []
    for c in raw:
        if c.score < conf_thresh:
            continue
        box = (c.cx - c.w / 2, c.cy - c.h / 2, c.cx + c.w / 2, c.cy + c.h / 2)
        try:
            x1, y1, x2, y2 = unletterbox_box(box, t, orig_w, orig_h)
        except DegenerateBox:
            degenerate_dropped += 1
            continue
        dets.append(Detection(x1, y1, x2, y2, c.score))
    return nms(dets, iou_thresh)[:MAX_DETECTIONS]
