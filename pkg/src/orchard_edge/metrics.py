"""Offline evaluation engine: confusion-matrix metrics, detection matching,
101-point-interpolated average precision, mAP over the 0.50:0.05:0.95
threshold range, and deterministic stratified splits."""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassTooSmall,
    EmptyMatrix,
    LabelOutOfRange,
    LengthMismatch,
    NoGroundTruth,
    ParseError,
)

# IoU thresholds for the mAP 50-95 convention, kept as exact hundredths so
# constructed fixtures (e.g. IoU exactly 0.60) compare predictably
MAP_THRESHOLDS = [(50 + 5 * i) / 100.0 for i in range(10)]
RECALL_LEVELS = np.linspace(0.0, 1.0, 101)


@dataclass
class DetEvalInstance:
    """Per-image predictions ((x1,y1,x2,y2,score) rows) and GT boxes."""
    preds: list[tuple[float, float, float, float, float]] = field(default_factory=list)
    gts: list[tuple[float, float, float, float]] = field(default_factory=list)


def confusion_matrix(y_true, y_pred, k: int) -> np.ndarray:
    """k x k counts; rows = true class, cols = predicted class."""
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true vs {len(y_pred)} predicted labels")
    cm = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if not (0 <= t < k) or not (0 <= p < k):
            raise LabelOutOfRange(f"label pair ({t}, {p}) outside [0, {k})")
        cm[t, p] += 1
    return cm


def accuracy(cm: np.ndarray) -> float:
    total = int(cm.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    return float(np.trace(cm)) / total


def prf_macro(cm: np.ndarray) -> tuple[float, float, float]:
    """Macro-averaged precision/recall/F1. Zero-denominator classes
    contribute 0 to the average."""
    if cm.sum() == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    k = cm.shape[0]
    precisions, recalls, f1s = [], [], []
    for c in range(k):
        col = float(cm[:, c].sum())
        row = float(cm[c, :].sum())
        tp = float(cm[c, c])
        p = tp / col if col > 0 else 0.0
        r = tp / row if row > 0 else 0.0
        precisions.append(p)
        recalls.append(r)
        f1s.append(f1(p, r))
    return (sum(precisions) / k, sum(recalls) / k, sum(f1s) / k)


def f1(p: float, r: float) -> float:
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def _box_iou(a, b) -> float:
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    iw, ih = ix2 - ix1, iy2 - iy1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    ua = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / ua


def match_detections(preds, gts, iou_thresh: float):
    """Greedy score-descending matching of predictions to ground truth.

    Returns ([(score, is_tp), ...] in match order, n_gt). Each GT is used
    at most once; a prediction is TP iff its best unmatched-GT IoU clears
    the threshold.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i][4])
    taken = [False] * len(gts)
    flags = []
    for i in order:
        box = preds[i][:4]
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            v = _box_iou(box, gt)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0 and best_iou >= iou_thresh:
            taken[best_j] = True
            flags.append((preds[i][4], True))
        else:
            flags.append((preds[i][4], False))
    return flags, len(gts)


def average_precision(flags, n_gt: int) -> float | None:
    """101-point interpolated AP over score-descending (score, is_tp) flags.

    Returns None when there is neither ground truth nor predictions (the
    class is skipped from the mAP mean); 0.0 when predictions exist but no
    ground truth does.
    """
    if n_gt == 0:
        return None if not flags else 0.0
    flags = sorted(flags, key=lambda f: -f[0])
    tps = np.cumsum([1 if tp else 0 for _, tp in flags])
    fps = np.cumsum([0 if tp else 1 for _, tp in flags])
    recalls = tps / n_gt
    precisions = tps / (tps + fps)
    # p_interp(r) = max precision at any recall >= r
    total = 0.0
    for r in RECALL_LEVELS:
        mask = recalls >= r
        total += float(precisions[mask].max()) if mask.any() else 0.0
    return total / len(RECALL_LEVELS)


def map_range(instances: list[DetEvalInstance]) -> tuple[float, float]:
    """(mAP50, mAP50-95) with flags pooled across images per threshold."""
    if not instances:
        raise NoGroundTruth("no evaluation instances")
    if all(not inst.gts and not inst.preds for inst in instances):
        raise NoGroundTruth("every image is empty of GT and predictions")
    aps = []
    for thresh in MAP_THRESHOLDS:
        pooled_flags = []
        n_gt = 0
        for inst in instances:
            flags, n = match_detections(inst.preds, inst.gts, thresh)
            pooled_flags.extend(flags)
            n_gt += n
        ap = average_precision(pooled_flags, n_gt)
        aps.append(0.0 if ap is None else ap)
    map50_95 = sum(aps) / len(aps)
    return aps[0], map50_95


def detection_prf(instances: list[DetEvalInstance], conf_thresh: float = 0.25,
                  iou_thresh: float = 0.5) -> tuple[float, float, float]:
    """Dataset-level precision/recall/F1 at fixed confidence and IoU cuts."""
    tp = fp = n_gt = 0
    for inst in instances:
        preds = [p for p in inst.preds if p[4] >= conf_thresh]
        flags, n = match_detections(preds, inst.gts, iou_thresh)
        tp += sum(1 for _, is_tp in flags if is_tp)
        fp += sum(1 for _, is_tp in flags if not is_tp)
        n_gt += n
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / n_gt if n_gt > 0 else 0.0
    return p, r, f1(p, r)


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        if not (2 <= len(self.ratios) <= 3):
            raise ValueError("expected 2 or 3 split ratios")
        if any(r <= 0 for r in self.ratios):
            raise ValueError("ratios must be positive")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)}")


def _largest_remainder(n: int, ratios) -> list[int]:
    quotas = [r * n for r in ratios]
    counts = [int(q) for q in quotas]
    leftover = n - sum(counts)
    by_frac = sorted(range(len(ratios)), key=lambda i: -(quotas[i] - counts[i]))
    for i in by_frac[:leftover]:
        counts[i] += 1
    return counts


def stratified_split(labels, spec: SplitSpec) -> list[list[int]]:
    """Partition sample indices per class by the spec ratios.

    Per-class shuffles are seeded from (spec.seed, class id), so the split
    is reproducible and insensitive to other classes' sizes.
    """
    classes = sorted(set(labels))
    parts: list[list[int]] = [[] for _ in spec.ratios]
    for cls in classes:
        idx = [i for i, lbl in enumerate(labels) if lbl == cls]
        if len(idx) < len(spec.ratios):
            raise ClassTooSmall(
                f"class {cls} has {len(idx)} samples, needs >= {len(spec.ratios)}")
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([spec.seed, int(cls)])))
        rng.shuffle(idx)
        counts = _largest_remainder(len(idx), spec.ratios)
        start = 0
        for part, count in zip(parts, counts):
            part.extend(idx[start:start + count])
            start += count
    return [sorted(p) for p in parts]


# --- line-delimited JSON loaders for the evaluate CLI ---

def _iter_ndjson(path: str):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}: invalid JSON on line {lineno}: {e}",
                                 line=lineno)


def load_classification_pairs(gt_path: str, pred_path: str):
    """Join {"id","true"} / {"id","pred"} dumps; single files carrying both
    fields are accepted too."""
    true_by_id, pred_by_id = {}, {}
    for path, out_key, store in ((gt_path, "true", true_by_id),
                                 (pred_path, "pred", pred_by_id)):
        for lineno, obj in _iter_ndjson(path):
            if "id" not in obj or out_key not in obj:
                raise ParseError(f"{path}: line {lineno} missing 'id' or '{out_key}'",
                                 line=lineno)
            store[obj["id"]] = int(obj[out_key])
    ids = sorted(true_by_id)
    missing = [i for i in ids if i not in pred_by_id]
    if missing:
        raise ParseError(f"{pred_path}: no prediction for id {missing[0]!r}")
    return [true_by_id[i] for i in ids], [pred_by_id[i] for i in ids]


def load_detection_instances(gt_path: str, pred_path: str) -> list[DetEvalInstance]:
    gts: dict[str, list] = {}
    preds: dict[str, list] = {}
    for lineno, obj in _iter_ndjson(gt_path):
        if "image" not in obj or "boxes" not in obj:
            raise ParseError(f"{gt_path}: line {lineno} missing 'image' or 'boxes'",
                             line=lineno)
        gts[obj["image"]] = [tuple(map(float, b)) for b in obj["boxes"]]
    for lineno, obj in _iter_ndjson(pred_path):
        if "image" not in obj or "dets" not in obj:
            raise ParseError(f"{pred_path}: line {lineno} missing 'image' or 'dets'",
                             line=lineno)
        preds[obj["image"]] = [tuple(map(float, d)) for d in obj["dets"]]
    images = sorted(set(gts) | set(preds))
    return [DetEvalInstance(preds=preds.get(img, []), gts=gts.get(img, []))
            for img in images]
