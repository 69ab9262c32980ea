"""The `evaluate` command: metric reports over prediction/ground-truth dumps,
row names matching the per-model performance table."""

from .errors import TaskMismatch
from .metrics import (
    accuracy,
    confusion_matrix,
    detection_prf,
    load_classification_pairs,
    load_detection_instances,
    map_range,
    prf_macro,
)
from .routing import TaskKind
from .runtime import LABEL_MAPS


def evaluate(gt_path: str, pred_path: str, task: str) -> dict:
    task_kind = TaskKind(task)
    if task_kind == TaskKind.APPLE_DETECTION:
        instances = load_detection_instances(gt_path, pred_path)
        p, r, f = detection_prf(instances, conf_thresh=0.25, iou_thresh=0.5)
        map50, map50_95 = map_range(instances)
        return {
            "task": task,
            "Precision": p,
            "Recall": r,
            "F1-score": f,
            "mAP50": map50,
            "mAP50-95": map50_95,
        }
    labels = LABEL_MAPS[task_kind]
    k = len(labels)
    y_true, y_pred = load_classification_pairs(gt_path, pred_path)
    if any(not (0 <= y < k) for y in y_true + y_pred):
        raise TaskMismatch(
            f"labels exceed the {k} classes of task {task}; wrong --task?")
    cm = confusion_matrix(y_true, y_pred, k)
    p, r, f = prf_macro(cm)
    return {
        "task": task,
        "Accuracy": accuracy(cm),
        "Precision": p,
        "Recall": r,
        "F1-score": f,
        "classes": labels,
        "confusion_matrix": cm.tolist(),
    }
