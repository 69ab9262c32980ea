"""Service configuration: JSON file, every field overridable from the CLI."""

import json
from dataclasses import dataclass, field

from .prep import NormSpec
from .routing import RoutingConfig, TaskKind
from .runtime import ModelSlot, build_slot


@dataclass
class SlotConfig:
    task: str
    backend: str = "stub"
    model_path: str = ""
    norm: NormSpec | None = None
    conf_thresh: float = 0.25
    iou_thresh: float = 0.45


@dataclass
class ServiceConfig:
    bind: str = "127.0.0.1:8080"
    db_path: str = "orchard.db"
    data_dir: str = "orchard_data"
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    slots: list[SlotConfig] = field(default_factory=list)
    queue_capacity: int = 128
    dashboard_dir: str = ""  # static assets; empty disables serving

    def __post_init__(self):
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if not self.slots:
            self.slots = [SlotConfig(task=t.value) for t in TaskKind]

    def build_slots(self) -> dict[TaskKind, ModelSlot]:
        """Instantiate all three backends; raises BackendUnavailable fail-fast."""
        slots = {}
        for sc in self.slots:
            task = TaskKind(sc.task)
            slots[task] = build_slot(task, backend_kind=sc.backend,
                                     model_path=sc.model_path, norm=sc.norm,
                                     conf_thresh=sc.conf_thresh,
                                     iou_thresh=sc.iou_thresh)
        missing = [t.value for t in TaskKind if t not in slots]
        if missing:
            raise ValueError(f"config missing model slots for: {missing}")
        return slots


def load_config(path: str | None = None, **overrides) -> ServiceConfig:
    raw = {}
    if path:
        with open(path) as fh:
            raw = json.load(fh)

    routing_raw = raw.get("routing", {})
    if "altitude_threshold" in overrides and overrides["altitude_threshold"] is not None:
        routing_raw["altitude_threshold_m"] = overrides["altitude_threshold"]
    if "default_task" in overrides and overrides["default_task"] is not None:
        routing_raw["default_task"] = overrides["default_task"]
    routing = RoutingConfig(
        altitude_threshold_m=float(routing_raw.get("altitude_threshold_m", 8.0)),
        default_task=TaskKind(routing_raw.get("default_task", "apple_detection")))

    slots = []
    for entry in raw.get("slots", []):
        norm = None
        if "norm" in entry:
            norm = NormSpec(mean=tuple(entry["norm"]["mean"]),
                            std=tuple(entry["norm"]["std"]))
        slots.append(SlotConfig(
            task=entry["task"],
            backend="stub" if overrides.get("stub") else entry.get("backend", "stub"),
            model_path=entry.get("model_path", ""),
            norm=norm,
            conf_thresh=float(entry.get("conf_thresh", 0.25)),
            iou_thresh=float(entry.get("iou_thresh", 0.45))))

    def pick(key, default):
        ov = overrides.get(key)
        return ov if ov is not None else raw.get(key, default)

    return ServiceConfig(
        bind=pick("bind", "127.0.0.1:8080"),
        db_path=pick("db_path", "orchard.db"),
        data_dir=pick("data_dir", "orchard_data"),
        routing=routing,
        slots=slots,
        queue_capacity=int(pick("queue_capacity", 128)),
        dashboard_dir=pick("dashboard_dir", ""))
