"""Task routing: map flight context to exactly one vision task.

Explicit frame_kind wins; altitude is the fallback signal for unknown
framing. All knobs live in RoutingConfig so deployments can tune them.
"""

from dataclasses import dataclass
from enum import Enum


class TaskKind(str, Enum):
    LEAF_DISEASE = "leaf_disease"
    FRESHNESS = "freshness"
    APPLE_DETECTION = "apple_detection"


class FrameKind(str, Enum):
    LEAF_CLOSEUP = "leaf_closeup"
    FRUIT_CLOSEUP = "fruit_closeup"
    CANOPY_WIDE = "canopy_wide"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RoutingConfig:
    altitude_threshold_m: float = 8.0
    default_task: TaskKind = TaskKind.APPLE_DETECTION

    def __post_init__(self):
        if self.altitude_threshold_m <= 0:
            raise ValueError("altitude_threshold_m must be > 0")


def route(frame_kind: FrameKind, altitude_m: float,
          cfg: RoutingConfig = RoutingConfig()) -> TaskKind:
    """Total, deterministic dispatch of one capture to one task."""
    if frame_kind == FrameKind.LEAF_CLOSEUP:
        return TaskKind.LEAF_DISEASE
    if frame_kind == FrameKind.FRUIT_CLOSEUP:
        return TaskKind.FRESHNESS
    if frame_kind == FrameKind.CANOPY_WIDE:
        return TaskKind.APPLE_DETECTION
    # unknown framing: high altitude means a wide orchard scene
    if altitude_m >= cfg.altitude_threshold_m:
        return TaskKind.APPLE_DETECTION
    return cfg.default_task
