"""Edge-deployable orchard monitoring pipeline: UAV capture ingestion, task
routing, pluggable inference backends, detection postprocessing, durable
result storage and an offline evaluation engine."""

__version__ = "0.1.0"

from .routing import FrameKind, RoutingConfig, TaskKind, route  # noqa: F401
