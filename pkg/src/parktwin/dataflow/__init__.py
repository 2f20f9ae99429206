"""Dataflow engine: periodic source polling, declarative transform, context
sink, and notification-driven historical persistence."""

from parktwin.dataflow.transform import MappingSpec, transform
from parktwin.dataflow.history import HistoricalRecord, HistoryStore
from parktwin.dataflow.pipeline import PipelineRunner, PipelineSpec

__all__ = [
    "MappingSpec",
    "transform",
    "HistoricalRecord",
    "HistoryStore",
    "PipelineRunner",
    "PipelineSpec",
]
