"""Trace-driven simulator for queue-adaptive (drift-plus-penalty) video streaming."""
from .channel import ChannelModel, LinkBudget, capacity, dbm_to_mw, sample_gain, sample_gains
from .control import ConfigError, ControllerSpec, Decision, decide, phi, select_quality
from .engine import RunResult, SimConfig, StepRecord, queue_update, run, summarize
from .trace import (
    QualityMode,
    TraceEntry,
    TraceTable,
    bits_for,
    builtin_table1,
    entry,
    parse_trace_csv,
    serialize_trace_csv,
    validate,
)

__all__ = [
    "ChannelModel", "LinkBudget", "capacity", "dbm_to_mw", "sample_gain", "sample_gains",
    "ConfigError", "ControllerSpec", "Decision", "decide", "phi", "select_quality",
    "RunResult", "SimConfig", "StepRecord", "queue_update", "run", "summarize",
    "QualityMode", "TraceEntry", "TraceTable", "bits_for", "builtin_table1", "entry",
    "parse_trace_csv", "serialize_trace_csv", "validate",
]
