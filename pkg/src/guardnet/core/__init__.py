"""Tensor primitives, run tracing and host telemetry."""

from .tensor import Shape, Tensor, as_tensor, elementwise, ensure_finite, matmul, reduce
from .telemetry import HostSnapshot, collect_basic_telemetry
from .tracing import TraceEvent, TraceWriter, read_trace

__all__ = [
    "HostSnapshot",
    "Shape",
    "Tensor",
    "TraceEvent",
    "TraceWriter",
    "as_tensor",
    "collect_basic_telemetry",
    "elementwise",
    "ensure_finite",
    "matmul",
    "read_trace",
    "reduce",
]
