"""Evaluation metrics, significance testing and inference benchmarking."""

from .bench import BenchReport, dataset_frames, fps_from_latency, run_benchmark
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    MetricsReport,
    class_metrics,
    confusion_from_predictions,
    f1_score,
    report,
)
from .stats import (
    GroupComparison,
    TTestResult,
    compare_groups,
    load_samples,
    regularized_incomplete_beta,
    t_cdf,
    two_sample_t_test,
)

__all__ = [
    "BenchReport",
    "ClassMetrics",
    "ConfusionMatrix",
    "GroupComparison",
    "MetricsReport",
    "TTestResult",
    "class_metrics",
    "compare_groups",
    "confusion_from_predictions",
    "dataset_frames",
    "f1_score",
    "fps_from_latency",
    "load_samples",
    "regularized_incomplete_beta",
    "report",
    "run_benchmark",
    "t_cdf",
    "two_sample_t_test",
]
