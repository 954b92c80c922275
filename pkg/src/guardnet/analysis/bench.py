from __future__ import annotations

import itertools
import logging
import time
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from guardnet.core.telemetry import HostSnapshot, collect_basic_telemetry
from guardnet.core.tensor import reduce
from guardnet.data.dataset import Dataset
from guardnet.data.transforms import normalize, resize_bilinear
from guardnet.errors import BenchError

logger = logging.getLogger(__name__)

MIN_TIMED_FRAMES = 30
DEFAULT_WARMUP = 10


class Classifier(Protocol):
    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        ...


@dataclass(slots=True)
class BenchReport:
    frames: int
    warmup_frames: int
    mean_latency_ms: float
    p50_ms: float
    p95_ms: float
    p99_ms: float
    avg_fps: float
    seed: int | None = None
    host: HostSnapshot | None = None

    def to_json(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "frames": self.frames,
            "warmup_frames": self.warmup_frames,
            "mean_latency_ms": self.mean_latency_ms,
            "p50_ms": self.p50_ms,
            "p95_ms": self.p95_ms,
            "p99_ms": self.p99_ms,
            "avg_fps": self.avg_fps,
            "seed": self.seed,
        }
        if self.host is not None:
            payload["host"] = self.host.to_json()
        return payload


def fps_from_latency(mean_latency_ms: float) -> float:
    if mean_latency_ms <= 0:
        raise BenchError(f"mean latency must be positive, got {mean_latency_ms} ms")
    return 1000.0 / mean_latency_ms


def _classify(model: Classifier, frame: np.ndarray) -> int:
    logits = model.forward(normalize(frame)[None], training=False)
    return int(reduce("argmax", logits, axis=1)[0])


def run_benchmark(
    model: Classifier,
    frame_source: Iterable[np.ndarray],
    frame_count: int,
    warmup: int = DEFAULT_WARMUP,
    *,
    clock: Callable[[], float] = time.perf_counter,
    seed: int | None = None,
    collect_host: bool = True,
) -> BenchReport:
    """Time normalize + forward + argmax per frame; warm-up frames are not timed.

    ``clock`` must be monotonic with a resolution finer than one frame. A clock
    that reports 0 ms for every timed frame is rejected with ``BenchError``.
    """
    if frame_count < MIN_TIMED_FRAMES:
        raise BenchError(f"need at least {MIN_TIMED_FRAMES} timed frames, got {frame_count}")
    if warmup < 0:
        raise BenchError(f"warmup must be >= 0, got {warmup}")

    frames = iter(frame_source)
    seen = 0
    for frame in itertools.islice(frames, warmup):
        _classify(model, frame)
        seen += 1

    latencies: list[float] = []
    for frame in itertools.islice(frames, frame_count):
        start = clock()
        _classify(model, frame)
        latencies.append((clock() - start) * 1000.0)

    if not latencies:
        raise BenchError(f"frame source ran dry after {seen} warm-up frames")
    if len(latencies) < frame_count:
        logger.warning("frame source ended early: timed %d of %d frames", len(latencies), frame_count)

    timings = np.asarray(latencies, dtype=np.float64)
    mean_ms = float(timings.mean())
    if mean_ms == 0.0:
        raise BenchError(
            f"clock resolution too coarse: all {timings.size} timed frames measured 0 ms"
        )
    p50, p95, p99 = (float(value) for value in np.percentile(timings, [50, 95, 99]))
    report = BenchReport(
        frames=int(timings.size),
        warmup_frames=seen,
        mean_latency_ms=mean_ms,
        p50_ms=p50,
        p95_ms=p95,
        p99_ms=p99,
        avg_fps=fps_from_latency(mean_ms),
        seed=seed,
        host=collect_basic_telemetry() if collect_host else None,
    )
    logger.info("bench: %d frames, mean %.3f ms, %.1f fps", report.frames, mean_ms, report.avg_fps)
    return report


def dataset_frames(dataset: Dataset, image_size: tuple[int, int]) -> Iterator[np.ndarray]:
    """Cycle through the dataset's images, resized to ``image_size``."""
    if len(dataset) == 0:
        raise BenchError("dataset has no frames to benchmark")
    images = [
        sample.image if sample.image.shape[:2] == tuple(image_size)
        else resize_bilinear(sample.image, image_size)
        for sample in dataset.samples
    ]
    return itertools.cycle(images)
