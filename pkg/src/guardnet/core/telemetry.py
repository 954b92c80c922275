from __future__ import annotations

import os
import platform
from collections.abc import Iterable
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

PROC_MEMINFO = Path("/proc/meminfo")
PROC_CPUINFO = Path("/proc/cpuinfo")


@dataclass(slots=True)
class HostSnapshot:
    """Host description attached to benchmark reports."""

    platform: str
    python: str
    numpy: str
    cpu_model: str | None
    cpu_count: int | None
    ram_total_mb: int | None
    ram_avail_mb: int | None

    def to_json(self) -> dict[str, object]:
        return asdict(self)


def _read_proc_fields(path: Path, keys: Iterable[str]) -> dict[str, str]:
    """First value for each ``key: value`` line of a /proc text file."""
    wanted = set(keys)
    found: dict[str, str] = {}
    try:
        lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
    except OSError:
        return found
    for line in lines:
        key, sep, value = line.partition(":")
        key = key.strip()
        if sep and key in wanted and key not in found:
            found[key] = value.strip()
            if len(found) == len(wanted):
                break
    return found


def _kb_to_mb(raw: str | None) -> int | None:
    if not raw:
        return None
    try:
        return int(raw.split()[0]) // 1024
    except (ValueError, IndexError):
        return None


def collect_basic_telemetry() -> HostSnapshot:
    memory: dict[str, str] = {}
    cpu: dict[str, str] = {}
    if platform.system().lower() == "linux":
        memory = _read_proc_fields(PROC_MEMINFO, ("MemTotal", "MemAvailable"))
        cpu = _read_proc_fields(PROC_CPUINFO, ("model name",))
    return HostSnapshot(
        platform=platform.platform(),
        python=platform.python_version(),
        numpy=np.__version__,
        cpu_model=cpu.get("model name") or platform.processor() or None,
        cpu_count=os.cpu_count(),
        ram_total_mb=_kb_to_mb(memory.get("MemTotal")),
        ram_avail_mb=_kb_to_mb(memory.get("MemAvailable")),
    )
