"""SDLW weights files.

Layout (little-endian): magic ``b"SDLW"``, format version ``u32``, then one
record per tensor until end of file: name length ``u32``, UTF-8 name bytes,
rank ``u32``, ``rank`` dims as ``u32``, raw ``float32`` data.
"""

from __future__ import annotations

import logging
import os
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from guardnet.errors import FormatError, ShapeError
from guardnet.models.mobilenet import Model

MAGIC = b"SDLW"
FORMAT_VERSION = 1

_U32 = struct.Struct("<I")
_F32 = np.dtype("<f4")

logger = logging.getLogger(__name__)


def encode_tensors(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, _U32.pack(FORMAT_VERSION)]
    for name, tensor in tensors.items():
        raw_name = name.encode("utf-8")
        array = np.asarray(tensor)
        chunks.append(_U32.pack(len(raw_name)))
        chunks.append(raw_name)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(dim) for dim in array.shape)
        chunks.append(np.ascontiguousarray(array, dtype=_F32).tobytes())
    return b"".join(chunks)


def write_tensors(path: Path, tensors: Mapping[str, np.ndarray]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_suffix(path.suffix + ".tmp")
    with temp_path.open("wb") as handle:
        handle.write(encode_tensors(tensors))
        handle.flush()
        os.fsync(handle.fileno())
    temp_path.replace(path)
    return path


class _Reader:
    def __init__(self, payload: bytes, path: Path) -> None:
        self.view = memoryview(payload)
        self.offset = 0
        self.path = path

    @property
    def exhausted(self) -> bool:
        return self.offset >= len(self.view)

    def take(self, count: int, what: str) -> memoryview:
        end = self.offset + count
        if end > len(self.view):
            raise FormatError(f"{self.path}: truncated while reading {what}")
        chunk = self.view[self.offset : end]
        self.offset = end
        return chunk

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(_U32.size, what))[0]


def decode_tensors(payload: bytes, path: Path) -> dict[str, np.ndarray]:
    reader = _Reader(payload, path)
    if bytes(reader.take(len(MAGIC), "magic")) != MAGIC:
        raise FormatError(f"{path}: not an SDLW file (bad magic)")
    version = reader.u32("format version")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported SDLW version {version}")
    tensors: dict[str, np.ndarray] = {}
    while not reader.exhausted:
        length = reader.u32("name length")
        try:
            name = bytes(reader.take(length, "tensor name")).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: tensor name is not UTF-8") from exc
        rank = reader.u32(f"rank of {name}")
        dims = tuple(reader.u32(f"dims of {name}") for _ in range(rank))
        count = int(np.prod(dims, dtype=np.int64))
        raw = reader.take(count * _F32.itemsize, f"data of {name}")
        if name in tensors:
            raise FormatError(f"{path}: duplicate tensor '{name}'")
        tensors[name] = np.frombuffer(raw, dtype=_F32).astype(np.float32).reshape(dims)
    return tensors


def read_tensors(path: Path) -> dict[str, np.ndarray]:
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read weights file {path}: {exc.strerror}") from exc
    return decode_tensors(payload, path)


def save_weights(model: Model, path: Path) -> Path:
    written = write_tensors(path, model.state_dict())
    logger.info("saved %s weights to %s", model.variant, written)
    return written


def load_weights(path: Path, model: Model) -> Model:
    """Load every tensor into ``model``; nothing is assigned unless all of them fit."""
    tensors = read_tensors(path)
    state = model.state_dict()
    for name, target in state.items():
        loaded = tensors.get(name)
        if loaded is None:
            raise FormatError(f"{path}: missing tensor '{name}'")
        if loaded.shape != target.shape:
            raise ShapeError(
                f"{path}: tensor '{name}' has shape {list(loaded.shape)}, "
                f"model expects {list(target.shape)}"
            )
    extra = [name for name in tensors if name not in state]
    if extra:
        raise FormatError(f"{path}: unexpected tensor '{extra[0]}'")
    for name, target in state.items():
        target[...] = tensors[name]
    logger.info("loaded %d tensors from %s into %s", len(state), path, model.variant)
    return model
