"""Binary PPM (P6, maxval 255) codec."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from guardnet.errors import FormatError

_WHITESPACE = b" \t\n\r\v\f"


def _header_tokens(payload: bytes, path: Path) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(payload):
            raise FormatError(f"{path}: truncated PPM header")
        char = payload[pos : pos + 1]
        if char in _WHITESPACE:
            pos += 1
        elif char == b"#":
            end = payload.find(b"\n", pos)
            pos = len(payload) if end == -1 else end + 1
        else:
            start = pos
            while pos < len(payload) and payload[pos : pos + 1] not in _WHITESPACE + b"#":
                pos += 1
            tokens.append(payload[start:pos])
    if pos >= len(payload) or payload[pos : pos + 1] not in _WHITESPACE:
        raise FormatError(f"{path}: missing separator after PPM header")
    return tokens, pos + 1


def decode_ppm(payload: bytes, path: Path) -> np.ndarray:
    if not payload.startswith(b"P6"):
        magic = payload[:2].decode("latin-1") or "<empty>"
        raise FormatError(f"{path}: unsupported magic '{magic}', only binary P6 is supported")
    tokens, offset = _header_tokens(payload, path)
    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric PPM header") from exc
    if width < 1 or height < 1:
        raise FormatError(f"{path}: invalid PPM size {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} unsupported, expected 255")
    expected = width * height * 3
    raster = payload[offset : offset + expected]
    if len(raster) != expected:
        raise FormatError(f"{path}: raster has {len(raster)} bytes, expected {expected}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def read_ppm(path: Path) -> np.ndarray:
    """``[H, W, 3]`` uint8 pixels of a P6 file."""
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc
    return decode_ppm(payload, path)


def encode_ppm(image: np.ndarray) -> bytes:
    pixels = np.asarray(image)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise FormatError(f"PPM needs an [H,W,3] image, got {list(pixels.shape)}")
    if pixels.dtype != np.uint8:
        if pixels.min() < 0 or pixels.max() > 255:
            raise FormatError("PPM pixel values must lie in [0,255]")
        pixels = np.rint(pixels).astype(np.uint8)
    height, width = pixels.shape[:2]
    return f"P6\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()


def write_ppm(path: Path, image: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_ppm(image))
    return path
