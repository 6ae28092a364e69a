"""Binary file formats: 16-bit PGM (P5) grids and MGF1 float fields."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MGF_MAGIC = b"MGF1"


class FormatError(Exception):
    """An input file does not conform to its declared on-disk format."""


def write_pgm(path: str | Path, values: np.ndarray) -> None:
    """Write a uint16 grid as binary PGM (P5), maxval 65535, big-endian samples.

    Output never contains comment lines.
    """
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError("PGM grids must be 2-D")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
        raise ValueError("PGM sample values must lie in [0, 65535]")
    data = np.ascontiguousarray(arr.astype(">u2"))
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n65535\n" % (w, h))
        fh.write(data.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM (P5) file into a uint16 (H, W) array.

    Header comments (``#`` to end of line) are tolerated. Samples are one
    byte for maxval < 256, otherwise two bytes big-endian.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read PGM file {path}: {exc}") from exc

    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(raw):
            c = raw[pos : pos + 1]
            if c == b"#":
                while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"truncated PGM header in {path}")
        return raw[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise FormatError(f"not a binary PGM (P5) file: {path}")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise FormatError(f"malformed PGM header in {path}") from exc
    if width < 1 or height < 1 or not (1 <= maxval <= 65535):
        raise FormatError(f"invalid PGM dimensions or maxval in {path}")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = height * width * dtype.itemsize
    body = raw[pos : pos + expected]
    if len(body) != expected:
        raise FormatError(f"truncated PGM raster in {path}")
    return np.frombuffer(body, dtype=dtype).reshape(height, width).astype(np.uint16)


def write_mgf(path: str | Path, values: np.ndarray) -> None:
    """Write a field as MGF1: magic, u32 {height, width, channels}, then f32.

    Accepts (H, W) or (H, W, C) input; values are stored little-endian,
    row-major, channels fastest.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError("MGF fields must be (H, W) or (H, W, C)")
    h, w, c = arr.shape
    data = np.ascontiguousarray(arr.astype("<f4"))
    with open(path, "wb") as fh:
        fh.write(MGF_MAGIC)
        fh.write(struct.pack("<III", h, w, c))
        fh.write(data.tobytes())


def read_mgf(path: str | Path) -> np.ndarray:
    """Read an MGF1 file; returns float32 (H, W) when channels == 1, else (H, W, C)."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read MGF file {path}: {exc}") from exc
    if len(raw) < 16 or raw[:4] != MGF_MAGIC:
        raise FormatError(f"not an MGF1 file: {path}")
    h, w, c = struct.unpack("<III", raw[4:16])
    if h < 1 or w < 1 or c < 1:
        raise FormatError(f"invalid MGF1 dimensions in {path}")
    expected = h * w * c * 4
    body = raw[16 : 16 + expected]
    if len(body) != expected:
        raise FormatError(f"truncated MGF1 payload in {path}")
    arr = np.frombuffer(body, dtype="<f4").reshape(h, w, c).astype(np.float32)
    return arr[:, :, 0] if c == 1 else arr
