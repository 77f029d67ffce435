"""Binary array formats, PGM previews, CSV profiles and atomic file writes.

All binary formats are little-endian:

* ``BPF1`` complex field: u32 rows, u32 cols, row-major ``(re, im)`` float64 pairs
* ``BPR1`` real field: u32 rows, u32 cols, row-major float64
* ``BPB1`` frame stack: u32 frames, u32 rows, u32 cols, then each row
  bit-packed most-significant bit first and padded to a whole byte
"""

from __future__ import annotations

import json
import logging
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .fourier import ComplexField2D, RealField2D
from .measurement import FrameStack

log = logging.getLogger(__name__)

MAGIC_COMPLEX = b"BPF1"
MAGIC_REAL = b"BPR1"
MAGIC_FRAMES = b"BPB1"
_HEAD2 = struct.Struct("<4sII")
_HEAD3 = struct.Struct("<4sIII")


class FormatError(ValueError):
    """Malformed or truncated binary artifact."""


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def encode_field(field) -> bytes:
    """Serialize a complex/real 2D field or a :class:`FrameStack`."""
    if isinstance(field, FrameStack):
        p = field.packed
        return _HEAD3.pack(MAGIC_FRAMES, p.shape[0], field.n, field.n) + p.tobytes()
    if isinstance(field, (ComplexField2D, RealField2D)):
        field = field.values
    a = np.asarray(field)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {a.shape}")
    rows, cols = a.shape
    if np.iscomplexobj(a):
        body = np.ascontiguousarray(a, dtype="<c16").tobytes()
        return _HEAD2.pack(MAGIC_COMPLEX, rows, cols) + body
    body = np.ascontiguousarray(a, dtype="<f8").tobytes()
    return _HEAD2.pack(MAGIC_REAL, rows, cols) + body


def decode_field(data: bytes):
    """Inverse of :func:`encode_field`: a complex/real ndarray or a FrameStack."""
    if len(data) < 4:
        raise FormatError("file too short for a header")
    magic = data[:4]
    if magic in (MAGIC_COMPLEX, MAGIC_REAL):
        if len(data) < _HEAD2.size:
            raise FormatError("truncated header")
        _, rows, cols = _HEAD2.unpack_from(data)
        dtype = "<c16" if magic == MAGIC_COMPLEX else "<f8"
        expected = _HEAD2.size + rows * cols * np.dtype(dtype).itemsize
        if len(data) != expected:
            raise FormatError(f"payload size {len(data)} does not match header ({expected} bytes expected)")
        return np.frombuffer(data, dtype=dtype, offset=_HEAD2.size).reshape(rows, cols).astype(dtype[1:])
    if magic == MAGIC_FRAMES:
        if len(data) < _HEAD3.size:
            raise FormatError("truncated header")
        _, frames, rows, cols = _HEAD3.unpack_from(data)
        if rows != cols:
            raise FormatError("frame stacks must be square")
        stride = (cols + 7) // 8
        expected = _HEAD3.size + frames * rows * stride
        if len(data) != expected:
            raise FormatError(f"payload size {len(data)} does not match header ({expected} bytes expected)")
        packed = np.frombuffer(data, dtype=np.uint8, offset=_HEAD3.size).reshape(frames, rows, stride)
        return FrameStack(packed.copy(), cols, 0)
    raise FormatError(f"unknown magic {magic!r}")


def dump_field(field, path) -> Path:
    return atomic_write_bytes(path, encode_field(field))


def load_field(path):
    return decode_field(Path(path).read_bytes())


def preview_bytes(values, scale: str = "linear") -> bytes:
    """8-bit binary PGM (P5) of a non-negative 2D array.

    Rows are written top to bottom in decreasing array row index, so ``+y``
    points up. ``log`` maps ``log10(max(v, 1e-6 * max))`` onto 0..255. A
    constant non-zero field renders mid-gray; an all-zero field renders
    black and logs a warning.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("preview needs a 2D array")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValueError("preview needs a finite, non-negative field")
    vmax = v.max()
    if vmax == 0:
        log.warning("all-zero field rendered as a black image")
        img = np.zeros(v.shape, dtype=np.uint8)
    else:
        if scale == "log":
            v = np.log10(np.maximum(v, 1e-6 * vmax))
        elif scale != "linear":
            raise ValueError(f"scale must be 'linear' or 'log', got {scale!r}")
        lo, hi = v.min(), v.max()
        if hi == lo:
            img = np.full(v.shape, 128, dtype=np.uint8)
        else:
            img = np.rint(255.0 * (v - lo) / (hi - lo)).astype(np.uint8)
    img = img[::-1]
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def render_preview(field, path, scale: str = "linear") -> Path:
    if isinstance(field, (ComplexField2D, RealField2D)):
        field = field.values
    return atomic_write_bytes(path, preview_bytes(field, scale))


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise FormatError("not a binary PGM")
    w, h = (int(x) for x in parts[1].split())
    img = np.frombuffer(parts[3], dtype=np.uint8)
    if img.size != w * h:
        raise FormatError("truncated PGM")
    return img.reshape(h, w)


def csv_text(header, columns) -> str:
    cols = [np.asarray(c, dtype=float) for c in columns]
    if len(header) != len(cols) or len({c.size for c in cols}) > 1:
        raise ValueError("header and columns must agree")
    lines = [",".join(header)]
    lines += [",".join(repr(float(x)) for x in row) for row in zip(*cols)]
    return "\n".join(lines) + "\n"


def write_csv(path, header, columns) -> Path:
    return atomic_write_text(path, csv_text(header, columns))


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
