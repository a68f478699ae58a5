"""Binary container for fields on a periodic grid.

Layout (little-endian)::

    8 bytes   magic  b"EPFIELD1"
    uint32    dim
    float64   period
    uint32    points_per_axis
    uint32    component count
    float64[] samples, row-major, shape (ncomp, N, ..., N)

A one-component file in d >= 2 reads back as a ScalarField; otherwise the
component count must equal ``dim`` and the result is a VectorField.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .spectral_core import PeriodicGrid, ScalarField, VectorField

__all__ = ["MAGIC", "FieldFormatError", "write_field", "read_field", "atomic_write_bytes", "atomic_write_text"]

MAGIC = b"EPFIELD1"
_HEADER = struct.Struct("<8sIdII")


class FieldFormatError(ValueError):
    """The file does not hold a well-formed field."""


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> Path:
    """Write via a temporary file in the same directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _encode(f: ScalarField | VectorField) -> bytes:
    g = f.grid
    if isinstance(f, VectorField):
        data = f.samples
    elif isinstance(f, ScalarField):
        data = f.samples[None]
    else:
        raise TypeError(f"cannot serialise {type(f).__name__}")
    data = np.ascontiguousarray(data, dtype="<f8")
    header = _HEADER.pack(MAGIC, g.dim, float(g.period), g.points_per_axis, data.shape[0])
    return header + data.tobytes(order="C")


def write_field(path: str | os.PathLike, f: ScalarField | VectorField) -> Path:
    return atomic_write_bytes(path, _encode(f))


def _decode(buf: bytes) -> ScalarField | VectorField:
    if len(buf) < _HEADER.size:
        raise FieldFormatError("file shorter than the header")
    magic, dim, period, n, ncomp = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    if dim < 1:
        raise FieldFormatError(f"dim must be >= 1, got {dim}")
    if n < 2 or n % 2 or n & (n - 1):
        raise FieldFormatError(f"points_per_axis must be an even power of two, got {n}")
    if not (np.isfinite(period) and period > 0):
        raise FieldFormatError(f"period must be positive, got {period}")
    if ncomp != dim and ncomp != 1:
        raise FieldFormatError(f"component count {ncomp} matches neither 1 nor dim={dim}")
    shape = (ncomp,) + (n,) * dim
    count = int(np.prod(shape))
    if len(buf) != _HEADER.size + 8 * count:
        raise FieldFormatError(
            f"payload holds {len(buf) - _HEADER.size} bytes, header implies {8 * count}")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=_HEADER.size).reshape(shape)
    data = data.astype(np.float64)  # native, writable copy
    grid = PeriodicGrid(dim, n, period)
    if ncomp == dim:
        return VectorField(grid, data)
    return ScalarField(grid, data[0])


def read_field(path: str | os.PathLike) -> ScalarField | VectorField:
    return _decode(Path(path).read_bytes())
