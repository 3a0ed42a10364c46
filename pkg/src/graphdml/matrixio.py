"""Dense matrix file formats.

Text format: header line ``N d`` followed by N whitespace-separated rows.
Binary formats: magic ``GFM1`` (little-endian u64 N, u64 d, then N*d f32
row-major) and ``GFM8`` (same layout with f64 payload), used to persist
filtered feature matrices between pipeline stages.
"""

import struct
from pathlib import Path

import numpy as np

__all__ = ["read_matrix", "write_matrix_text", "write_matrix_binary", "FormatError"]

_MAGIC_F32 = b"GFM1"
_MAGIC_F64 = b"GFM8"


class FormatError(ValueError):
    """Raised on malformed matrix/edge/label files."""


def read_matrix(path) -> np.ndarray:
    """Read a feature matrix, auto-detecting text vs. binary.

    Returns float64 regardless of on-disk precision (f32 is widened).
    """
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head in (_MAGIC_F32, _MAGIC_F64):
        return _read_binary(path)
    return _read_text(path)


def _read_binary(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        dtype = np.dtype("<f4") if magic == _MAGIC_F32 else np.dtype("<f8")
        n, d = struct.unpack("<QQ", fh.read(16))
        data = np.fromfile(fh, dtype=dtype, count=n * d)
    if data.size != n * d:
        raise FormatError(f"{path}: truncated payload, expected {n * d} values, got {data.size}")
    return data.reshape(n, d).astype(np.float64)


def _read_text(path: Path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
        try:
            n, d = (int(tok) for tok in header.split())
        except ValueError:
            raise FormatError(f"{path}:1: expected header 'N d', got {header.strip()!r}") from None
        out = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            line = fh.readline()
            if not line:
                raise FormatError(f"{path}: expected {n} rows, file ended at row {i}")
            try:
                row = np.array(line.split(), dtype=np.float64)
            except ValueError:
                raise FormatError(f"{path}:{i + 2}: non-numeric value") from None
            if row.size != d:
                raise FormatError(f"{path}:{i + 2}: expected {d} values, got {row.size}")
            out[i] = row
    return out


def write_matrix_text(path, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix)
    with open(path, "w") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def write_matrix_binary(path, matrix: np.ndarray, dtype: str = "f8") -> None:
    """Write GFM1 (dtype='f4') or GFM8 (dtype='f8')."""
    matrix = np.ascontiguousarray(matrix)
    if dtype == "f4":
        magic, payload = _MAGIC_F32, matrix.astype("<f4")
    elif dtype == "f8":
        magic, payload = _MAGIC_F64, matrix.astype("<f8")
    else:
        raise ValueError(f"unsupported dtype {dtype!r}")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<QQ", matrix.shape[0], matrix.shape[1]))
        payload.tofile(fh)
