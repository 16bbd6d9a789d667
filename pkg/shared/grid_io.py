"""GRID2D persistence for grid functions.

Layout: one ASCII header line ``GRID2D n L`` followed by n*n little-endian
float64 samples in row-major order.
"""

import os
from pathlib import Path
import tempfile

import numpy as np

from shared.types import GridFunction2D

MAGIC = "GRID2D"
_DTYPE = np.dtype("<f8")


def encode_grid(u: GridFunction2D) -> bytes:
    header = f"{MAGIC} {u.n} {u.half_width!r}\n".encode("ascii")
    return header + np.ascontiguousarray(u.values, dtype=_DTYPE).tobytes(order="C")


def decode_grid(data: bytes, boundary_flag: bool = False) -> GridFunction2D:
    """
    Parse a GRID2D byte string.

    Raises:
        ValueError: If the header is malformed or the payload has the wrong size
    """
    newline = data.find(b"\n")
    if newline < 0:
        raise ValueError("GRID2D header line is missing")
    parts = data[:newline].decode("ascii", errors="replace").split()
    if len(parts) != 3 or parts[0] != MAGIC:
        raise ValueError(f"not a GRID2D header: {data[:newline][:64]!r}")
    try:
        n, L = int(parts[1]), float(parts[2])
    except ValueError as e:
        raise ValueError(f"bad GRID2D header fields: {parts[1:]}") from e

    payload = data[newline + 1 :]
    expected = n * n * _DTYPE.itemsize
    if len(payload) != expected:
        raise ValueError(f"GRID2D payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype=_DTYPE).reshape(n, n).astype(float)
    return GridFunction2D(values=values, half_width=L, boundary_flag=boundary_flag)


def write_grid(u: GridFunction2D, path: Path) -> Path:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_fd, temp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    temp_path = Path(temp_name)
    try:
        with os.fdopen(temp_fd, "wb") as f:
            f.write(encode_grid(u))
        temp_path.replace(path)
    except Exception:
        if temp_path.exists():
            temp_path.unlink()
        raise
    return path


def read_grid(path: Path, boundary_flag: bool = False) -> GridFunction2D:
    return decode_grid(Path(path).read_bytes(), boundary_flag=boundary_flag)
