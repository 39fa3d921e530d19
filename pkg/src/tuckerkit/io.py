"""Binary tensor I/O.

TNSR1 format
------------
A self-describing little-endian container::

    bytes 0-3   magic "TNSR"
    byte  4     version, 0x01
    byte  5     scalar kind: 0 = real (float64), 1 = complex (complex128)
    bytes 6-9   u32 number of modes m
    next 8*m    u64 dimensions n_0 .. n_{m-1}
    rest        entries as IEEE-754 doubles in colexicographic (Fortran)
                storage order; complex entries are written as (real, imag)
                pairs.

Raw import reads a headerless stream of f32 or f64 values with caller-supplied
dimensions (for external datasets distributed as bare binary dumps).
"""

from __future__ import annotations

import struct

import numpy as np

from .tensor import COMPLEX_DTYPE, REAL_DTYPE, scalar_kind

MAGIC = b"TNSR"
VERSION = 1


class TensorFormatError(Exception):
    """Raised when a tensor file is malformed or truncated."""


def write_tensor(path, B: np.ndarray) -> None:
    """Write `B` to `path` in TNSR1 format."""
    kind = scalar_kind(B)
    dims = B.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION, 0 if kind == "real" else 1]))
        fh.write(struct.pack("<I", len(dims)))
        fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        flat = np.ravel(B, order="F")
        if kind == "real":
            fh.write(flat.astype("<f8", copy=False).tobytes())
        else:
            inter = np.empty(2 * flat.size, dtype="<f8")
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            fh.write(inter.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a TNSR1 file back into a Fortran-ordered array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 10 or raw[:4] != MAGIC:
        raise TensorFormatError(f"{path}: not a TNSR1 file (bad magic)")
    if raw[4] != VERSION:
        raise TensorFormatError(f"{path}: unsupported TNSR version {raw[4]}")
    kind_byte = raw[5]
    if kind_byte not in (0, 1):
        raise TensorFormatError(f"{path}: unknown scalar kind byte {kind_byte}")
    (m,) = struct.unpack_from("<I", raw, 6)
    header_end = 10 + 8 * m
    if m < 1 or len(raw) < header_end:
        raise TensorFormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{m}Q", raw, 10)
    if any(d < 1 for d in dims):
        raise TensorFormatError(f"{path}: nonpositive dimension in {dims}")
    count = int(np.prod(dims, dtype=np.int64))
    values = count * (2 if kind_byte == 1 else 1)
    expected = header_end + 8 * values
    if len(raw) != expected:
        raise TensorFormatError(
            f"{path}: expected {expected} bytes for dims {dims}, found {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype="<f8", count=values, offset=header_end)
    if kind_byte == 1:
        data = (flat[0::2] + 1j * flat[1::2]).astype(COMPLEX_DTYPE)
    else:
        data = flat.astype(REAL_DTYPE)
    return np.reshape(data, dims, order="F")


def read_raw(path, dims, precision: str = "f64") -> np.ndarray:
    """Read a headerless little-endian float stream as a real tensor.

    `precision` selects the on-disk value width, ``"f32"`` or ``"f64"``;
    values are widened to float64 in memory.
    """
    if precision not in ("f32", "f64"):
        raise ValueError(f"precision must be 'f32' or 'f64', got {precision!r}")
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"dims must be positive, got {dims}")
    count = int(np.prod(dims, dtype=np.int64))
    dtype = np.dtype("<f4") if precision == "f32" else np.dtype("<f8")
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) != count * dtype.itemsize:
        raise TensorFormatError(
            f"{path}: raw stream holds {len(raw)} bytes, need exactly "
            f"{count * dtype.itemsize} for dims {dims} at {precision}"
        )
    flat = np.frombuffer(raw, dtype=dtype).astype(REAL_DTYPE)
    return np.reshape(flat, dims, order="F")
