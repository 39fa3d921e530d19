"""Dense m-mode tensor primitives: Frobenius norm, unfolding, folding,
and mode multiplication.

Tensors are plain :class:`numpy.ndarray` objects of dtype float64 or
complex128.  The storage convention is colexicographic (Fortran order): the
first index varies fastest in the flat data.  Unfoldings order their columns
colexicographically over the remaining modes (earliest remaining index
fastest), so ``unfold(B, 0)`` of a Fortran-contiguous array is a zero-copy
reshape while other modes materialize one permuted copy.

Mode indices are 0-based throughout, ``0 <= mode < B.ndim``.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass

import numpy as np

REAL_DTYPE = np.dtype(np.float64)
COMPLEX_DTYPE = np.dtype(np.complex128)


def scalar_kind(arr: np.ndarray) -> str:
    """Return ``"real"`` or ``"complex"`` for a tensor's dtype."""
    if arr.dtype == REAL_DTYPE:
        return "real"
    if arr.dtype == COMPLEX_DTYPE:
        return "complex"
    raise TypeError(f"unsupported tensor dtype {arr.dtype}; expected float64 or complex128")


def dtype_for_kind(kind: str) -> np.dtype:
    if kind == "real":
        return REAL_DTYPE
    if kind == "complex":
        return COMPLEX_DTYPE
    raise ValueError(f"unknown scalar kind {kind!r}; expected 'real' or 'complex'")


def as_tensor(data, kind: str | None = None) -> np.ndarray:
    """Coerce array-like data to a float64/complex128 tensor in Fortran order."""
    dtype = dtype_for_kind(kind) if kind is not None else None
    arr = np.asarray(data, dtype=dtype)
    if arr.dtype not in (REAL_DTYPE, COMPLEX_DTYPE):
        arr = arr.astype(COMPLEX_DTYPE if np.iscomplexobj(arr) else REAL_DTYPE)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return np.asfortranarray(arr)


@dataclass
class FlopCounter:
    """Accumulates scalar multiply-add counts performed by :func:`mode_mul`."""

    madds: int = 0


_ACTIVE_COUNTER: contextvars.ContextVar[FlopCounter | None] = contextvars.ContextVar(
    "tuckerkit_flop_counter", default=None
)


@contextlib.contextmanager
def count_madds(counter: FlopCounter | None = None):
    """Context manager that records mode-product multiply-adds into `counter`."""
    if counter is None:
        counter = FlopCounter()
    token = _ACTIVE_COUNTER.set(counter)
    try:
        yield counter
    finally:
        _ACTIVE_COUNTER.reset(token)


def _check_mode(B: np.ndarray, mode: int) -> int:
    mode = int(mode)
    if not 0 <= mode < B.ndim:
        raise ValueError(f"mode {mode} out of range for a {B.ndim}-mode tensor")
    return mode


def frobenius_norm(B: np.ndarray) -> float:
    """sqrt of the sum of squared entry magnitudes."""
    return float(np.linalg.norm(np.ravel(B, order="K")))


def unfold(B: np.ndarray, mode: int) -> np.ndarray:
    """Matricize `B` along `mode`.

    The result has shape ``(n_mode, N / n_mode)``.  Column ``j`` corresponds
    to the multi-index over the remaining modes taken in colexicographic
    order, i.e. the earliest remaining mode varies fastest.
    """
    mode = _check_mode(B, mode)
    return np.reshape(np.moveaxis(B, mode, 0), (B.shape[mode], -1), order="F")


def fold(M: np.ndarray, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold`: rebuild a tensor of shape `dims` from its
    mode-`mode` unfolding.  Round-trips bit-exactly."""
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"dims must be positive, got {dims}")
    mode = int(mode)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    n = dims[mode]
    rest = tuple(d for i, d in enumerate(dims) if i != mode)
    expected_cols = int(np.prod(rest, dtype=np.int64)) if rest else 1
    if M.shape != (n, expected_cols):
        raise ValueError(f"matrix of shape {M.shape} cannot fold to dims {dims} along mode {mode}")
    arr = np.reshape(M, (n, *rest), order="F")
    return np.moveaxis(arr, 0, mode)


def mode_mul(B: np.ndarray, mode: int, X: np.ndarray) -> np.ndarray:
    """Mode-`mode` product ``B x_mode X`` for a ``k x n_mode`` matrix `X`.

    Implemented as ``fold(X @ unfold(B, mode))`` so that
    ``unfold(mode_mul(B, mode, X), mode) == X @ unfold(B, mode)`` holds
    bit-exactly.
    """
    mode = _check_mode(B, mode)
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != B.shape[mode]:
        raise ValueError(
            f"matrix of shape {X.shape} cannot contract mode {mode} of size {B.shape[mode]}"
        )
    counter = _ACTIVE_COUNTER.get()
    if counter is not None:
        counter.madds += int(X.shape[0]) * B.size
    M = unfold(B, mode)
    Y = X @ M
    new_dims = list(B.shape)
    new_dims[mode] = X.shape[0]
    return fold(Y, mode, new_dims)


def multi_mode_mul(B: np.ndarray, ops) -> np.ndarray:
    """Apply ``mode_mul`` for each ``(mode, matrix)`` pair in `ops`, in order.

    Modes must be distinct; for distinct modes the result is independent of
    the order of application (up to round-off).
    """
    seen: set[int] = set()
    for mode, _ in ops:
        mode = int(mode)
        if mode in seen:
            raise ValueError(f"repeated mode {mode} in multi-mode product")
        seen.add(mode)
    out = B
    for mode, X in ops:
        out = mode_mul(out, mode, X)
    return out
