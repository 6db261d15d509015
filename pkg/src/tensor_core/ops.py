"""Differentiable primitives.

Every primitive computes its forward value with numpy and, when an input
requires a gradient and a tape is active, records a vector-Jacobian product
on that tape. Binary elementwise primitives broadcast like numpy; their
backward passes sum gradients back onto the broadcast input shapes.

Matrix primitives follow ``numpy.matmul`` semantics, so leading batch
dimensions broadcast: a ``(d, d)`` weight can multiply a ``(N, d, L)`` stack of
token matrices.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np

from ..exceptions import BoundsError, DegenerateVectorError, NumericError, ShapeError
from .tensor import VJP, Tensor, active_tape

if TYPE_CHECKING:
    from ..types import BoolArray, FloatArray, IntArray

NORM_EPS = 1e-12
QUICK_GELU_SLOPE = 1.702

type Operand = Tensor | float | int


def as_tensor(value: Operand | FloatArray) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: FloatArray, inputs: tuple[Tensor, ...], vjp: VJP, op: str) -> Tensor:
    out = Tensor._wrap(data)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, vjp, op)
    return out


def _unbroadcast(grad: FloatArray, shape: tuple[int, ...]) -> FloatArray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from e


# Elementwise


def add(a: Operand, b: Operand) -> Tensor:
    ta, tb = as_tensor(a), as_tensor(b)
    _check_broadcast(ta, tb, "add")

    def vjp(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        return _unbroadcast(g, ta.shape), _unbroadcast(g, tb.shape)

    return _result(ta.data + tb.data, (ta, tb), vjp, "add")


def sub(a: Operand, b: Operand) -> Tensor:
    ta, tb = as_tensor(a), as_tensor(b)
    _check_broadcast(ta, tb, "sub")

    def vjp(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        return _unbroadcast(g, ta.shape), _unbroadcast(-g, tb.shape)

    return _result(ta.data - tb.data, (ta, tb), vjp, "sub")


def mul(a: Operand, b: Operand) -> Tensor:
    ta, tb = as_tensor(a), as_tensor(b)
    _check_broadcast(ta, tb, "mul")

    def vjp(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        return _unbroadcast(g * tb.data, ta.shape), _unbroadcast(g * ta.data, tb.shape)

    return _result(ta.data * tb.data, (ta, tb), vjp, "mul")


def exp(x: Tensor) -> Tensor:
    out_data = np.exp(x.data)

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (g * out_data,)

    return _result(out_data, (x,), vjp, "exp")


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0.0):
        raise NumericError("log of a non-positive value")

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (g / x.data,)

    return _result(np.log(x.data), (x,), vjp, "log")


def _logistic(values: FloatArray) -> FloatArray:
    # Split by sign so exp never overflows.
    positive = values >= 0
    out = np.empty_like(values)
    out[positive] = 1.0 / (1.0 + np.exp(-values[positive]))
    exp_v = np.exp(values[~positive])
    out[~positive] = exp_v / (1.0 + exp_v)
    return out


def sigmoid(x: Tensor) -> Tensor:
    out_data = _logistic(x.data)

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (g * out_data * (1.0 - out_data),)

    return _result(out_data, (x,), vjp, "sigmoid")


def softplus(x: Tensor) -> Tensor:
    """Stable ``log(1 + exp(x))``."""
    out_data = np.maximum(x.data, 0.0) + np.log1p(np.exp(-np.abs(x.data)))

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (g * _logistic(x.data),)

    return _result(out_data, (x,), vjp, "softplus")


def quick_gelu(x: Tensor) -> Tensor:
    """``x * sigmoid(1.702 x)``, the smooth activation used by the mixers."""
    return mul(x, sigmoid(mul(x, QUICK_GELU_SLOPE)))


def masked_fill(x: Tensor, mask: BoolArray, value: float) -> Tensor:
    """Replace masked entries by a constant; masked entries receive no gradient."""
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (np.where(mask, 0.0, g),)

    return _result(np.where(mask, value, x.data), (x,), vjp, "masked_fill")


# Shape


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        out_data = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape: cannot view {x.shape} as {shape}") from e

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (g.reshape(x.shape),)

    return _result(out_data, (x,), vjp, "reshape")


def transpose(x: Tensor) -> Tensor:
    """Swap the last two axes."""
    if x.ndim < 2:
        raise ShapeError(f"transpose needs at least 2 dimensions, got shape {x.shape}")

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (np.swapaxes(g, -1, -2),)

    return _result(np.ascontiguousarray(np.swapaxes(x.data, -1, -2)), (x,), vjp, "transpose")


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    parts = tuple(tensors)
    try:
        out_data = np.concatenate([t.data for t in parts], axis=axis)
    except ValueError as e:
        shapes = [t.shape for t in parts]
        raise ShapeError(f"concat along axis {axis}: incompatible shapes {shapes}") from e
    bounds = np.cumsum([t.shape[axis] for t in parts])[:-1]

    def vjp(g: FloatArray) -> list[FloatArray]:
        return np.split(g, bounds, axis=axis)

    return _result(out_data, parts, vjp, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = tuple(tensors)
    try:
        out_data = np.stack([t.data for t in parts], axis=axis)
    except ValueError as e:
        shapes = [t.shape for t in parts]
        raise ShapeError(f"stack: incompatible shapes {shapes}") from e

    def vjp(g: FloatArray) -> list[FloatArray]:
        return [np.take(g, i, axis=axis) for i in range(len(parts))]

    return _result(out_data, parts, vjp, "stack")


def index_select(x: Tensor, indices: Sequence[int] | IntArray, axis: int) -> Tensor:
    """Gather slices ``x.take(indices, axis)``; repeated indices accumulate in backward."""
    idx = np.asarray(indices, dtype=np.int64)
    size = x.shape[axis]
    if idx.size and (idx.min() < -size or idx.max() >= size):
        raise BoundsError(f"index_select: indices out of range for axis {axis} of size {size}")

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        grad = np.zeros_like(x.data)
        moved = np.moveaxis(grad, axis, 0)
        np.add.at(moved, idx, np.moveaxis(g, axis, 0))
        return (grad,)

    return _result(np.take(x.data, idx, axis=axis), (x,), vjp, "index_select")


def pick(x: Tensor, rows: Sequence[int] | IntArray, cols: Sequence[int] | IntArray) -> Tensor:
    """Elementwise gather ``x[rows[k], cols[k]]`` from a 2-D tensor."""
    if x.ndim != 2:
        raise ShapeError(f"pick needs a 2-D tensor, got shape {x.shape}")
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        grad = np.zeros_like(x.data)
        np.add.at(grad, (r, c), g)
        return (grad,)

    return _result(x.data[r, c], (x,), vjp, "pick")


# Reductions


def sum(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    def vjp(g: FloatArray) -> tuple[FloatArray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _result(np.sum(x.data, axis=axis, keepdims=keepdims), (x,), vjp, "sum")


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    count = x.size if axis is None else x.shape[axis]
    return mul(sum(x, axis=axis), 1.0 / count)


def logsumexp(x: Tensor, axis: int = -1) -> Tensor:
    """Max-shifted ``log(sum(exp(x)))``; ``-inf`` entries are ignored."""
    if np.isnan(x.data).any():
        raise NumericError("logsumexp received NaN")
    peak = np.max(x.data, axis=axis, keepdims=True)
    if np.isneginf(peak).any():
        raise NumericError("logsumexp over a row with no finite entries")
    shifted = np.exp(x.data - peak)
    total = np.sum(shifted, axis=axis, keepdims=True)
    out_keep = peak + np.log(total)
    weights = shifted / total

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        return (np.expand_dims(g, axis) * weights,)

    return _result(np.squeeze(out_keep, axis=axis), (x,), vjp, "logsumexp")


# Linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product; gradients are ``g·bᵀ`` and ``aᵀ·g``."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    try:
        out_data = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"matmul: incompatible batch shapes {a.shape} and {b.shape}") from e

    def vjp(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _result(out_data, (a, b), vjp, "matmul")


def gather_rows(table: Tensor, ids: IntArray) -> Tensor:
    """Embedding lookup ``table[ids]`` for an integer array of any shape."""
    idx = np.asarray(ids, dtype=np.int64)

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        grad = np.zeros_like(table.data)
        np.add.at(grad, idx.reshape(-1), g.reshape(-1, table.shape[-1]))
        return (grad,)

    return _result(table.data[idx], (table,), vjp, "gather_rows")


# Normalizers


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Max-subtracted softmax along ``axis``.

    ``-inf`` entries (padding) get exactly zero weight. NaN input, or a row
    whose entries are all ``-inf``, raises :class:`NumericError`.
    """
    if np.isnan(x.data).any():
        raise NumericError("softmax received NaN")
    peak = np.max(x.data, axis=axis, keepdims=True)
    if np.isneginf(peak).any():
        raise NumericError("softmax over a row with no finite entries")
    shifted = np.exp(x.data - peak)
    out_data = shifted / np.sum(shifted, axis=axis, keepdims=True)

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        inner = np.sum(g * out_data, axis=axis, keepdims=True)
        return (out_data * (g - inner),)

    return _result(out_data, (x,), vjp, "softmax")


def l2_normalize(x: Tensor, axis: int = -1, eps: float = NORM_EPS) -> Tensor:
    """Scale vectors along ``axis`` to unit L2 norm.

    Raises
    ------
    DegenerateVectorError
        If any vector's norm is at most ``eps``

    """
    norm = np.sqrt(np.sum(x.data * x.data, axis=axis, keepdims=True))
    if np.any(norm <= eps):
        raise DegenerateVectorError(f"cannot normalize a vector with norm <= {eps}")
    out_data = x.data / norm

    def vjp(g: FloatArray) -> tuple[FloatArray]:
        radial = np.sum(g * out_data, axis=axis, keepdims=True)
        return ((g - out_data * radial) / norm,)

    return _result(out_data, (x,), vjp, "l2_normalize")


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Inner product over the last axis."""
    return sum(mul(a, b), axis=-1)
