"""
Primitive operations with analytic backward rules.

Kink convention: the derivative of relu at 0, of clip01 at both bounds, and of
abs at 0 is 0. Gradient checks must sample away from those points.
"""
from typing import Sequence, Tuple, Union

import numpy as np

from ..errors import ShapeError
from .array import Array2, current_tape, get_dtype

Operand = Union[Array2, float, int, np.ndarray]


def as_array(x: Operand) -> Array2:
    if isinstance(x, Array2):
        return x
    return Array2(x)


def constant(value) -> Array2:
    return Array2(value)


def zeros(rows: int, cols: int) -> Array2:
    return Array2.wrap(np.zeros((rows, cols), dtype=get_dtype()))


def _emit(value: np.ndarray, parents: Tuple[Array2, ...], backward, op: str) -> Array2:
    out = Array2.wrap(np.ascontiguousarray(value, dtype=get_dtype()))
    tape = current_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.record(out, parents, backward, op)
    return out


def _broadcast_shape(a: Tuple[int, int], b: Tuple[int, int], op: str) -> Tuple[int, int]:
    shape = []
    for da, db in zip(a, b):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{op}: cannot broadcast {a} with {b}")
        shape.append(max(da, db))
    return tuple(shape)


def _unbroadcast(g: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    if g.shape == shape:
        return g
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a: Operand, b: Operand) -> Array2:
    a, b = as_array(a), as_array(b)
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape} (inner dimensions {a.cols} != {b.rows})")
    av, bv = a.value, b.value

    def backward(g):
        return g @ bv.T, av.T @ g

    return _emit(av @ bv, (a, b), backward, "matmul")


def add(a: Operand, b: Operand) -> Array2:
    a, b = as_array(a), as_array(b)
    _broadcast_shape(a.shape, b.shape, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit(a.value + b.value, (a, b), backward, "add")


def sub(a: Operand, b: Operand) -> Array2:
    a, b = as_array(a), as_array(b)
    _broadcast_shape(a.shape, b.shape, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit(a.value - b.value, (a, b), backward, "sub")


def mul(a: Operand, b: Operand) -> Array2:
    a, b = as_array(a), as_array(b)
    _broadcast_shape(a.shape, b.shape, "mul")
    av, bv = a.value, b.value

    def backward(g):
        return _unbroadcast(g * bv, a.shape), _unbroadcast(g * av, b.shape)

    return _emit(av * bv, (a, b), backward, "mul")


def scale(a: Operand, alpha: float) -> Array2:
    a = as_array(a)
    alpha = float(alpha)

    def backward(g):
        return (g * alpha,)

    return _emit(a.value * alpha, (a,), backward, "scale")


def relu(a: Operand) -> Array2:
    a = as_array(a)
    mask = a.value > 0

    def backward(g):
        return (g * mask,)

    return _emit(np.where(mask, a.value, 0.0), (a,), backward, "relu")


def clip01(a: Operand) -> Array2:
    a = as_array(a)
    mask = (a.value > 0) & (a.value < 1)

    def backward(g):
        return (g * mask,)

    return _emit(np.clip(a.value, 0.0, 1.0), (a,), backward, "clip01")


def min_reduce_row(a: Operand) -> Array2:
    """Per-row minimum as an n x 1 column; the gradient goes to the first argmin"""
    a = as_array(a)
    rows = np.arange(a.rows)
    idx = np.argmin(a.value, axis=1)

    def backward(g):
        out = np.zeros_like(a.value)
        out[rows, idx] = g[:, 0]
        return (out,)

    return _emit(a.value[rows, idx][:, None], (a,), backward, "min_reduce_row")


def total(a: Operand) -> Array2:
    a = as_array(a)

    def backward(g):
        return (np.full(a.shape, g[0, 0], dtype=g.dtype),)

    return _emit(np.array([[a.value.sum()]]), (a,), backward, "sum")


def mean(a: Operand) -> Array2:
    a = as_array(a)
    size = a.value.size

    def backward(g):
        return (np.full(a.shape, g[0, 0] / size, dtype=g.dtype),)

    return _emit(np.array([[a.value.mean()]]), (a,), backward, "mean")


def square(a: Operand) -> Array2:
    a = as_array(a)
    av = a.value

    def backward(g):
        return (2.0 * av * g,)

    return _emit(av * av, (a,), backward, "square")


def absolute(a: Operand) -> Array2:
    a = as_array(a)
    sign = np.sign(a.value)

    def backward(g):
        return (g * sign,)

    return _emit(np.abs(a.value), (a,), backward, "abs")


def exp(a: Operand) -> Array2:
    a = as_array(a)
    out = np.exp(a.value)

    def backward(g):
        return (g * out,)

    return _emit(out, (a,), backward, "exp")


def softmax_rows(a: Operand) -> Array2:
    a = as_array(a)
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _emit(s, (a,), backward, "softmax_rows")


def transpose(a: Operand) -> Array2:
    a = as_array(a)

    def backward(g):
        return (g.T,)

    return _emit(a.value.T, (a,), backward, "transpose")


def reshape(a: Operand, rows: int, cols: int) -> Array2:
    a = as_array(a)
    if rows * cols != a.value.size:
        raise ShapeError(f"reshape: cannot view {a.shape} as ({rows}, {cols})")
    shape = a.shape

    def backward(g):
        return (g.reshape(shape),)

    return _emit(a.value.reshape(rows, cols), (a,), backward, "reshape")


def slice_cols(a: Operand, start: int, stop: int) -> Array2:
    a = as_array(a)
    shape = a.shape

    def backward(g):
        out = np.zeros(shape, dtype=g.dtype)
        out[:, start:stop] = g
        return (out,)

    return _emit(a.value[:, start:stop], (a,), backward, "slice_cols")


def slice_rows(a: Operand, start: int, stop: int) -> Array2:
    a = as_array(a)
    shape = a.shape

    def backward(g):
        out = np.zeros(shape, dtype=g.dtype)
        out[start:stop] = g
        return (out,)

    return _emit(a.value[start:stop], (a,), backward, "slice_rows")


def concat_cols(parts: Sequence[Operand]) -> Array2:
    parts = [as_array(p) for p in parts]
    rows = {p.rows for p in parts}
    if len(rows) != 1:
        raise ShapeError(f"concat_cols: row counts differ {[p.shape for p in parts]}")
    bounds = np.cumsum([0] + [p.cols for p in parts])

    def backward(g):
        return [g[:, bounds[i]:bounds[i + 1]] for i in range(len(parts))]

    return _emit(np.concatenate([p.value for p in parts], axis=1), tuple(parts), backward, "concat_cols")


def concat_rows(parts: Sequence[Operand]) -> Array2:
    parts = [as_array(p) for p in parts]
    cols = {p.cols for p in parts}
    if len(cols) != 1:
        raise ShapeError(f"concat_rows: column counts differ {[p.shape for p in parts]}")
    bounds = np.cumsum([0] + [p.rows for p in parts])

    def backward(g):
        return [g[bounds[i]:bounds[i + 1]] for i in range(len(parts))]

    return _emit(np.concatenate([p.value for p in parts], axis=0), tuple(parts), backward, "concat_rows")


def patches(a: Operand, index: np.ndarray) -> Array2:
    """
    im2col gather: row p of the result concatenates rows ``index[p, k]`` of ``a``
    for every k; negative indices read zeros (padding).
    """
    a = as_array(a)
    index = np.asarray(index)
    if index.ndim != 2:
        raise ShapeError(f"patches: index must be 2-D, got {index.shape}")
    n, c = a.shape
    p, k = index.shape
    safe = np.where(index < 0, n, index)
    padded = np.vstack([a.value, np.zeros((1, c), dtype=a.value.dtype)])

    def backward(g):
        acc = np.zeros((n + 1, c), dtype=g.dtype)
        np.add.at(acc, safe.ravel(), g.reshape(p * k, c))
        return (acc[:n],)

    return _emit(padded[safe].reshape(p, k * c), (a,), backward, "patches")


_ELEMENTWISE = {
    "relu": relu,
    "clip01": clip01,
    "min-reduce-row": min_reduce_row,
    "sum": total,
    "square": square,
    "abs": absolute,
}


def elementwise(kind: str, a: Operand) -> Array2:
    try:
        fn = _ELEMENTWISE[kind]
    except KeyError:
        raise ValueError(f"Unknown elementwise kind '{kind}', expected one of {sorted(_ELEMENTWISE)}")
    return fn(a)
