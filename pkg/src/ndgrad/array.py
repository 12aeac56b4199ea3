"""
Dense 2-D arrays recorded on a reverse-mode tape.

Every value is an ``Array2`` wrapping a read-only numpy matrix. Operations in
``src.ndgrad.ops`` record themselves on the tape that is active in the current
thread, and ``grad`` replays the tape backwards to produce gradients for the
leaves (``Parameter`` objects).
"""
import contextlib
import threading
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, ShapeError

_PRECISIONS = {"float64": np.float64, "float32": np.float32}
_state = {"dtype": np.float64}
_local = threading.local()


def set_precision(name: str):
    """Switch the dtype used for every newly created array"""
    if name not in _PRECISIONS:
        raise ConfigError(f"Unknown precision '{name}', expected one of {sorted(_PRECISIONS)}")
    _state["dtype"] = _PRECISIONS[name]


def get_dtype():
    return _state["dtype"]


@contextlib.contextmanager
def precision(name: str) -> Iterator[None]:
    previous = _state["dtype"]
    set_precision(name)
    try:
        yield
    finally:
        _state["dtype"] = previous


def _as_matrix(value) -> np.ndarray:
    arr = np.array(value, dtype=get_dtype(), copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"Array2 needs at most 2 dimensions, got shape {arr.shape}")
    return arr


class Array2:
    """Immutable row-major matrix; the numeric substrate of every decoder symbol"""

    __array_priority__ = 100

    def __init__(self, value, requires_grad: bool = False, name: Optional[str] = None):
        arr = _as_matrix(value)
        arr.flags.writeable = False
        self._value = arr
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def wrap(cls, arr: np.ndarray) -> "Array2":
        """Wrap an already computed result without copying"""
        out = cls.__new__(cls)
        if arr.ndim != 2:
            raise ShapeError(f"Array2 needs 2 dimensions, got shape {arr.shape}")
        arr.flags.writeable = False
        out._value = arr
        out.requires_grad = False
        out.name = None
        return out

    @property
    def value(self) -> np.ndarray:
        return self._value

    @property
    def shape(self) -> Tuple[int, int]:
        return self._value.shape

    @property
    def rows(self) -> int:
        return self._value.shape[0]

    @property
    def cols(self) -> int:
        return self._value.shape[1]

    def numpy(self) -> np.ndarray:
        return self._value

    def item(self) -> float:
        if self._value.size != 1:
            raise ShapeError(f"item() needs a 1x1 array, got {self.shape}")
        return float(self._value[0, 0])

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Array2(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the graph logic lives in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    @property
    def T(self):
        from . import ops
        return ops.transpose(self)


class Parameter(Array2):
    """Optimizable leaf; its value may only be replaced between tape recordings"""

    def __init__(self, value, name: Optional[str] = None):
        super().__init__(value, requires_grad=True, name=name)

    def assign(self, value):
        arr = _as_matrix(value)
        if arr.shape != self._value.shape:
            raise ShapeError(f"Cannot assign {arr.shape} to parameter {self.name!r} of shape {self.shape}")
        arr.flags.writeable = False
        self._value = arr


Backward = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Node:
    __slots__ = ("out", "parents", "backward", "op")

    def __init__(self, out: Array2, parents: Tuple[Array2, ...], backward: Backward, op: str):
        self.out = out
        self.parents = parents
        self.backward = backward
        self.op = op


class Tape:
    """Records primitive operations in execution (topological) order"""

    def __init__(self):
        self.nodes: List[Node] = []

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _stack().pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, out: Array2, parents: Tuple[Array2, ...], backward: Backward, op: str):
        self.nodes.append(Node(out, parents, backward, op))

    def gradient(self, output: Array2, leaves: Sequence[Array2]) -> List[np.ndarray]:
        grads = self._backprop(output)
        return [grads.get(id(leaf), np.zeros_like(leaf.value)) for leaf in leaves]

    def _backprop(self, output: Array2) -> Dict[int, np.ndarray]:
        if output.shape != (1, 1):
            raise ShapeError(f"Gradients need a scalar output, got shape {output.shape}")
        grads: Dict[int, np.ndarray] = {id(output): np.ones((1, 1), dtype=output.value.dtype)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node.out), None)
            if g is None:
                continue
            for parent, pg in zip(node.parents, node.backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
        return grads

    def leaves(self) -> List[Parameter]:
        seen = {}
        for node in self.nodes:
            for parent in node.parents:
                if isinstance(parent, Parameter):
                    seen.setdefault(id(parent), parent)
        return list(seen.values())


def _stack() -> list:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def current_tape() -> Optional[Tape]:
    stack = _stack()
    return stack[-1] if stack else None


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording, e.g. for matching or inference"""
    stack = _stack()
    stack.append(None)
    try:
        yield
    finally:
        stack.pop()


def grad(tape: Tape, output: Array2, leaves: Optional[Sequence[Parameter]] = None) -> Dict[Parameter, np.ndarray]:
    """Gradients of a scalar output for every leaf (zero for leaves off every path)"""
    if leaves is None:
        leaves = tape.leaves()
    values = tape.gradient(output, leaves)
    return {leaf: g for leaf, g in zip(leaves, values)}
