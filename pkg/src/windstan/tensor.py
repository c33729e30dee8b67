"""Dense 2-D float64 tensors with reverse-mode gradients.

Every value flowing through the forecaster is a strictly two-dimensional
matrix of 64-bit floats.  Operations build a computation graph as they run;
calling :meth:`Tensor.backward` on a 1x1 result walks that graph in reverse
and accumulates gradients into every participating tensor.  Gradient
accumulation is additive and deterministic: repeating a backward pass doubles
the gradients exactly, and zeroing then re-running reproduces them
bit-identically.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError, ShapeError


def _ensure_finite(arr: np.ndarray, op: str) -> None:
    # Sum-based probe: NaN anywhere makes the sum NaN, an infinity makes it
    # non-finite, and +inf together with -inf yields NaN, so nothing slips by.
    if not math.isfinite(float(arr.sum())) and not np.isfinite(arr).all():
        raise NumericError(f"{op} produced a non-finite value")


class Tensor:
    """A rows x cols matrix of float64 plus an optional gradient buffer.

    ``data`` is treated as immutable once the tensor participates in a graph;
    ``grad`` is lazily allocated and accumulates across backward passes until
    cleared.  One-dimensional inputs are accepted as single-row matrices.
    """

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, _parents=(), _backward=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are strictly 2-D, got {arr.ndim}-D data")
        if arr.shape[0] < 1:
            raise ShapeError(f"tensor needs at least one row, got shape {arr.shape}")
        self.data = arr
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad.fill(0.0)

    def backward(self) -> None:
        """Accumulate d(self)/d(node) into every node reachable from self.

        Only defined for 1x1 tensors (scalar objectives).
        """
        if self.data.shape != (1, 1):
            raise ShapeError(f"backward() needs a 1x1 tensor, got {self.data.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        # Per-pass gradients live in a scratch map so reruns stay additive.
        local: dict[int, np.ndarray] = {id(self): np.ones((1, 1))}
        for node in reversed(order):
            g = local.get(id(node))
            if g is None:
                continue
            if node._backward is not None:
                for parent, pg in zip(node._parents, node._backward(g)):
                    if pg is None:
                        continue
                    held = local.get(id(parent))
                    local[id(parent)] = pg if held is None else held + pg
            if node.grad is None:
                node.grad = g.copy()
            else:
                node.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"


def tensor(data) -> Tensor:
    """Wrap raw data in a graph-free Tensor, rejecting non-finite input."""
    t = Tensor(data)
    _ensure_finite(t.data, "tensor construction")
    return t


def zeros(rows: int, cols: int) -> Tensor:
    return Tensor(np.zeros((rows, cols)))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Standard matrix product a @ b."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul mismatch: {a.shape} x {b.shape}")
    out_data = a.data @ b.data
    _ensure_finite(out_data, "matmul")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor(out_data, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"add mismatch: {a.shape} vs {b.shape}")

    def backward(g):
        return g, g

    return Tensor(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product of two same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"mul mismatch: {a.shape} vs {b.shape}")

    def backward(g):
        return g * b.data, g * a.data

    return Tensor(a.data * b.data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply every element by the constant c."""
    c = float(c)

    def backward(g):
        return (g * c,)

    return Tensor(a.data * c, (a,), backward)


def add_scalar(a: Tensor, c: float) -> Tensor:
    """Add the constant c to every element."""

    def backward(g):
        return (g,)

    return Tensor(a.data + float(c), (a,), backward)


def transpose(a: Tensor) -> Tensor:
    def backward(g):
        return (g.T,)

    return Tensor(a.data.T.copy(), (a,), backward)


def hstack(parts: list[Tensor]) -> Tensor:
    """Concatenate tensors left-to-right along columns."""
    rows = parts[0].rows
    for p in parts[1:]:
        if p.rows != rows:
            raise ShapeError(f"hstack row mismatch: {parts[0].shape} vs {p.shape}")
    widths = [p.cols for p in parts]
    offsets = np.cumsum([0] + widths)

    def backward(g):
        return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(parts)))

    return Tensor(np.concatenate([p.data for p in parts], axis=1), tuple(parts), backward)


def vstack(parts: list[Tensor]) -> Tensor:
    """Concatenate tensors top-to-bottom along rows."""
    cols = parts[0].cols
    for p in parts[1:]:
        if p.cols != cols:
            raise ShapeError(f"vstack column mismatch: {parts[0].shape} vs {p.shape}")
    heights = [p.rows for p in parts]
    offsets = np.cumsum([0] + heights)

    def backward(g):
        return tuple(g[offsets[i]:offsets[i + 1], :] for i in range(len(parts)))

    return Tensor(np.concatenate([p.data for p in parts], axis=0), tuple(parts), backward)


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    """Columns of a followed by columns of b, rows aligned."""
    if a.rows != b.rows:
        raise ShapeError(f"concat_cols row mismatch: {a.shape} vs {b.shape}")
    return hstack([a, b])


def row(a: Tensor, i: int) -> Tensor:
    """Extract row i as a 1 x cols tensor."""
    if not 0 <= i < a.rows:
        raise IndexError(f"row {i} out of range for shape {a.shape}")

    def backward(g):
        full = np.zeros_like(a.data)
        full[i, :] = g[0, :]
        return (full,)

    return Tensor(a.data[i:i + 1, :].copy(), (a,), backward)


def softmax_rows(a: Tensor) -> Tensor:
    """Row-wise softmax with per-row max subtraction for overflow safety."""
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=1, keepdims=True)
    _ensure_finite(out_data, "softmax_rows")

    def backward(g):
        dot = (g * out_data).sum(axis=1, keepdims=True)
        return ((g - dot) * out_data,)

    return Tensor(out_data, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(g):
        return (g * (1.0 - out_data * out_data),)

    return Tensor(out_data, (a,), backward)


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def backward(g):
        return (g * (a.data > 0.0),)

    return Tensor(out_data, (a,), backward)


_ACTIVATIONS = {"tanh": tanh, "relu": relu}


def elementwise_activation(a: Tensor, kind: str) -> Tensor:
    """Apply a named activation ("tanh" or "relu") per element."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}, expected one of {sorted(_ACTIVATIONS)}")
    out = fn(a)
    _ensure_finite(out.data, kind)
    return out
