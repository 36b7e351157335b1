"""Reverse-mode automatic differentiation on dense float64 arrays.

The engine is define-by-run: every operation allocates a fresh ``Tensor``
node holding its forward value, references to its parents, and a closure
that routes the incoming adjoint to those parents.  Calling
``Tensor.backward()`` on a scalar walks the recorded graph once, in
reverse topological order, accumulating gradients.

All values are 64-bit floats.  Every operation validates shapes up front
and checks its output for NaN/Inf, so a non-finite value surfaces as an
error naming the offending node instead of propagating silently.
"""

from __future__ import annotations

import itertools

import numpy as np

_node_ids = itertools.count()


class AutogradError(Exception):
    """Base class for graph construction and traversal failures."""


class ShapeError(AutogradError):
    """Operand shapes are inconsistent with the requested operation."""


class NonFiniteError(AutogradError):
    """A forward value contains NaN or Inf."""


def _as_array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _check_finite(data: np.ndarray, op: str, node_id: int) -> None:
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.isfinite(data.ravel()))[0])
        raise NonFiniteError(
            f"non-finite value in output of '{op}' (node {node_id}) at flat index {bad}"
        )


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum an adjoint back down to the shape of a broadcast operand."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A float64 array plus the bookkeeping needed for backpropagation.

    ``requires_grad`` marks trainable leaves; interior nodes inherit it
    from their parents so backward() can skip dead subgraphs.  ``grad``
    is populated (same shape as ``data``) during a backward pass.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "node_id", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, op: str = "leaf", _parents=()):
        self.data = _as_array(data)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self.op = op
        self.node_id = next(_node_ids)
        self._parents = _parents
        self._backward = None
        _check_finite(self.data, op, self.node_id)

    # -- introspection ------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on non-scalar tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar -----------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    # -- backward pass ------------------------------------------------

    def backward(self) -> None:
        """Accumulate d(self)/d(node) into every reachable node's .grad.

        Raises if this tensor is not scalar, or if no node in its
        history requires a gradient (a detached loss is always a bug).
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() requires a scalar loss, got shape {self.shape}")

        topo: list[Tensor] = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited and parent.requires_grad:
                    stack.append((parent, False))

        if not any(n.requires_grad and n._backward is None for n in topo):
            raise AutogradError(
                "backward() on a detached loss: no path to any requires-grad leaf"
            )

        for node in topo:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)


def astensor(value) -> Tensor:
    """Lift arrays and scalars into constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, op="const")


def parameter(data, name: str = "param") -> Tensor:
    """A trainable leaf tensor."""
    return Tensor(data, requires_grad=True, op=name)


# ---------------------------------------------------------------------
# elementwise arithmetic (with numpy broadcasting)
# ---------------------------------------------------------------------


def _broadcast_check(a: Tensor, b: Tensor, op: str):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from None


def add(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    _broadcast_check(a, b, "add")
    out = Tensor(a.data + b.data, op="add", _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(g, b.shape)

    out._backward = backward
    return out


def sub(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    _broadcast_check(a, b, "sub")
    out = Tensor(a.data - b.data, op="sub", _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g, a.shape)
        if b.requires_grad:
            b.grad -= _unbroadcast(g, b.shape)

    out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    _broadcast_check(a, b, "mul")
    out = Tensor(a.data * b.data, op="mul", _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g * b.data, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(g * a.data, b.shape)

    out._backward = backward
    return out


def div(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    _broadcast_check(a, b, "div")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = Tensor(a.data / b.data, op="div", _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g / b.data, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(-g * a.data / (b.data * b.data), b.shape)

    out._backward = backward
    return out


# ---------------------------------------------------------------------
# linear algebra and shape ops
# ---------------------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul: expected 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, op="matmul", _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.grad += g @ b.data.T
        if b.requires_grad:
            b.grad += a.data.T @ g

    out._backward = backward
    return out


def transpose(a) -> Tensor:
    a = astensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose: expected 2-D operand, got {a.shape}")
    out = Tensor(a.data.T.copy(), op="transpose", _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.grad += g.T

    out._backward = backward
    return out


def concat_rows(a, b) -> Tensor:
    """Stack two 2-D tensors along axis 0."""
    a, b = astensor(a), astensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(f"concat_rows: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(np.concatenate([a.data, b.data], axis=0), op="concat_rows", _parents=(a, b))
    split = a.shape[0]

    def backward(g):
        if a.requires_grad:
            a.grad += g[:split]
        if b.requires_grad:
            b.grad += g[split:]

    out._backward = backward
    return out


def rows(a, start: int, stop: int) -> Tensor:
    """Slice rows [start, stop) of a 2-D tensor."""
    a = astensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"rows: expected 2-D operand, got {a.shape}")
    if not (0 <= start <= stop <= a.shape[0]):
        raise ShapeError(f"rows: slice [{start}, {stop}) out of bounds for {a.shape}")
    out = Tensor(a.data[start:stop].copy(), op="rows", _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.grad[start:stop] += g

    out._backward = backward
    return out


# ---------------------------------------------------------------------
# nonlinearities and pointwise functions
# ---------------------------------------------------------------------


def relu(a) -> Tensor:
    a = astensor(a)
    out = Tensor(np.maximum(a.data, 0.0), op="relu", _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.grad += g * (a.data > 0.0)

    out._backward = backward
    return out


def square(a) -> Tensor:
    a = astensor(a)
    out = Tensor(a.data * a.data, op="square", _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.grad += g * 2.0 * a.data

    out._backward = backward
    return out


def sqrt(a) -> Tensor:
    a = astensor(a)
    with np.errstate(invalid="ignore"):
        out = Tensor(np.sqrt(a.data), op="sqrt", _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.grad += g * 0.5 / out.data

    out._backward = backward
    return out


def exp(a) -> Tensor:
    a = astensor(a)
    with np.errstate(over="ignore"):
        out = Tensor(np.exp(a.data), op="exp", _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.grad += g * out.data

    out._backward = backward
    return out


def log(a) -> Tensor:
    a = astensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = Tensor(np.log(a.data), op="log", _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.grad += g / a.data

    out._backward = backward
    return out


# ---------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = astensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims), op="sum", _parents=(a,))

    def backward(g):
        if not a.requires_grad:
            return
        if axis is None:
            a.grad += g.reshape(tuple(1 for _ in a.shape)) * np.ones_like(a.data)
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a.grad += np.broadcast_to(gg, a.shape)

    out._backward = backward
    return out


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = astensor(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# ---------------------------------------------------------------------
# classification head
# ---------------------------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    """Plain (non-differentiable) row softmax for predictions."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels) -> Tensor:
    """Mean softmax cross-entropy over a batch, fused for stability.

    ``labels`` is an integer array of class indices, treated as constant.
    """
    logits = astensor(logits)
    labels = np.asarray(labels)
    if logits.data.ndim != 2:
        raise ShapeError(f"softmax_cross_entropy: logits must be 2-D, got {logits.shape}")
    m, k = logits.shape
    if labels.shape != (m,):
        raise ShapeError(f"softmax_cross_entropy: labels shape {labels.shape} != ({m},)")
    if labels.min() < 0 or labels.max() >= k:
        raise ShapeError(f"softmax_cross_entropy: label out of range [0, {k})")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logprobs = shifted - logsumexp
    losses = -logprobs[np.arange(m), labels]
    out = Tensor(losses.mean(), op="softmax_cross_entropy", _parents=(logits,))

    def backward(g):
        if logits.requires_grad:
            grad = np.exp(logprobs)
            grad[np.arange(m), labels] -= 1.0
            logits.grad += grad * (float(g) / m)

    out._backward = backward
    return out
