"""Reverse-mode autodiff over numpy arrays.

Deliberately small: a handful of generic operations plus the fused recurrent
ops in `urlseg.nn.recurrent`. The graph is a tape of Function nodes hanging
off output tensors; calling backward() on a scalar walks it once and frees it.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


class Tensor:
    """A numpy array plus an optional gradient and graph context."""

    __slots__ = ("data", "grad", "requires_grad", "_ctx")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._ctx: Function | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def grad_or_zeros(self) -> np.ndarray:
        """Gradient of the last backward pass; zeros if the tensor was unused."""
        if self.grad is None:
            return np.zeros_like(self.data)
        return self.grad

    def assert_finite(self, what: str = "tensor") -> None:
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError(f"non-finite values in {what}")

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into .grad for every tensor on the tape."""
        if self._ctx is None:
            raise RuntimeError("backward() called before any recorded forward computation")
        if self.size != 1:
            raise ValueError(f"backward() requires a scalar, got shape {self.shape}")

        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.parents:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            fn = node._ctx
            if fn is None or node.grad is None:
                continue
            for parent, grad in zip(fn.parents, fn.backward(node.grad)):
                if grad is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = grad
                else:
                    parent.grad = parent.grad + grad
            node._ctx = None  # tape is single-use

    def __repr__(self) -> str:
        grad = "with grad" if self.grad is not None else "no grad"
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}, {grad})"

    # operator sugar for the generic ops below
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self):
        return tensor_sum(self)


class Function:
    """One recorded operation: holds parent tensors and saved arrays."""

    def __init__(self, *parents: Tensor):
        self.parents = parents
        self.saved: tuple = ()

    def save(self, *arrays) -> None:
        self.saved = arrays

    def backward(self, dout: np.ndarray) -> tuple:
        raise NotImplementedError


def from_op(data: np.ndarray, fn: Function) -> Tensor:
    """Wrap an op result, attaching the graph node only if a parent needs it."""
    out = Tensor(data)
    if any(p.requires_grad for p in fn.parents):
        out.requires_grad = True
        out._ctx = fn
    return out


def _check_same_dtype(*tensors: Tensor) -> None:
    dtypes = {t.dtype for t in tensors}
    if len(dtypes) > 1:
        raise ValueError(f"mixed dtypes in op: {sorted(d.name for d in dtypes)}")


class _Add(Function):
    def backward(self, dout):
        a, b = self.parents
        return _unbroadcast(dout, a.shape), _unbroadcast(dout, b.shape)


class _Mul(Function):
    def backward(self, dout):
        a, b = self.parents
        return _unbroadcast(dout * b.data, a.shape), _unbroadcast(dout * a.data, b.shape)


class _MatMul(Function):
    def backward(self, dout):
        a, b = self.parents
        return dout @ b.data.T, a.data.T @ dout


class _Sigmoid(Function):
    def backward(self, dout):
        (y,) = self.saved
        return (dout * y * (1.0 - y),)


class _Tanh(Function):
    def backward(self, dout):
        (y,) = self.saved
        return (dout * (1.0 - y * y),)


class _Sum(Function):
    def backward(self, dout):
        (shape,) = self.saved
        return (np.broadcast_to(dout, shape).copy(),)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a gradient back to the shape of a broadcast operand."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b)
    fn = _Add(a, b)
    return from_op(a.data + b.data, fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b)
    fn = _Mul(a, b)
    return from_op(a.data * b.data, fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shapes {a.shape} x {b.shape} do not align")
    fn = _MatMul(a, b)
    return from_op(a.data @ b.data, fn)


def sigmoid(a: Tensor) -> Tensor:
    fn = _Sigmoid(a)
    y = expit(a.data)
    fn.save(y)
    return from_op(y, fn)


def tanh(a: Tensor) -> Tensor:
    fn = _Tanh(a)
    y = np.tanh(a.data)
    fn.save(y)
    return from_op(y, fn)


def tensor_sum(a: Tensor) -> Tensor:
    fn = _Sum(a)
    fn.save(a.shape)
    return from_op(np.asarray(a.data.sum()), fn)
