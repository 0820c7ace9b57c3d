"""Array-valued tensors with reverse-mode differentiation."""

from __future__ import annotations

import numpy as np


class InvalidStateError(RuntimeError):
    """Raised when an object is used in a state that does not support the call."""


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A float64 array node in a computation graph.

    ``backward_fn`` receives the upstream gradient and returns one gradient
    per parent (``None`` for parents that need none).
    """

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, parents=(), backward_fn=None, op: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.grad: np.ndarray | None = None
        self._parents = tuple(parents)
        self._backward_fn = backward_fn
        self._op = op

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'})"

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise InvalidStateError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()

        def visit(node):
            stack = [(node, False)]
            while stack:
                n, done = stack.pop()
                if done:
                    order.append(n)
                    continue
                if id(n) in seen:
                    continue
                seen.add(id(n))
                stack.append((n, True))
                for p in n._parents:
                    if p.requires_grad and id(p) not in seen:
                        stack.append((p, False))

        visit(self)
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # -- arithmetic used by mixup -------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        a_shape, b_shape = self.shape, other.shape
        return Tensor(self.data + other.data, parents=(self, other), op="add",
                      backward_fn=lambda g: (_unbroadcast(g, a_shape), _unbroadcast(g, b_shape)))

    __radd__ = __add__

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        a, b = self.data, other.data
        return Tensor(a * b, parents=(self, other), op="mul",
                      backward_fn=lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, Tensor) else Tensor(-np.asarray(other)))

    def __getitem__(self, index):
        shape = self.shape

        def backward(g):
            full = np.zeros(shape)
            np.add.at(full, index, g)
            return (full,)

        return Tensor(self.data[index], parents=(self,), backward_fn=backward, op="getitem")

    def transpose(self, *axes):
        inverse = np.argsort(axes)
        return Tensor(self.data.transpose(axes), parents=(self,), op="transpose",
                      backward_fn=lambda g: (g.transpose(inverse),))

    def sum(self):
        shape = self.shape
        return Tensor(self.data.sum(), parents=(self,), op="sum",
                      backward_fn=lambda g: (np.broadcast_to(g, shape).copy(),))

    def mean(self):
        n = self.size
        shape = self.shape
        return Tensor(self.data.mean(), parents=(self,), op="mean",
                      backward_fn=lambda g: (np.broadcast_to(g / n, shape).copy(),))


class Parameter(Tensor):
    """A trainable leaf tensor."""

    def __init__(self, data, name: str = ""):
        super().__init__(np.array(data, dtype=np.float64), requires_grad=True)
        self.name = name
