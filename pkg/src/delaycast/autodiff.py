"""Dense float64 tensors with reverse-mode automatic differentiation.

The engine is deliberately small: a :class:`Tensor` wraps a numpy array and
remembers the op that produced it, a :class:`Tape` is the reverse-topological
record of everything reachable from a scalar loss, and :func:`gradcheck`
compares analytic gradients against central finite differences. All arrays
are float64 and frozen after construction, so values behave immutably and
two runs over the same graph produce bit-identical gradients.

Registered ops (all differentiable at their smooth points): add, sub, neg,
mul, matmul, transpose, concat, slice, gather_rows, masked_fill, relu,
leaky_relu, tanh, sigmoid, exp, log, softmax, sum, mean, dilated_conv1d.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for an op."""

    def __init__(self, op: str, *shapes: tuple[int, ...]):
        super().__init__(f"{op}: incompatible shapes {' vs '.join(str(s) for s in shapes)}")
        self.op = op
        self.shapes = shapes


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


class Tensor:
    """Immutable-by-convention float64 array node in the autodiff graph."""

    __slots__ = ("data", "requires_grad", "grad", "op", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        op: str = "leaf",
        _parents: tuple["Tensor", ...] = (),
        _backward: Callable[[np.ndarray], None] | None = None,
    ):
        arr = np.array(data, dtype=np.float64) if op == "leaf" else np.asarray(data, dtype=np.float64)
        self.data = _freeze(arr)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.op = op
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", self.shape)
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # operator sugar; constants are wrapped on the fly
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __getitem__(self, key):
        return slice_(self, key)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` along axes numpy broadcast over."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _node(
    data: np.ndarray,
    op: str,
    parents: Sequence[Tensor],
    backward_fn: Callable[[np.ndarray], None] | None,
) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(
        data,
        requires_grad=req,
        op=op,
        _parents=tuple(parents),
        _backward=backward_fn if req else None,
    )


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros(t.shape, dtype=np.float64)
    t.grad += g


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError("add", a.shape, b.shape) from None

    def bwd(g: np.ndarray) -> None:
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return _node(out, "add", (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError("sub", a.shape, b.shape) from None

    def bwd(g: np.ndarray) -> None:
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(-g, b.shape))

    return _node(out, "sub", (a, b), bwd)


def neg(a: Tensor) -> Tensor:
    def bwd(g: np.ndarray) -> None:
        _accum(a, -g)

    return _node(-a.data, "neg", (a,), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError("mul", a.shape, b.shape) from None

    def bwd(g: np.ndarray) -> None:
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    return _node(out, "mul", (a, b), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError("matmul", a.shape, b.shape)
    try:
        out = a.data @ b.data
    except ValueError:
        raise ShapeError("matmul", a.shape, b.shape) from None

    def bwd(g: np.ndarray) -> None:
        _accum(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        _accum(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return _node(out, "matmul", (a, b), bwd)


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------

def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    perm = tuple(axes) if axes is not None else tuple(reversed(range(a.data.ndim)))
    inv = tuple(np.argsort(perm))

    def bwd(g: np.ndarray) -> None:
        _accum(a, np.transpose(g, inv))

    return _node(np.transpose(a.data, perm), "transpose", (a,), bwd)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, shape) from None

    def bwd(g: np.ndarray) -> None:
        _accum(a, g.reshape(a.shape))

    return _node(out, "reshape", (a,), bwd)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("concat", *(t.shape for t in tensors)) from None
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g: np.ndarray) -> None:
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(t, g[tuple(idx)])

    return _node(out, "concat", tensors, bwd)


def slice_(a: Tensor, key) -> Tensor:
    out = a.data[key]

    def bwd(g: np.ndarray) -> None:
        full = np.zeros(a.shape, dtype=np.float64)
        full[key] += g
        _accum(a, full)

    return _node(out, "slice", (a,), bwd)


def gather_rows(a: Tensor, index) -> Tensor:
    idx = np.asarray(index, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeError("gather_rows", idx.shape)
    out = a.data[idx]

    def bwd(g: np.ndarray) -> None:
        full = np.zeros(a.shape, dtype=np.float64)
        np.add.at(full, idx, g)
        _accum(a, full)

    return _node(out, "gather_rows", (a,), bwd)


def masked_fill(a: Tensor, mask, value: float) -> Tensor:
    m = np.asarray(mask, dtype=bool)
    out = np.where(m, float(value), a.data)
    if out.shape != a.shape:
        raise ShapeError("masked_fill", a.shape, m.shape)

    def bwd(g: np.ndarray) -> None:
        _accum(a, np.where(m, 0.0, g))

    return _node(out, "masked_fill", (a,), bwd)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

def relu(a: Tensor) -> Tensor:
    def bwd(g: np.ndarray) -> None:
        _accum(a, g * (a.data > 0.0))

    return _node(np.maximum(a.data, 0.0), "relu", (a,), bwd)


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    def bwd(g: np.ndarray) -> None:
        _accum(a, g * np.where(a.data > 0.0, 1.0, slope))

    return _node(np.where(a.data > 0.0, a.data, slope * a.data), "leaky_relu", (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def bwd(g: np.ndarray) -> None:
        _accum(a, g * (1.0 - out * out))

    return _node(out, "tanh", (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))  # numerically stable logistic

    def bwd(g: np.ndarray) -> None:
        _accum(a, g * out * (1.0 - out))

    return _node(out, "sigmoid", (a,), bwd)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def bwd(g: np.ndarray) -> None:
        _accum(a, g * out)

    return _node(out, "exp", (a,), bwd)


def log(a: Tensor) -> Tensor:
    def bwd(g: np.ndarray) -> None:
        _accum(a, g / a.data)

    return _node(np.log(a.data), "log", (a,), bwd)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g: np.ndarray) -> None:
        inner = (g * out).sum(axis=axis, keepdims=True)
        _accum(a, (g - inner) * out)

    return _node(out, "softmax", (a,), bwd)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def sum_(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g: np.ndarray) -> None:
        gg = g
        if not keepdims and axis is not None:
            axes = (axis,) if isinstance(axis, int) else axis
            for ax in sorted(ax % a.data.ndim for ax in axes):
                gg = np.expand_dims(gg, ax)
        _accum(a, np.broadcast_to(gg, a.shape).copy())

    return _node(out, "sum", (a,), bwd)


def mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    out = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else a.data.size / out.size

    def bwd(g: np.ndarray) -> None:
        gg = g / count
        if not keepdims and axis is not None:
            axes = (axis,) if isinstance(axis, int) else axis
            for ax in sorted(ax % a.data.ndim for ax in axes):
                gg = np.expand_dims(gg, ax)
        _accum(a, np.broadcast_to(gg, a.shape).copy())

    return _node(out, "mean", (a,), bwd)


# ---------------------------------------------------------------------------
# temporal
# ---------------------------------------------------------------------------

def _shift_time(x: np.ndarray, steps: int) -> np.ndarray:
    """Shift along axis 0 towards later steps, zero-padding the start."""
    if steps == 0:
        return x
    T = x.shape[0]
    if steps >= T:
        return np.zeros_like(x)
    pad = np.zeros((steps,) + x.shape[1:], dtype=np.float64)
    return np.concatenate([pad, x[: T - steps]], axis=0)


def dilated_conv1d(x: Tensor, kernel: Tensor, dilation: int = 1) -> Tensor:
    """Causal depthwise convolution over axis 0.

    ``kernel`` has shape ``(k,)`` (taps shared across channels) or
    ``(k, C)`` with ``C = x.shape[-1]``. Tap ``j`` reads ``j * dilation``
    steps into the past, so output at step t never sees steps > t.
    """
    if dilation < 1:
        raise ShapeError("dilated_conv1d", (dilation,))
    k = kernel.data
    if k.ndim not in (1, 2) or (k.ndim == 2 and k.shape[1] != x.shape[-1]):
        raise ShapeError("dilated_conv1d", x.shape, kernel.shape)
    taps = k.shape[0]
    out = np.zeros(x.shape, dtype=np.float64)
    for j in range(taps):
        out += k[j] * _shift_time(x.data, j * dilation)  # k[j] scalar or (C,)

    def bwd(g: np.ndarray) -> None:
        if x.requires_grad:
            gx = np.zeros(x.shape, dtype=np.float64)
            T = x.shape[0]
            for j in range(taps):
                s = j * dilation
                if s >= T:
                    continue
                gx[: T - s] += k[j] * g[s:]
            _accum(x, gx)
        if kernel.requires_grad:
            gk = np.zeros(k.shape, dtype=np.float64)
            for j in range(taps):
                prod = _shift_time(x.data, j * dilation) * g
                if k.ndim == 1:
                    gk[j] = prod.sum()
                else:
                    gk[j] = prod.reshape(-1, x.shape[-1]).sum(axis=0)
            _accum(kernel, gk)

    return _node(out, "dilated_conv1d", (x, kernel), bwd)


# ---------------------------------------------------------------------------
# tape and gradients
# ---------------------------------------------------------------------------

class Tape:
    """Reverse-topological record of the graph below a root tensor.

    Built once per backward pass; each node's local rule fires exactly once,
    in reverse topological order.
    """

    def __init__(self, root: Tensor):
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        self.nodes = order  # topological: parents before children
        self.root = root

    def backward(self) -> None:
        if self.root.data.size != 1:
            raise ShapeError("backward", self.root.shape)
        self.root.grad = np.ones(self.root.shape, dtype=np.float64)
        for node in reversed(self.nodes):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every requires_grad tensor below ``loss``."""
    Tape(loss).backward()


def zero_grads(tensors) -> None:
    values = tensors.values() if isinstance(tensors, dict) else tensors
    for t in values:
        t.zero_grad()


@dataclass(slots=True)
class GradcheckReport:
    max_rel_error: float
    tol: float
    per_input: dict[str, float]

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def gradcheck(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-4,
    tol: float = 1e-4,
) -> GradcheckReport:
    """Compare analytic gradients of scalar ``f(*inputs)`` with central differences.

    Relative error per element is |a - n| / max(1, |a|, |n|). Inputs must sit
    away from non-differentiable points (relu/leaky_relu kinks).
    """
    out = f(*inputs)
    if out.data.size != 1:
        raise ShapeError("gradcheck", out.shape)
    zero_grads(inputs)
    backward(out)
    analytic = [
        np.array(t.grad) if t.grad is not None else np.zeros(t.shape) for t in inputs
    ]

    per_input: dict[str, float] = {}
    worst = 0.0
    for i, t in enumerate(inputs):
        if not t.requires_grad:
            continue
        base = np.array(t.data)
        numeric = np.zeros_like(base)
        flat = base.reshape(-1)
        num_flat = numeric.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            hi = f(*[Tensor(base) if k == i else x for k, x in enumerate(inputs)]).item()
            flat[j] = orig - h
            lo = f(*[Tensor(base) if k == i else x for k, x in enumerate(inputs)]).item()
            flat[j] = orig
            num_flat[j] = (hi - lo) / (2.0 * h)
        denom = np.maximum(1.0, np.maximum(np.abs(analytic[i]), np.abs(numeric)))
        err = float(np.max(np.abs(analytic[i] - numeric) / denom)) if base.size else 0.0
        per_input[f"input{i}"] = err
        worst = max(worst, err)
    return GradcheckReport(max_rel_error=worst, tol=tol, per_input=per_input)
