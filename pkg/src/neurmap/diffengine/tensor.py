"""Reverse-mode automatic differentiation on dense numpy arrays.

The graph is implicit: every operation stores its parent tensors and a
backward closure on the result, and ``backward()`` replays the closures in
reverse topological order, visiting each node exactly once. Gradients from
fan-out accumulate additively. float32 is the working precision; float64 is
supported end to end for gradient checking.

Broadcasting is deliberately restricted to Python scalars: binary ops on two
tensors require identical shapes so every backward rule stays auditable.
"""

from __future__ import annotations

import numpy as np

DEFAULT_DTYPE = np.float32


class ShapeError(ValueError):
    """An operand shape violates the operation's contract."""


class Tensor:
    """Dense n-dimensional float array, optionally tracked by the autodiff tape."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """Same values (shared storage), gradient flow severed here."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __getitem__(self, key) -> "Tensor":
        return slice_(self, key)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def from_op(data: np.ndarray, parents, backward_fn) -> Tensor:
    """Create a graph node from an op result.

    ``backward_fn(grad)`` must accumulate into the parents via ``accumulate``.
    When no parent requires a gradient the node degenerates to a plain leaf
    and the closure is dropped, so frozen subgraphs cost nothing on backward.
    """
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def accumulate(t: Tensor, g: np.ndarray):
    """Add a gradient contribution to ``t``.

    Never updates in place: the incoming array may alias a child's gradient
    buffer, and fan-out must stay exact.
    """
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def backward(loss: Tensor):
    """Backpropagate from a scalar loss through the graph below it.

    Leaves with ``requires_grad`` end up holding dLoss/dLeaf in ``.grad``;
    detached branches contribute nothing. A loss with no tracked ancestors is
    a no-op (every gradient is zero).
    """
    if loss.data.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        return
    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: operand shapes {a.data.shape} and {b.data.shape} differ "
                         "(only scalar operands broadcast)")


def _as_tensor_or_scalar(x):
    if isinstance(x, Tensor):
        return x, None
    if np.isscalar(x):
        return None, float(x)
    raise TypeError(f"expected Tensor or scalar, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# elementwise operations


def add(a: Tensor, b) -> Tensor:
    bt, bs = _as_tensor_or_scalar(b)
    if bs is not None:
        def bwd(g, a=a):
            accumulate(a, g)
        return from_op(a.data + bs, (a,), bwd)
    _check_same_shape(a, bt, "add")

    def bwd(g, a=a, b=bt):
        accumulate(a, g)
        accumulate(b, g)
    return from_op(a.data + bt.data, (a, bt), bwd)


def sub(a: Tensor, b) -> Tensor:
    bt, bs = _as_tensor_or_scalar(b)
    if bs is not None:
        def bwd(g, a=a):
            accumulate(a, g)
        return from_op(a.data - bs, (a,), bwd)
    _check_same_shape(a, bt, "sub")

    def bwd(g, a=a, b=bt):
        accumulate(a, g)
        accumulate(b, -g)
    return from_op(a.data - bt.data, (a, bt), bwd)


def mul(a: Tensor, b) -> Tensor:
    bt, bs = _as_tensor_or_scalar(b)
    if bs is not None:
        return scale(a, bs)
    _check_same_shape(a, bt, "mul")
    ad, bd = a.data, bt.data

    def bwd(g, a=a, b=bt, ad=ad, bd=bd):
        accumulate(a, g * bd)
        accumulate(b, g * ad)
    return from_op(ad * bd, (a, bt), bwd)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def bwd(g, a=a, c=c):
        accumulate(a, g * c)
    return from_op(a.data * c, (a,), bwd)


def absval(a: Tensor) -> Tensor:
    sgn = np.sign(a.data)

    def bwd(g, a=a, sgn=sgn):
        accumulate(a, g * sgn)
    return from_op(np.abs(a.data), (a,), bwd)


def square(a: Tensor) -> Tensor:
    ad = a.data

    def bwd(g, a=a, ad=ad):
        accumulate(a, g * (2.0 * ad))
    return from_op(ad * ad, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)

    def bwd(g, a=a, t=t):
        accumulate(a, g * (1.0 - t * t))
    return from_op(t, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g, a=a, s=s):
        accumulate(a, g * (s * (1.0 - s)))
    return from_op(s, (a,), bwd)


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    pos = a.data > 0

    def bwd(g, a=a, pos=pos, slope=slope):
        accumulate(a, g * np.where(pos, 1.0, slope).astype(g.dtype))
    return from_op(np.where(pos, a.data, slope * a.data), (a,), bwd)


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    inside = (a.data >= lo) & (a.data <= hi)

    def bwd(g, a=a, inside=inside):
        accumulate(a, g * inside.astype(g.dtype))
    return from_op(np.clip(a.data, lo, hi), (a,), bwd)


# ---------------------------------------------------------------------------
# reductions


def reduce_mean(a: Tensor) -> Tensor:
    """Arithmetic mean over all elements; backward spreads 1/count to each."""
    n = a.data.size
    if n == 0:
        raise ShapeError("reduce_mean: empty tensor")

    def bwd(g, a=a, n=n):
        accumulate(a, np.full(a.data.shape, float(g) / n, dtype=a.data.dtype))
    return from_op(np.asarray(a.data.mean(), dtype=a.data.dtype), (a,), bwd)


def reduce_sum(a: Tensor) -> Tensor:
    if a.data.size == 0:
        raise ShapeError("reduce_sum: empty tensor")

    def bwd(g, a=a):
        accumulate(a, np.full(a.data.shape, float(g), dtype=a.data.dtype))
    return from_op(np.asarray(a.data.sum(), dtype=a.data.dtype), (a,), bwd)


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared error; shapes must match exactly."""
    return reduce_mean(square(sub(a, b)))


# ---------------------------------------------------------------------------
# structural operations


def detach(a: Tensor) -> Tensor:
    return a.detach()


def slice_(a: Tensor, key) -> Tensor:
    """Basic slicing; backward scatters the gradient into a zero field."""
    out = a.data[key]

    def bwd(g, a=a, key=key):
        z = np.zeros_like(a.data)
        z[key] = g
        accumulate(a, z)
    return from_op(out, (a,), bwd)


def concat(tensors, axis: int) -> Tensor:
    parts = [t.data for t in tensors]

    def bwd(g, tensors=tuple(tensors), axis=axis):
        offset = 0
        for t in tensors:
            n = t.data.shape[axis]
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(offset, offset + n)
            accumulate(t, g[tuple(idx)])
            offset += n
    return from_op(np.concatenate(parts, axis=axis), tuple(tensors), bwd)


def upsample2(a: Tensor) -> Tensor:
    """Nearest-neighbour x2 upsampling of the last two axes."""
    x = a.data
    out = np.repeat(np.repeat(x, 2, axis=-2), 2, axis=-1)

    def bwd(g, a=a):
        s = g.shape
        blocks = g.reshape(s[:-2] + (s[-2] // 2, 2, s[-1] // 2, 2))
        accumulate(a, blocks.sum(axis=(-3, -1)))
    return from_op(out, (a,), bwd)


def average(tensors) -> Tensor:
    """Mean of same-shaped tensors, accumulated in float64 for exactness.

    With <= 2**29 inputs the float64 sum of identical float32 arrays is exact,
    so averaging N bitwise-equal tensors returns them bitwise.
    """
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("average: need at least one tensor")
    shape = tensors[0].data.shape
    for t in tensors[1:]:
        if t.data.shape != shape:
            raise ShapeError("average: all tensors must share one shape")
    n = len(tensors)
    acc = np.zeros(shape, dtype=np.float64)
    for t in tensors:
        acc += t.data
    out = (acc / n).astype(tensors[0].data.dtype)

    def bwd(g, tensors=tuple(tensors), n=n):
        share = g / n
        for t in tensors:
            accumulate(t, share)
    return from_op(out, tuple(tensors), bwd)


# Registry used by the gradient-check suite: name -> (arity, builder).
# Builders map float64 input tensors to an output tensor.
ELEMENTWISE_OPS = {
    "add": (2, lambda a, b: add(a, b)),
    "sub": (2, lambda a, b: sub(a, b)),
    "mul": (2, lambda a, b: mul(a, b)),
    "scale": (1, lambda a: scale(a, -1.7)),
    "abs": (1, absval),
    "square": (1, square),
    "tanh": (1, tanh),
    "sigmoid": (1, sigmoid),
    "leaky_relu": (1, lambda a: leaky_relu(a, 0.2)),
    "clamp": (1, lambda a: clamp(a, -0.75, 0.75)),
}

STRUCTURAL_OPS = {
    "reduce_mean": (1, reduce_mean),
    "reduce_sum": (1, reduce_sum),
    "slice": (1, lambda a: slice_(a, (slice(None), slice(1, None)))),
    "concat": (2, lambda a, b: concat([a, b], axis=0)),
    "upsample2": (1, upsample2),
    "average": (3, lambda a, b, c: average([a, b, c])),
}
