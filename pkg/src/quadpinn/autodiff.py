"""A small reverse-mode differentiation tape on top of numpy.

``Tensor`` wraps a float64 array.  Operations on tensors are recorded while a
``Tape`` is active (``with Tape() as tape: ...``) and at least one operand is
tracked: either a leaf created with ``requires_grad=True`` or the result of
an earlier recorded operation.  ``tape.gradient`` walks the recorded graph
backwards.

Every backward rule is itself written with ``Tensor`` operations.  Passing
``create_graph=True`` records the backward pass too, so the returned
gradients can be differentiated again.  The network module uses this for
second input derivatives and for parameter gradients of losses that contain
input derivatives.

Outside a tape, tensor operations evaluate eagerly without bookkeeping, which
keeps plain forward passes cheap and safe to run from several threads.  The
elementwise functions (``exp``, ``sin``, ...) also accept plain arrays and
scalars and then return plain numpy results.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Tape",
    "TapeError",
    "Tensor",
    "as_tensor",
    "concatenate",
    "broadcast_to",
    "scatter",
    "exp",
    "log",
    "sin",
    "cos",
    "tanh",
    "sinh",
    "cosh",
    "sqrt",
    "square",
]


class TapeError(RuntimeError):
    """Raised when a backward pass is requested for an unrecorded quantity."""


_state = threading.local()


def _stack() -> list:
    stack = getattr(_state, "stack", None)
    if stack is None:
        stack = _state.stack = []
    return stack


def _recording() -> Optional["Tape"]:
    stack = _stack()
    if not stack:
        return None
    return stack[-1]


class Tape:
    """Records tensor operations while active; see the module docstring."""

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        stack = _stack()
        if not stack or stack[-1] is not self:
            raise TapeError("tapes must be exited in the reverse order they were entered")
        stack.pop()

    @property
    def active(self) -> bool:
        return _recording() is self

    def gradient(self, target: "Tensor", sources, grad_output=None,
                 create_graph: bool = False) -> list:
        """Return d(target)/d(source) for each source (``None`` if unrelated).

        ``target`` need not be a scalar; the cotangent defaults to ones, so for
        a vector target the result is the gradient of ``target.sum()``.
        """
        single = isinstance(sources, Tensor)
        srcs = [sources] if single else list(sources)
        if not isinstance(target, Tensor) or not target.tracked:
            raise TapeError("target was not recorded on a tape; compute it inside `with tape:` "
                            "from tracked tensors")
        if target._node is not None and target._node.tape is not self:
            raise TapeError("target was recorded on a different tape")
        order = _topological(target, self)
        if grad_output is None:
            seed = Tensor(np.ones_like(target.data))
        else:
            seed = as_tensor(grad_output)
            if seed.shape != target.shape:
                raise TapeError(f"grad_output shape {seed.shape} != target shape {target.shape}")
        grads: dict[int, Tensor] = {id(target): seed}
        if create_graph:
            _stack().append(self)
        else:
            _stack().append(None)
        try:
            for t in reversed(order):
                g = grads.get(id(t))
                if g is None or t._node is None:
                    continue
                for parent, vjp in zip(t._node.parents, t._node.vjps):
                    if vjp is None or not parent.tracked:
                        continue
                    contribution = vjp(g)
                    prev = grads.get(id(parent))
                    grads[id(parent)] = contribution if prev is None else prev + contribution
        finally:
            _stack().pop()
        out = [grads.get(id(s)) for s in srcs]
        return out[0] if single else out


class _Node:
    __slots__ = ("tape", "parents", "vjps")

    def __init__(self, tape: Tape, parents: tuple, vjps: tuple):
        self.tape = tape
        self.parents = parents
        self.vjps = vjps


def _topological(target: "Tensor", tape: Tape) -> list:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(target, False)]
    while stack:
        t, expanded = stack.pop()
        if expanded:
            order.append(t)
            continue
        if id(t) in seen:
            continue
        seen.add(id(t))
        stack.append((t, True))
        node = t._node
        if node is None:
            continue
        if node.tape is not tape:
            raise TapeError("graph mixes tensors recorded on different tapes")
        for p in node.parents:
            if p._node is not None and id(p) not in seen:
                stack.append((p, False))
            elif p._node is None and id(p) not in seen:
                seen.add(id(p))
                order.append(p)
    return order


def _make(data: np.ndarray, parents: Sequence["Tensor"],
          vjps: Sequence[Optional[Callable]]) -> "Tensor":
    tape = _recording()
    out = Tensor(data)
    if tape is None:
        return out
    if any(p.tracked for p in parents):
        out._node = _Node(tape, tuple(parents), tuple(vjps))
    return out


def as_tensor(value) -> "Tensor":
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(g: "Tensor", shape: tuple) -> "Tensor":
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


class Tensor:
    """A float64 array that can take part in reverse-mode differentiation."""

    __slots__ = ("data", "_node", "requires_grad")
    __array_ufunc__ = None  # make numpy defer to our reflected operators
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self._node = None
        self.requires_grad = bool(requires_grad)

    # -- basic properties -------------------------------------------------
    @property
    def tracked(self) -> bool:
        return self.requires_grad or self._node is not None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def __len__(self) -> int:
        return len(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", tracked" if self.tracked else ""
        return f"Tensor({np.array2string(self.data, precision=6)}{flag})"

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return _make(a.data + b.data, (a, b),
                     (lambda g: _unbroadcast(g, a.shape), lambda g: _unbroadcast(g, b.shape)))

    def __radd__(self, other):
        return as_tensor(other).__add__(self)

    def __sub__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return _make(a.data - b.data, (a, b),
                     (lambda g: _unbroadcast(g, a.shape), lambda g: _unbroadcast(-g, b.shape)))

    def __rsub__(self, other):
        return as_tensor(other).__sub__(self)

    def __neg__(self):
        a = self
        return _make(-a.data, (a,), (lambda g: -g,))

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return _make(a.data * b.data, (a, b),
                     (lambda g: _unbroadcast(g * b, a.shape), lambda g: _unbroadcast(g * a, b.shape)))

    def __rmul__(self, other):
        return as_tensor(other).__mul__(self)

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return _make(a.data / b.data, (a, b),
                     (lambda g: _unbroadcast(g / b, a.shape),
                      lambda g: _unbroadcast(-(g * a) / (b * b), b.shape)))

    def __rtruediv__(self, other):
        return as_tensor(other).__truediv__(self)

    def __pow__(self, exponent):
        if isinstance(exponent, Tensor):
            raise TypeError("tensor exponents are not supported; use exp(b * log(a))")
        p = float(exponent)
        a = self
        if p == 0.0:
            return Tensor(np.ones_like(a.data))
        if p == 1.0:
            return _make(a.data.copy(), (a,), (lambda g: g,))
        if p == 2.0:
            return _make(a.data * a.data, (a,), (lambda g: g * (2.0 * a),))
        return _make(a.data ** p, (a,), (lambda g: g * (p * a ** (p - 1.0)),))

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(as_tensor(other), self)

    # -- shape manipulation ----------------------------------------------
    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        return _make(a.data.reshape(shape), (a,), (lambda g: g.reshape(a.shape),))

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        a = self
        return _make(a.data.transpose(axes), (a,), (lambda g: g.transpose(inverse),))

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, index) -> "Tensor":
        a = self
        return _make(a.data[index], (a,), (lambda g: scatter(g, index, a.shape),))

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        a = self
        data = a.data.sum(axis=axis, keepdims=keepdims)

        def vjp(g):
            if axis is not None and not keepdims:
                axes = (axis,) if np.isscalar(axis) else tuple(axis)
                axes = tuple(ax % a.ndim for ax in axes)
                shape = [1 if i in axes else n for i, n in enumerate(a.shape)]
                g = g.reshape(tuple(shape))
            elif axis is None and not keepdims:
                g = g.reshape((1,) * a.ndim)
            return broadcast_to(g, a.shape)

        return _make(np.asarray(data), (a,), (vjp,))

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.size
        else:
            axes = (axis,) if np.isscalar(axis) else tuple(axis)
            count = int(np.prod([self.shape[ax] for ax in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


def matmul(a: Tensor, b) -> Tensor:
    """Matrix product for 1-D/2-D operands; N-D @ 1-D contracts the last axis."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim > 2 and b.ndim == 1:
        lead = a.shape[:-1]
        return matmul(a.reshape(-1, a.shape[-1]), b).reshape(lead)
    if a.ndim == 2 and b.ndim == 2:
        return _make(a.data @ b.data, (a, b), (lambda g: matmul(g, b.T), lambda g: matmul(a.T, g)))
    if a.ndim == 2 and b.ndim == 1:
        return _make(a.data @ b.data, (a, b),
                     (lambda g: g.reshape(-1, 1) * b.reshape(1, -1), lambda g: matmul(a.T, g)))
    if a.ndim == 1 and b.ndim == 2:
        return _make(a.data @ b.data, (a, b),
                     (lambda g: matmul(b, g), lambda g: a.reshape(-1, 1) * g.reshape(1, -1)))
    if a.ndim == 1 and b.ndim == 1:
        return (a * b).sum()
    raise ValueError(f"matmul not supported for shapes {a.shape} @ {b.shape}")


def broadcast_to(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    if a.shape == shape:
        return a
    return _make(np.broadcast_to(a.data, shape).copy(), (a,), (lambda g: _unbroadcast(g, a.shape),))


def scatter(values, index, shape) -> Tensor:
    """Zeros of ``shape`` with ``values`` added at ``index`` (inverse of indexing)."""
    values = as_tensor(values)
    out = np.zeros(shape)
    np.add.at(out, index, values.data)
    return _make(out, (values,), (lambda g: g[index],))


def concatenate(tensors: Iterable, axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    data = np.concatenate([p.data for p in parts], axis=axis)
    ax = axis % data.ndim
    vjps = []
    offset = 0
    for p in parts:
        width = p.shape[ax]
        sl = [slice(None)] * data.ndim
        sl[ax] = slice(offset, offset + width)
        index = tuple(sl)
        vjps.append(lambda g, index=index: g[index])
        offset += width
    return _make(data, tuple(parts), tuple(vjps))


# -- elementwise functions --------------------------------------------------


def exp(x):
    if not isinstance(x, Tensor):
        return np.exp(x)
    out_data = np.exp(x.data)
    holder: list[Tensor] = []
    out = _make(out_data, (x,), (lambda g: g * holder[0],))
    holder.append(out)
    return out


def log(x):
    if not isinstance(x, Tensor):
        return np.log(x)
    return _make(np.log(x.data), (x,), (lambda g: g / x,))


def sin(x):
    if not isinstance(x, Tensor):
        return np.sin(x)
    return _make(np.sin(x.data), (x,), (lambda g: g * cos(x),))


def cos(x):
    if not isinstance(x, Tensor):
        return np.cos(x)
    return _make(np.cos(x.data), (x,), (lambda g: -(g * sin(x)),))


def sinh(x):
    if not isinstance(x, Tensor):
        return np.sinh(x)
    return _make(np.sinh(x.data), (x,), (lambda g: g * cosh(x),))


def cosh(x):
    if not isinstance(x, Tensor):
        return np.cosh(x)
    return _make(np.cosh(x.data), (x,), (lambda g: g * sinh(x),))


def tanh(x):
    if not isinstance(x, Tensor):
        return np.tanh(x)
    holder: list[Tensor] = []
    out = _make(np.tanh(x.data), (x,), (lambda g: g * (1.0 - holder[0] * holder[0]),))
    holder.append(out)
    return out


def sqrt(x):
    if not isinstance(x, Tensor):
        return np.sqrt(x)
    return x ** 0.5


def square(x):
    if not isinstance(x, Tensor):
        return np.square(x)
    return x ** 2
