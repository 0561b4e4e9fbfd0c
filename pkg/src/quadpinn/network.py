"""Multilayer perceptron on top of the reverse-mode tape.

Layer ``i`` maps ``A_{i-1}`` (N x h_{i-1}) to ``sigma(A_{i-1} W_i + b_i)`` and
the last layer is affine.  Parameters live in one flat float64 vector in the
canonical order used everywhere in the package (optimizers, gradients, saved
files): layer by layer, the weight matrix ``W_i`` (shape ``h_{i-1} x h_i``,
row-major) followed by the bias ``b_i``.

Saved parameter files (``save_params`` / ``load_params``) are little-endian:

====================  =======================================================
bytes                 content
====================  =======================================================
4                     magic ``b"QPNN"``
2 (uint16)            format version, currently 1
2 (uint16)            activation id (0 identity, 1 tanh)
4 (uint32)            number of widths ``L + 1``
8 (int64)             initialization seed, ``-1`` when unknown
4 (uint32) x (L + 1)  widths ``h_0 .. h_L``
8 (uint64)            parameter count ``P``
8 (float64) x P       parameters in canonical order
====================  =======================================================
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, TapeError, Tensor, _recording

__all__ = [
    "ACTIVATIONS",
    "Mlp",
    "mlp_new",
    "forward",
    "input_derivative",
    "derivative",
    "param_gradient",
    "save_params",
    "load_params",
]

ACTIVATIONS = {"identity": 0, "tanh": 1}
_MAGIC = b"QPNN"
_VERSION = 1


@dataclass
class Mlp:
    """Layer widths, activation and a flat parameter vector."""

    widths: tuple
    activation: str = "tanh"
    seed: Optional[int] = None
    params: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ValueError(f"need at least two positive widths, got {self.widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected {sorted(ACTIVATIONS)}")
        if self.params is None:
            self.params = np.zeros(self.n_params)
        self.params = np.asarray(self.params, dtype=np.float64).copy()
        if self.params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {self.params.shape}")

    @property
    def n_params(self) -> int:
        return sum(a * b + b for a, b in zip(self.widths[:-1], self.widths[1:]))

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    def layer_slices(self) -> list[tuple[slice, tuple, slice]]:
        """Per layer: (weight slice, weight shape, bias slice) into the flat vector."""
        out = []
        offset = 0
        for a, b in zip(self.widths[:-1], self.widths[1:]):
            w = slice(offset, offset + a * b)
            offset += a * b
            bias = slice(offset, offset + b)
            offset += b
            out.append((w, (a, b), bias))
        return out

    def layers(self, params=None) -> list[tuple]:
        """Split a flat vector (array or Tensor) into ``(W_i, b_i)`` pairs."""
        theta = self.params if params is None else params
        return [(theta[w].reshape(shape), theta[b]) for w, shape, b in self.layer_slices()]

    def copy(self) -> "Mlp":
        return Mlp(self.widths, self.activation, self.seed, self.params.copy())


def mlp_new(widths: Sequence[int], activation: str = "tanh", seed: Optional[int] = 42) -> Mlp:
    """Create an MLP with Glorot-uniform weights and zero biases.

    Weights of layer ``i`` are drawn from ``U(-r, r)`` with
    ``r = sqrt(6 / (h_{i-1} + h_i))`` using numpy's PCG64 generator seeded with
    ``seed``; layers are drawn in canonical order.
    """
    net = Mlp(tuple(widths), activation, seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    theta = np.zeros(net.n_params)
    for w, (a, b), _ in net.layer_slices():
        r = math.sqrt(6.0 / (a + b))
        theta[w] = rng.uniform(-r, r, size=a * b)
    net.params = theta
    return net


def _activate(name: str, z):
    if name == "tanh":
        return ad.tanh(z)
    return z


def forward(m: Mlp, X, params=None) -> Tensor:
    """Evaluate the network on the rows of ``X`` (N x h_0); returns N x h_L.

    ``params`` overrides ``m.params`` and may be a tracked Tensor, in which
    case the evaluation is recorded on the active tape.
    """
    X = ad.as_tensor(X)
    if X.ndim != 2 or X.shape[1] != m.in_dim:
        raise ValueError(f"expected input of shape (N, {m.in_dim}), got {X.shape}")
    theta = ad.as_tensor(m.params if params is None else params)
    if theta.shape != (m.n_params,):
        raise ValueError(f"expected {m.n_params} parameters, got shape {theta.shape}")
    layers = m.layers(theta)
    a = X
    for i, (w, b) in enumerate(layers):
        a = a @ w + b
        if i < len(layers) - 1:
            a = _activate(m.activation, a)
    return a


def derivative(tape: Tape, u: Tensor, X: Tensor, order: int = 1, axis: int = 0) -> Tensor:
    """``d^order u / dx_axis^order`` row by row, as a differentiable N x 1 tensor.

    ``u`` must be an N x 1 tensor computed row-wise from the tracked input
    ``X`` on ``tape``.  Order 2 differentiates the order-1 result again.
    """
    if order not in (1, 2):
        raise ValueError(f"only first and second input derivatives are supported, got order {order}")
    if not 0 <= axis < X.shape[1]:
        raise ValueError(f"axis {axis} out of range for input dimension {X.shape[1]}")
    result = u
    for _ in range(order):
        if not result.tracked:
            # an affine map has a constant derivative, so the next one vanishes
            return Tensor(np.zeros(u.shape))
        g = tape.gradient(result, X, create_graph=True)
        if g is None:
            return Tensor(np.zeros(u.shape))
        result = g[:, axis:axis + 1]
    return result


def input_derivative(m: Mlp, X, order: int = 1, axis: int = 0, params=None) -> Tensor:
    """Derivative of the network output with respect to input column ``axis``.

    When called inside an active tape the result stays differentiable with
    respect to tracked ``params``; otherwise a private tape is used.
    """
    if order not in (1, 2):
        raise ValueError(f"only first and second input derivatives are supported, got order {order}")
    data = X.data if isinstance(X, Tensor) else np.asarray(X, dtype=np.float64)
    tape = _recording()
    own = tape is None
    if own:
        tape = Tape()
    with tape if own else _null():
        xs = Tensor(data, requires_grad=True)
        u = forward(m, xs, params)
        if m.out_dim != 1:
            raise ValueError("input_derivative expects a single-output network; slice the output first")
        return derivative(tape, u, xs, order, axis)


class _null:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return None


def param_gradient(tape: Tape, loss: Tensor, params: Union[Tensor, Sequence[Tensor]]) -> np.ndarray:
    """Gradient of scalar ``loss`` flattened in canonical parameter order.

    ``params`` is the tracked flat parameter tensor, or a list of tracked
    tensors whose gradients are concatenated in the given order.
    """
    if not isinstance(loss, Tensor) or loss.size != 1:
        raise TapeError("loss must be a scalar tensor")
    items = [params] if isinstance(params, Tensor) else list(params)
    grads = tape.gradient(loss, items)
    return np.concatenate([
        (np.zeros(p.size) if g is None else g.data.reshape(-1)) for p, g in zip(items, grads)
    ])


def save_params(m: Mlp, path: Union[str, Path]) -> None:
    """Write the network to ``path`` in the documented binary layout."""
    header = struct.pack("<4sHHIq", _MAGIC, _VERSION, ACTIVATIONS[m.activation], len(m.widths),
                         -1 if m.seed is None else int(m.seed))
    body = struct.pack(f"<{len(m.widths)}I", *m.widths) + struct.pack("<Q", m.n_params)
    Path(path).write_bytes(header + body + m.params.astype("<f8").tobytes())


def load_params(path: Union[str, Path]) -> Mlp:
    """Read a network written by ``save_params``."""
    raw = Path(path).read_bytes()
    head = struct.calcsize("<4sHHIq")
    if len(raw) < head:
        raise ValueError("file too short for a parameter header")
    magic, version, act_id, n_widths, seed = struct.unpack_from("<4sHHIq", raw, 0)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a quadpinn parameter file (bad magic or version)")
    widths = struct.unpack_from(f"<{n_widths}I", raw, head)
    offset = head + 4 * n_widths
    (count,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    params = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).astype(np.float64)
    names = {v: k for k, v in ACTIVATIONS.items()}
    return Mlp(widths, names[act_id], None if seed == -1 else seed, params)
