"""Minimal dense-tensor engine with taped reverse-mode differentiation.

Tensors wrap float64 ndarrays. While a ``Tape`` is active (``with Tape() as
tape:``), every operation appends a record holding the closure needed for its
backward pass; ``backward(tape, loss)`` walks the records in reverse
execution order (a valid reverse topological order) and accumulates adjoints,
so a node consumed by several branches receives the sum of branch gradients.
Outside a tape the same operations run untaped, which is the inference path.

A tape and its tensors belong to one logical thread; the active tape is
thread-local. 64-bit floats throughout.
"""

from __future__ import annotations

import itertools
import threading
from typing import Callable, Sequence

import numpy as np

_node_ids = itertools.count()
_tls = threading.local()


def _active_tape() -> "Tape | None":
    return getattr(_tls, "tape", None)


class Tensor:
    """N-dimensional float64 array participating in recorded computations."""

    __slots__ = ("data", "grad", "node_id")

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.node_id: int = next(_node_ids)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, node_id={self.node_id})"

    def __getitem__(self, key):
        return tslice(self, key)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Ordered record of executed operations for one forward pass."""

    def __init__(self):
        # each record: (output tensor, input tensors, backward closure)
        self._records: list[
            tuple[Tensor, tuple[Tensor, ...], Callable[[np.ndarray], tuple]]
        ] = []

    def __enter__(self) -> "Tape":
        self._outer = _active_tape()
        _tls.tape = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _tls.tape = self._outer

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Tensor) -> None:
        backward(self, loss)


def _record(out: Tensor, inputs: Sequence[Tensor], backward_fn) -> None:
    tape = _active_tape()
    if tape is not None:
        tape._records.append((out, tuple(inputs), backward_fn))


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate ``.grad`` on every tensor in ``tape`` reachable from ``loss``.

    ``loss`` must be scalar. Tensors touched by the tape but unreachable from
    the loss get ``grad = None``.
    """
    if loss.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
    touched: dict[int, Tensor] = {loss.node_id: loss}
    for out, inputs, backward_fn in reversed(tape._records):
        touched[out.node_id] = out
        for t in inputs:
            touched.setdefault(t.node_id, t)
        g = grads.get(out.node_id)
        if g is None:
            continue
        for t, ig in zip(inputs, backward_fn(g)):
            if ig is None:
                continue
            acc = grads.get(t.node_id)
            grads[t.node_id] = ig if acc is None else acc + ig
    for node_id, t in touched.items():
        t.grad = grads.get(node_id)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a gradient back to the shape of a broadcast operand."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# structural ops
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    """Elementwise addition with numpy broadcasting (covers bias vectors)."""
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data)

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    _record(out, (a, b), bwd)
    return out


def mul(a, b) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data)

    def bwd(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    _record(out, (a, b), bwd)
    return out


def neg(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(-a.data)
    _record(out, (a,), lambda g: (-g,))
    return out


def matmul(a, b) -> Tensor:
    """Matrix product; 1-D operands follow numpy's promotion rules."""
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data @ b.data)

    def bwd(g):
        ad, bd = a.data, b.data
        a2 = ad.reshape(1, -1) if ad.ndim == 1 else ad
        b2 = bd.reshape(-1, 1) if bd.ndim == 1 else bd
        if bd.ndim == 1:
            g = np.expand_dims(g, -1)
        if ad.ndim == 1:
            g = np.expand_dims(g, -2)
        ga = _unbroadcast(g @ np.swapaxes(b2, -1, -2), a2.shape).reshape(ad.shape)
        gb = _unbroadcast(np.swapaxes(a2, -1, -2) @ g, b2.shape).reshape(bd.shape)
        return ga, gb

    _record(out, (a, b), bwd)
    return out


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape))
    _record(out, (a,), lambda g: (g.reshape(a.shape),))
    return out


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    """Concatenate along an axis; backward splits the gradient."""
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))

    _record(out, tensors, bwd)
    return out


def transpose(a, axes: Sequence[int] | None = None) -> Tensor:
    """Permute axes (all reversed when ``axes`` is None); backward applies
    the inverse permutation."""
    a = as_tensor(a)
    perm = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    if sorted(perm) != list(range(a.ndim)):
        raise ValueError(f"axes {perm} is not a permutation of {a.ndim} axes")
    inverse = tuple(np.argsort(perm))
    out = Tensor(np.transpose(a.data, perm))
    _record(out, (a,), lambda g: (np.transpose(g, inverse),))
    return out


def tslice(a, key) -> Tensor:
    """Basic indexing (ints, slices, ellipsis); backward scatters into zeros."""
    a = as_tensor(a)
    out = Tensor(a.data[key])

    def bwd(g):
        buf = np.zeros_like(a.data)
        buf[key] += g
        return (buf,)

    _record(out, (a,), bwd)
    return out


def gather_rows(table, indices) -> Tensor:
    """Row lookup ``table[indices]``; backward scatter-adds into the table.

    This is the embedding lookup: repeated indices accumulate gradient.
    """
    table = as_tensor(table)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ValueError(
            f"index out of range for table with {table.shape[0]} rows"
        )
    out = Tensor(table.data[idx])

    def bwd(g):
        buf = np.zeros_like(table.data)
        np.add.at(buf, idx, g)
        return (buf,)

    _record(out, (table,), bwd)
    return out


def axis_max(a, axis: int) -> Tensor:
    """Maximum over one axis; backward routes to the first argmax on ties."""
    a = as_tensor(a)
    if a.shape[axis] == 0:
        raise ValueError("axis_max over an empty axis")
    arg = a.data.argmax(axis=axis)
    out = Tensor(a.data.max(axis=axis))

    def bwd(g):
        buf = np.zeros_like(a.data)
        np.put_along_axis(
            buf, np.expand_dims(arg, axis), np.expand_dims(g, axis), axis
        )
        return (buf,)

    _record(out, (a,), bwd)
    return out


def tsum(a) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    a = as_tensor(a)
    out = Tensor(a.data.sum())
    _record(out, (a,), lambda g: (np.full(a.shape, g),))
    return out


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------


def relu(a) -> Tensor:
    """max(0, x); subgradient at exactly 0 is 0."""
    a = as_tensor(a)
    mask = a.data > 0
    out = Tensor(np.where(mask, a.data, 0.0))
    _record(out, (a,), lambda g: (g * mask,))
    return out


def sigmoid(a) -> Tensor:
    """Logistic function, overflow-safe for large |x|."""
    a = as_tensor(a)
    t = np.exp(-np.abs(a.data))
    s = np.where(a.data >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    out = Tensor(s)
    _record(out, (a,), lambda g: (g * s * (1.0 - s),))
    return out


def tanh_act(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.data)
    out = Tensor(t)
    _record(out, (a,), lambda g: (g * (1.0 - t * t),))
    return out


def hard_sigmoid(a) -> Tensor:
    """clip(0.2 x + 0.5, 0, 1); slope 0.2 strictly inside (-2.5, 2.5)."""
    a = as_tensor(a)
    out = Tensor(np.clip(0.2 * a.data + 0.5, 0.0, 1.0))
    mask = (a.data > -2.5) & (a.data < 2.5)
    _record(out, (a,), lambda g: (g * 0.2 * mask,))
    return out


# ---------------------------------------------------------------------------
# regularization and loss
# ---------------------------------------------------------------------------


def dropout(a, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability ``rate``, scale survivors by
    1/(1-rate) in training mode; identity in inference mode."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    a = as_tensor(a)
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise ValueError("training-mode dropout needs a seeded generator")
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
    out = Tensor(a.data * mask)
    _record(out, (a,), lambda g: (g * mask,))
    return out


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Standalone inverted-dropout mask (entries 0 or 1/(1-rate)).

    Used for recurrent dropout, where one mask is sampled per sequence and
    reused at every timestep.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


BCE_CLIP = 1e-7


def binary_cross_entropy(p, y) -> Tensor:
    """Mean of -[y ln p + (1-y) ln(1-p)] with p clipped to [1e-7, 1 - 1e-7].

    No gradient flows where the clip is active (saturated predictions).
    """
    p = as_tensor(p)
    yd = np.asarray(y.data if isinstance(y, Tensor) else y, dtype=np.float64)
    if p.shape != yd.shape:
        raise ValueError(f"probability shape {p.shape} != label shape {yd.shape}")
    if not np.isin(yd, (0.0, 1.0)).all():
        raise ValueError("labels must be exactly 0 or 1")
    pc = np.clip(p.data, BCE_CLIP, 1.0 - BCE_CLIP)
    n = pc.size
    out = Tensor(-(yd * np.log(pc) + (1.0 - yd) * np.log1p(-pc)).mean())
    inside = (p.data == pc).astype(np.float64)

    def bwd(g):
        return (g * inside * (pc - yd) / (pc * (1.0 - pc) * n),)

    _record(out, (p,), bwd)
    return out
