"""Dense tensors with taped reverse-mode gradients, plus ADAM.

Forward operations record a tape of nodes; ``backward`` walks it in
reverse topological order and accumulates gradients into the Parameters
that fed the computation.  The op set is exactly what the scoring
networks need: matmul, broadcast add/multiply, 1-D valid convolution,
temporal and global max-pooling, sigmoid/tanh/relu, concatenation,
slicing, embedding row-gather, and mean-squared-error reduction.

Everything is float64 by default; gradient checking needs the headroom.
Pass ``dtype=np.float32`` at parameter creation for faster training.
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class GradientError(ValueError):
    """Shape mismatch or misuse of the tape."""


class Tensor:
    """A node in the computation tape.

    ``data`` is a row-major numpy array.  ``grad`` is populated by
    ``backward``; for interior nodes it exists only during the sweep.
    """

    __slots__ = ("data", "grad", "parents", "backward_fn", "param")

    def __init__(self, data, parents=(), backward_fn=None, param=None):
        self.data = np.asarray(data)
        self.grad = None
        self.parents: tuple[Tensor, ...] = tuple(parents)
        self.backward_fn: Callable | None = backward_fn
        self.param: Parameter | None = param

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


class Parameter:
    """A persistent trainable array with an accumulated gradient."""

    __slots__ = ("name", "value", "grad", "trainable")

    def __init__(self, name: str, value: np.ndarray, trainable: bool = True):
        self.name = name
        self.value = np.asarray(value)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def node(self) -> Tensor:
        """Leaf tensor reading this parameter's current value."""
        return Tensor(self.value, param=self)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def constant(data) -> Tensor:
    """Leaf tensor that wants no gradient."""
    return Tensor(np.asarray(data))


# ---------------------------------------------------------------------------
# backward sweep


def _topo_order(root: Tensor) -> list[Tensor]:
    # iterative DFS: recurrent graphs are deeper than the Python stack
    order = []
    visited = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate gradients of every Parameter reachable from ``loss``.

    Gradients accumulate additively across fan-out, and into
    ``Parameter.grad`` across calls; zero parameters between steps.
    """
    if loss.data.size != 1:
        raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
    order = _topo_order(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node.grad is None:
            continue
        if node.param is not None and node.param.trainable:
            node.param.grad += node.grad.reshape(node.param.value.shape)
        if node.backward_fn is not None:
            node.backward_fn(node.grad)


# ---------------------------------------------------------------------------
# primitives


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data, parents=(a, b))

    def bw(g):
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    out.backward_fn = bw
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data, parents=(a, b))

    def bw(g):
        a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    out.backward_fn = bw
    return out


def scale(a: Tensor, s: float) -> Tensor:
    out = Tensor(a.data * s, parents=(a,))
    out.backward_fn = lambda g: a._accumulate(g * s)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise GradientError(
            f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}"
        )
    out = Tensor(a.data @ b.data, parents=(a, b))

    def bw(g):
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    out.backward_fn = bw
    return out


def sigmoid(x: Tensor) -> Tensor:
    # split by sign to avoid overflow in exp
    d = x.data
    s = np.empty_like(d)
    pos = d >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    s[~pos] = e / (1.0 + e)
    out = Tensor(s, parents=(x,))
    out.backward_fn = lambda g: x._accumulate(g * s * (1.0 - s))
    return out


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    out = Tensor(t, parents=(x,))
    out.backward_fn = lambda g: x._accumulate(g * (1.0 - t * t))
    return out


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, 0.0), parents=(x,))
    out.backward_fn = lambda g: x._accumulate(g * mask)
    return out


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), parents=tensors)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            t._accumulate(g[tuple(index)])

    out.backward_fn = bw
    return out


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    """View of a slice along the last axis (used to split fused gates)."""
    out = Tensor(x.data[..., start:stop], parents=(x,))

    def bw(g):
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        x._accumulate(full)

    out.backward_fn = bw
    return out


def select_time(x: Tensor, t: int) -> Tensor:
    """x[:, t, :] for a (batch, time, features) tensor."""
    out = Tensor(x.data[:, t, :], parents=(x,))

    def bw(g):
        full = np.zeros_like(x.data)
        full[:, t, :] = g
        x._accumulate(full)

    out.backward_fn = bw
    return out


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = Tensor(x.data.reshape(shape), parents=(x,))
    out.backward_fn = lambda g: x._accumulate(g.reshape(x.data.shape))
    return out


def embedding_lookup(table: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows of ``table`` (V, D) by an integer array (..., L)."""
    idx = np.asarray(indices)
    if not np.issubdtype(idx.dtype, np.integer):
        raise GradientError("embedding indices must be integers")
    out = Tensor(table.data[idx], parents=(table,))

    def bw(g):
        dtable = np.zeros_like(table.data)
        np.add.at(dtable, idx.ravel(), g.reshape(-1, table.data.shape[1]))
        table._accumulate(dtable)

    out.backward_fn = bw
    return out


def conv1d(x: Tensor, kernel: Tensor) -> Tensor:
    """Valid 1-D convolution: (B, T, Cin) * (k, Cin, Cout) -> (B, T-k+1, Cout)."""
    B, T, cin = x.data.shape
    k, kcin, cout = kernel.data.shape
    if kcin != cin:
        raise GradientError(f"conv1d channel mismatch: input {cin}, kernel {kcin}")
    if k > T:
        raise GradientError(f"conv1d kernel {k} longer than sequence {T}")
    windows = np.lib.stride_tricks.sliding_window_view(x.data, k, axis=1)
    # windows: (B, T-k+1, Cin, k); contract over (k, Cin)
    out_data = np.tensordot(windows, kernel.data, axes=([3, 2], [0, 1]))
    out = Tensor(out_data, parents=(x, kernel))

    def bw(g):
        dk = np.tensordot(windows, g, axes=([0, 1], [0, 1]))  # (Cin, k, Cout)
        kernel._accumulate(dk.transpose(1, 0, 2))
        dx = np.zeros_like(x.data)
        t_out = T - k + 1
        for j in range(k):
            dx[:, j : j + t_out, :] += g @ kernel.data[j].T
        x._accumulate(dx)

    out.backward_fn = bw
    return out


def max_pool1d(x: Tensor, pool_size: int) -> Tensor:
    """Non-overlapping temporal max over (B, T, C); the tail T % pool_size
    is dropped.  Ties send the gradient to the first maximum."""
    B, T, C = x.data.shape
    if pool_size < 1:
        raise GradientError(f"pool_size must be >= 1, got {pool_size}")
    t_keep = (T // pool_size) * pool_size
    if t_keep == 0:
        raise GradientError(f"pool_size {pool_size} exceeds sequence length {T}")
    xv = x.data[:, :t_keep, :].reshape(B, t_keep // pool_size, pool_size, C)
    out = Tensor(xv.max(axis=2), parents=(x,))
    argmax = xv.argmax(axis=2)

    def bw(g):
        dxv = np.zeros_like(xv)
        np.put_along_axis(dxv, argmax[:, :, None, :], g[:, :, None, :], axis=2)
        dx = np.zeros_like(x.data)
        dx[:, :t_keep, :] = dxv.reshape(B, t_keep, C)
        x._accumulate(dx)

    out.backward_fn = bw
    return out


def global_max_pool1d(x: Tensor) -> Tensor:
    """Max over the time axis of (B, T, C) -> (B, C)."""
    out = Tensor(x.data.max(axis=1), parents=(x,))
    argmax = x.data.argmax(axis=1)

    def bw(g):
        dx = np.zeros_like(x.data)
        np.put_along_axis(dx, argmax[:, None, :], g[:, None, :], axis=1)
        x._accumulate(dx)

    out.backward_fn = bw
    return out


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    """Mean squared error over every element, as a scalar tensor."""
    target = np.asarray(target)
    if pred.data.shape != target.shape:
        raise GradientError(
            f"mse shape mismatch: prediction {pred.data.shape}, target {target.shape}"
        )
    diff = pred.data - target
    out = Tensor(np.array(np.mean(diff * diff)), parents=(pred,))
    out.backward_fn = lambda g: pred._accumulate(g * 2.0 * diff / diff.size)
    return out


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(np.array(x.data.sum()), parents=(x,))
    out.backward_fn = lambda g: x._accumulate(np.broadcast_to(g, x.data.shape).copy())
    return out


# ---------------------------------------------------------------------------
# initialization


def glorot_uniform(
    shape: tuple[int, ...], fan_in: int, fan_out: int, rng: np.random.Generator,
    dtype=np.float64,
) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


# ---------------------------------------------------------------------------
# ADAM


@dataclass
class AdamState:
    """Per-parameter moment estimates for the ADAM update."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_parameter(cls, param: Parameter, lr: float = 0.001, **kw) -> "AdamState":
        return cls(m=np.zeros_like(param.value), v=np.zeros_like(param.value), lr=lr, **kw)


def adam_step(param: Parameter, state: AdamState) -> None:
    """One ADAM update from the parameter's accumulated gradient.

    m and v are exponential moving averages of the gradient and its
    square; both are bias-corrected by 1 - beta^t before the step.
    """
    g = param.grad
    if g.shape != param.value.shape:
        raise GradientError(
            f"{param.name}: gradient shape {g.shape} != value shape {param.value.shape}"
        )
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    param.value -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


class AdamOptimizer:
    """ADAM across a parameter set, one state per trainable parameter."""

    def __init__(self, params: Iterable[Parameter], lr: float = 0.001):
        self.params = [p for p in params if p.trainable]
        self.states = {p.name: AdamState.for_parameter(p, lr=lr) for p in self.params}

    def step(self) -> None:
        for p in self.params:
            adam_step(p, self.states[p.name])

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


# ---------------------------------------------------------------------------
# verification


def grad_check(
    fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    perturbation: float = 1e-5,
    max_entries_per_param: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``fn`` rebuilds the forward graph and returns the scalar loss; it
    must be deterministic.  Relative error is |a - n| / max(|a|, |n|,
    1e-12) per entry.  Use 64-bit parameters.
    """
    for p in params:
        p.zero_grad()
    backward(fn())
    analytic = {p.name: p.grad.copy() for p in params}

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        flat = p.value.ravel()
        n_entries = flat.size
        if max_entries_per_param is not None and n_entries > max_entries_per_param:
            entries = rng.choice(n_entries, size=max_entries_per_param, replace=False)
        else:
            entries = range(n_entries)
        a_flat = analytic[p.name].ravel()
        for i in entries:
            original = flat[i]
            flat[i] = original + perturbation
            f_plus = float(fn().data)
            flat[i] = original - perturbation
            f_minus = float(fn().data)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * perturbation)
            denom = max(abs(a_flat[i]), abs(numeric), 1e-12)
            worst = max(worst, abs(a_flat[i] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# checkpoints

_MAGIC = b"BSCK"
_VERSION = 1


def save_checkpoint(path: str, params: Iterable[Parameter]) -> None:
    """Flat binary dump: header, then per-parameter name, shape, float64 data."""
    params = list(params)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _VERSION, len(params)))
        for p in params:
            name = p.name.encode("utf-8")
            f.write(struct.pack("<H", len(name)))
            f.write(name)
            f.write(struct.pack("<I", p.value.ndim))
            f.write(struct.pack(f"<{p.value.ndim}I", *p.value.shape))
            f.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> "OrderedDict[str, np.ndarray]":
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise GradientError(f"{path}: not a checkpoint file (magic {magic!r})")
        version, count = struct.unpack("<II", f.read(8))
        if version != _VERSION:
            raise GradientError(f"{path}: unsupported checkpoint version {version}")
        out: OrderedDict[str, np.ndarray] = OrderedDict()
        for _ in range(count):
            (name_len,) = struct.unpack("<H", f.read(2))
            name = f.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", f.read(4))
            shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(8 * size), dtype="<f8").reshape(shape)
            out[name] = data.copy()
    return out
