"""Minimal reverse-mode automatic differentiation over dense float64
arrays, with the operator set the estimation model needs, plus Adam.

A Tensor records its parents and a backward closure when any input in the
subgraph requires gradients. ``backward`` runs once per graph; a second
call on the same loss node is rejected.
"""

import numpy as np

from .errors import InvalidArgument


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward",
                 "_consumed")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"


def _make(data, parents, backward):
    track = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=track)
    if track:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; b may broadcast as a bias row against a matrix."""
    try:
        data = a.data + b.data
    except ValueError as e:
        raise InvalidArgument(f"add shape mismatch: {a.shape} vs {b.shape}") from e

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))
    return _make(data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data - b.data
    except ValueError as e:
        raise InvalidArgument(f"sub shape mismatch: {a.shape} vs {b.shape}") from e

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))
    return _make(data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError as e:
        raise InvalidArgument(f"mul shape mismatch: {a.shape} vs {b.shape}") from e

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))
    return _make(data, (a, b), backward)


def _unbroadcast(g, shape):
    """Sum gradient over axes introduced or expanded by broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise InvalidArgument(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def backward(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)
    return _make(data, (a, b), backward)


def concat(tensors, axis=1) -> Tensor:
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offset, offset + size)
            _accum(t, g[tuple(sl)])
            offset += size
    return _make(data, tensors, backward)


def slice_cols(t: Tensor, start: int, stop: int) -> Tensor:
    data = t.data[:, start:stop]

    def backward(g):
        full = np.zeros_like(t.data)
        full[:, start:stop] = g
        _accum(t, full)
    return _make(data, (t,), backward)


def sigmoid(t: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-t.data))

    def backward(g):
        _accum(t, g * data * (1.0 - data))
    return _make(data, (t,), backward)


def tanh(t: Tensor) -> Tensor:
    data = np.tanh(t.data)

    def backward(g):
        _accum(t, g * (1.0 - data * data))
    return _make(data, (t,), backward)


def relu(t: Tensor) -> Tensor:
    data = np.maximum(t.data, 0.0)

    def backward(g):
        _accum(t, g * (t.data > 0))
    return _make(data, (t,), backward)


def dropout(t: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: kept activations scaled by 1/(1-p); identity in
    evaluation mode or when p == 0."""
    if not training or p == 0.0:
        return t
    if not 0.0 <= p < 1.0:
        raise InvalidArgument(f"dropout probability must be in [0, 1), got {p}")
    mask = (rng.random(t.data.shape) >= p) / (1.0 - p)
    data = t.data * mask

    def backward(g):
        _accum(t, g * mask)
    return _make(data, (t,), backward)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather from an embedding matrix; gradient scatter-adds rows."""
    ids = np.asarray(ids, dtype=np.int64)
    data = weight.data[ids]

    def backward(g):
        if not weight.requires_grad:
            return
        if weight.grad is None:
            weight.grad = np.zeros_like(weight.data)
        np.add.at(weight.grad, ids, g)
    return _make(data, (weight,), backward)


def tsum(t: Tensor) -> Tensor:
    data = np.array(t.data.sum())

    def backward(g):
        _accum(t, np.full_like(t.data, float(g)))
    return _make(data, (t,), backward)


def scale(t: Tensor, factor: float) -> Tensor:
    data = t.data * factor

    def backward(g):
        _accum(t, g * factor)
    return _make(data, (t,), backward)


def mse(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error over all cells."""
    if pred.shape != target.shape:
        raise InvalidArgument(f"mse shape mismatch: {pred.shape} vs {target.shape}")
    diff = sub(pred, target)
    return scale(tsum(mul(diff, diff)), 1.0 / pred.data.size)


def masked_mse(pred: Tensor, target: Tensor, mask: np.ndarray) -> Tensor:
    """Mean squared error over unmasked cells; masked cells contribute zero."""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != pred.shape:
        raise InvalidArgument(f"mask shape {mask.shape} vs predictions {pred.shape}")
    count = mask.sum()
    if count == 0:
        raise InvalidArgument("all target cells are masked")
    diff = mul(sub(pred, target), Tensor(mask))
    return scale(tsum(mul(diff, diff)), 1.0 / count)


def constant(data) -> Tensor:
    return Tensor(data)


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar loss into every reachable tensor
    with requires_grad. The graph is freed afterward and may not be reused.
    """
    if loss.data.size != 1:
        raise InvalidArgument(f"loss must be scalar, got shape {loss.shape}")
    if loss._consumed:
        raise InvalidArgument("backward already ran on this graph")
    loss._consumed = True

    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None or node._backward is None:
            continue
        node._backward(g)
        # Op closures accumulate into .grad; leaves (no _backward) keep it,
        # intermediates hand it on via the grads map instead.
        for p in node._parents:
            if p._backward is not None and p.grad is not None:
                prev = grads.get(id(p))
                grads[id(p)] = p.grad if prev is None else prev + p.grad
                p.grad = None
        node._parents = ()
        node._backward = None


def zero_grads(params) -> None:
    for p in params:
        p.grad = None


class Adam:
    """Bias-corrected Adam over a dict of named parameter tensors."""

    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999,
                 eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise InvalidArgument(
                    f"gradient shape {g.shape} does not match parameter "
                    f"'{name}' shape {p.data.shape}")
            m = self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** t)
            v_hat = v / (1 - self.beta2 ** t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
