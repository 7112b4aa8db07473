"""Reverse-mode automatic differentiation over dense 2-D float64 matrices.

Every op returns a new :class:`Tensor` that remembers its parents and a
closure propagating the output gradient back to them.  Scalars are 1x1
matrices.  Broadcasting follows numpy rules restricted to 2-D, which covers
row-bias addition (``N x F + 1 x F``), per-node scaling (``N x F * N x 1``)
and scalar scaling (``N x F * 1 x 1``).
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False, name: str = "", _check: bool = True):
        arr = np.array(value, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-D matrix, got shape {arr.shape}")
        if _check:
            if arr.size == 0:
                raise ShapeError(f"matrix dimensions must be positive, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in matrix {name!r}")
        self.value = arr
        self.grad = np.zeros_like(arr) if requires_grad else None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.value)

    def numpy(self) -> np.ndarray:
        return self.value

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(value: np.ndarray) -> Tensor:
    """Wrap an existing float64 array without copying or validation."""
    return _result(np.asarray(value, dtype=np.float64), (), None)


def _result(value: np.ndarray, parents, backward) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.value = value
    out.name = ""
    out.requires_grad = any(p.requires_grad for p in parents)
    out.grad = None
    out._parents = tuple(parents) if out.requires_grad else ()
    out._backward = backward if out.requires_grad else None
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> tuple[int, int]:
    shape = []
    for da, db in zip(a.shape, b.shape):
        if da == db or db == 1:
            shape.append(da)
        elif da == 1:
            shape.append(db)
        else:
            raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")
    return tuple(shape)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    return g.sum(axis=axes, keepdims=True)


def backward(loss: Tensor, grad: np.ndarray | None = None) -> None:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every reachable tensor."""
    if grad is None:
        if loss.shape != (1, 1):
            raise ShapeError(f"backward without an explicit gradient needs a 1x1 loss, got {loss.shape}")
        grad = np.ones((1, 1))
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(loss, False)]
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
            if id(p) not in seen:
                stack.append((p, False))
    # intermediate gradients are released once consumed
    grads: dict[int, np.ndarray] = {id(loss): np.asarray(grad, dtype=np.float64)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            _accumulate(node, g)
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + pg
            else:
                grads[id(parent)] = pg


# ---------------------------------------------------------------------------
# ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def bw(g):
        return (
            g @ b.value.T if a.requires_grad else None,
            a.value.T @ g if b.requires_grad else None,
        )

    return _result(a.value @ b.value, (a, b), bw)


def transpose(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return _result(a.value.T.copy(), (a,), lambda g: (g.T,))


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.value + b.value, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product with 2-D broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def bw(g):
        return (
            _unbroadcast(g * b.value, a.shape) if a.requires_grad else None,
            _unbroadcast(g * a.value, b.shape) if b.requires_grad else None,
        )

    return _result(a.value * b.value, (a, b), bw)


def add_row(a: Tensor, row: Tensor) -> Tensor:
    row = as_tensor(row)
    if row.shape != (1, a.shape[1]):
        raise ShapeError(f"add_row: bias shape {row.shape} does not match matrix shape {a.shape}")
    return add(a, row)


def scale(a: Tensor, s: Tensor) -> Tensor:
    """Multiply by a 1x1 scalar or an N x 1 per-row column."""
    s = as_tensor(s)
    if s.shape[1] != 1 or s.shape[0] not in (1, a.shape[0]):
        raise ShapeError(f"scale: factor shape {s.shape} does not broadcast over {a.shape}")
    return mul(a, s)


def sum_all(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return _result(np.array([[a.value.sum()]]), (a,), lambda g: (np.full(a.shape, g[0, 0]),))


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    a = as_tensor(a)
    d = np.where(a.value > 0, 1.0, slope)
    return _result(a.value * d, (a,), lambda g: (g * d,))


def relu(a: Tensor) -> Tensor:
    return leaky_relu(a, 0.0)


def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    x = a.value
    s = np.empty_like(x)
    pos = x >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    s[~pos] = ex / (1.0 + ex)
    return _result(s, (a,), lambda g: (g * s * (1.0 - s),))


def dropout(a: Tensor, rate: float, rng: np.random.Generator | None, training: bool = True) -> Tensor:
    """Inverted dropout; identity outside training or when ``rate == 0``."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise ValueError("dropout in training mode needs a random generator")
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return _result(a.value * mask, (a,), lambda g: (g * mask,))


def log_softmax(a: Tensor) -> Tensor:
    """Row-wise log-softmax."""
    a = as_tensor(a)
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out = shifted - lse
    p = np.exp(out)
    return _result(out, (a,), lambda g: (g - p * g.sum(axis=1, keepdims=True),))


def nll_loss(logp: Tensor, labels, rows=None) -> Tensor:
    """Mean negative log-likelihood of ``labels`` over the selected ``rows``."""
    labels = np.asarray(labels, dtype=np.int64)
    rows = np.arange(logp.shape[0]) if rows is None else np.asarray(rows, dtype=np.int64)
    if labels.shape != rows.shape:
        raise ShapeError(f"nll_loss: {labels.shape[0]} labels for {rows.shape[0]} rows")
    if labels.size and (labels.min() < 0 or labels.max() >= logp.shape[1]):
        raise ValueError(f"nll_loss: labels outside [0, {logp.shape[1]})")
    m = rows.size
    val = -logp.value[rows, labels].sum() / m

    def bw(g):
        out = np.zeros(logp.shape)
        np.add.at(out, (rows, labels), -g[0, 0] / m)
        return (out,)

    return _result(np.array([[val]]), (logp,), bw)


def binary_cross_entropy(p: Tensor, targets, eps: float = 1e-12) -> Tensor:
    """Mean BCE of probabilities ``p`` (N x 1) against 0/1 targets."""
    y = np.asarray(targets, dtype=np.float64).reshape(p.shape)
    q = np.clip(p.value, eps, 1.0 - eps)
    n = y.size
    val = -(y * np.log(q) + (1.0 - y) * np.log(1.0 - q)).sum() / n
    # gradient is zero on the clipped region
    inside = (p.value > eps) & (p.value < 1.0 - eps)

    def bw(g):
        return (g[0, 0] * inside * (q - y) / (q * (1.0 - q)) / n,)

    return _result(np.array([[val]]), (p,), bw)


def l2_normalize_rows(a: Tensor, eps: float = 0.0) -> Tensor:
    """Scale each row to unit norm; all-zero rows stay zero."""
    a = as_tensor(a)
    norms = np.sqrt((a.value**2).sum(axis=1, keepdims=True))
    safe = np.where(norms > eps, norms, 1.0)
    out = np.where(norms > eps, a.value / safe, 0.0)

    def bw(g):
        proj = (g * out).sum(axis=1, keepdims=True)
        return (np.where(norms > eps, (g - out * proj) / safe, 0.0),)

    return _result(out, (a,), bw)


def layer_norm_rows(a: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize each row to zero mean and unit variance (no affine terms)."""
    a = as_tensor(a)
    mu = a.value.mean(axis=1, keepdims=True)
    xc = a.value - mu
    inv = 1.0 / np.sqrt((xc**2).mean(axis=1, keepdims=True) + eps)
    xhat = xc * inv

    def bw(g):
        f = a.shape[1]
        return (inv * (g - g.mean(axis=1, keepdims=True) - xhat * (g * xhat).sum(axis=1, keepdims=True) / f),)

    return _result(xhat, (a,), bw)
