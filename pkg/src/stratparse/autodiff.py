"""Minimal dense-tensor engine with reverse-mode differentiation.

Tensors wrap numpy arrays (float32 by default) and record a backward
closure per operation; ``Tensor.backward()`` walks the graph iteratively,
so arbitrarily long recurrent chains are safe.  The LSTM sequence op is
fused: one graph node per directional pass with a hand-derived
backpropagation-through-time backward, which keeps per-sentence graphs
small.  Every op here is covered by finite-difference checks in the test
suite.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

import numpy as np

_STATE = threading.local()  # per-thread so parallel inference cannot race


def _grad_enabled():
    return getattr(_STATE, "grad_enabled", True)


@contextmanager
def no_grad():
    """Disable graph construction on this thread (inference fast path)."""
    previous = _grad_enabled()
    _STATE.grad_enabled = False
    try:
        yield
    finally:
        _STATE.grad_enabled = previous


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def backward(self):
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    def zero_grad(self):
        self.grad = None

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={tuple(self.shape)}, grad={self.requires_grad})"


def tensor(values, requires_grad=False, dtype=np.float32):
    return Tensor(np.asarray(values, dtype=dtype), requires_grad=requires_grad)


def zeros(shape, dtype=np.float32):
    return Tensor(np.zeros(shape, dtype=dtype))


def _acc(target, grad):
    if target.grad is None:
        target.grad = grad.copy()
    else:
        target.grad += grad


def _track(*tensors):
    return _grad_enabled() and any(t.requires_grad for t in tensors)


def _unbroadcast(grad, shape):
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _shape_error(op, a, b):
    return ValueError(f"{op}: incompatible shapes {tuple(a.shape)} and {tuple(b.shape)}")


def add(a, b):
    try:
        out = a.data + b.data
    except ValueError:
        raise _shape_error("add", a, b) from None
    if not _track(a, b):
        return Tensor(out)

    def backward(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g, a.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(g, b.shape))
    return Tensor(out, True, (a, b), backward)


def sub(a, b):
    try:
        out = a.data - b.data
    except ValueError:
        raise _shape_error("sub", a, b) from None
    if not _track(a, b):
        return Tensor(out)

    def backward(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g, a.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(-g, b.shape))
    return Tensor(out, True, (a, b), backward)


def mul(a, b):
    try:
        out = a.data * b.data
    except ValueError:
        raise _shape_error("mul", a, b) from None
    if not _track(a, b):
        return Tensor(out)

    def backward(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(g * a.data, b.shape))
    return Tensor(out, True, (a, b), backward)


def neg(a):
    if not _track(a):
        return Tensor(-a.data)

    def backward(g):
        _acc(a, -g)
    return Tensor(-a.data, True, (a,), backward)


def scale(a, factor):
    """Multiply by a python constant."""
    out = a.data * factor
    if not _track(a):
        return Tensor(out)

    def backward(g):
        _acc(a, g * factor)
    return Tensor(out, True, (a,), backward)


def matmul(a, b):
    if a.data.shape[-1] != b.data.shape[0]:
        raise _shape_error("matmul", a, b)
    out = a.data @ b.data
    if not _track(a, b):
        return Tensor(out)

    def backward(g):
        if a.requires_grad:
            _acc(a, g @ b.data.T)
        if b.requires_grad:
            _acc(b, a.data.T @ g)
    return Tensor(out, True, (a, b), backward)


def concat(a, b, axis=1):
    out = np.concatenate([a.data, b.data], axis=axis)
    if not _track(a, b):
        return Tensor(out)
    split = a.data.shape[axis]

    def backward(g):
        ga, gb = np.split(g, [split], axis=axis)
        if a.requires_grad:
            _acc(a, ga)
        if b.requires_grad:
            _acc(b, gb)
    return Tensor(out, True, (a, b), backward)


def rows(a, lo, hi):
    """Row slice a[lo:hi]."""
    out = a.data[lo:hi]
    if not _track(a):
        return Tensor(out)

    def backward(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        a.grad[lo:hi] += g
    return Tensor(out, True, (a,), backward)


def cols(a, lo, hi):
    """Column slice a[:, lo:hi] (or a[lo:hi] on 1-d input)."""
    out = a.data[..., lo:hi]
    if not _track(a):
        return Tensor(out)

    def backward(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        a.grad[..., lo:hi] += g
    return Tensor(out, True, (a,), backward)


def gather_rows(a, indices):
    """Row lookup a[indices]; duplicate indices accumulate gradient."""
    idx = np.asarray(indices, dtype=np.intp)
    out = a.data[idx]
    if not _track(a):
        return Tensor(out)

    def backward(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        np.add.at(a.grad, idx, g)
    return Tensor(out, True, (a,), backward)


def stack_rows(parts):
    """Stack (1, d) tensors into an (n, d) tensor."""
    out = np.concatenate([p.data for p in parts], axis=0)
    if not _grad_enabled() or not any(p.requires_grad for p in parts):
        return Tensor(out)
    offsets = np.cumsum([0] + [p.data.shape[0] for p in parts])

    def backward(g):
        for part, lo, hi in zip(parts, offsets, offsets[1:]):
            if part.requires_grad:
                _acc(part, g[lo:hi])
    return Tensor(out, True, tuple(parts), backward)


def sum_rows(a):
    """Sum over rows, keeping a (1, d) shape."""
    out = a.data.sum(axis=0, keepdims=True)
    if not _track(a):
        return Tensor(out)

    def backward(g):
        _acc(a, np.broadcast_to(g, a.data.shape))
    return Tensor(out, True, (a,), backward)


def total(a):
    out = np.asarray(a.data.sum(), dtype=a.dtype)
    if not _track(a):
        return Tensor(out)

    def backward(g):
        _acc(a, np.broadcast_to(g, a.data.shape))
    return Tensor(out, True, (a,), backward)


def mean(a):
    out = np.asarray(a.data.mean(), dtype=a.dtype)
    if not _track(a):
        return Tensor(out)
    inv = 1.0 / a.data.size

    def backward(g):
        _acc(a, np.broadcast_to(g * inv, a.data.shape))
    return Tensor(out, True, (a,), backward)


def _sigmoid_array(x):
    # saturation clamp keeps exp() finite in float32
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def sigmoid(a):
    out = _sigmoid_array(a.data)
    if not _track(a):
        return Tensor(out)

    def backward(g):
        _acc(a, g * out * (1.0 - out))
    return Tensor(out, True, (a,), backward)


def tanh(a):
    out = np.tanh(a.data)
    if not _track(a):
        return Tensor(out)

    def backward(g):
        _acc(a, g * (1.0 - out * out))
    return Tensor(out, True, (a,), backward)


def relu(a):
    out = np.maximum(a.data, 0.0)
    if not _track(a):
        return Tensor(out)

    def backward(g):
        _acc(a, g * (a.data > 0))
    return Tensor(out, True, (a,), backward)


def softmax(a, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    out = exps / exps.sum(axis=axis, keepdims=True)
    if not _track(a):
        return Tensor(out)

    def backward(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        _acc(a, out * (g - inner))
    return Tensor(out, True, (a,), backward)


def dropout(a, rate, rng, training=True):
    """Inverted dropout; identity when not training or rate == 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    mask = (rng.random(a.shape) >= rate).astype(a.dtype) / (1.0 - rate)
    out = a.data * mask
    if not _track(a):
        return Tensor(out)

    def backward(g):
        _acc(a, g * mask)
    return Tensor(out, True, (a,), backward)


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def cross_entropy(logits, targets, reduction="sum"):
    """Softmax cross entropy; ``targets`` holds class indices per row."""
    z = logits.data
    if z.ndim != 2:
        raise ValueError(f"cross_entropy expects (n, classes) logits, got {z.shape}")
    targets = np.asarray(targets, dtype=np.intp)
    if not np.isfinite(z).all():
        raise ValueError("cross_entropy: non-finite logits")
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(targets)), targets]
    losses = logsum - picked
    factor = 1.0 / len(targets) if reduction == "mean" else 1.0
    out = np.asarray(losses.sum() * factor, dtype=z.dtype)
    if not _track(logits):
        return Tensor(out)

    def backward(g):
        probs = np.exp(shifted - logsum[:, None])
        probs[np.arange(len(targets)), targets] -= 1.0
        _acc(logits, probs * (g * factor))
    return Tensor(out, True, (logits,), backward)


def hinge_loss(scores, targets, reduction="sum"):
    """max(0, 1 - (2t - 1) * score) with targets in {0, 1}."""
    s = scores.data
    signs = (2.0 * np.asarray(targets, dtype=s.dtype) - 1.0).reshape(s.shape)
    margins = 1.0 - signs * s
    active = margins > 0
    factor = 1.0 / s.size if reduction == "mean" else 1.0
    out = np.asarray(np.where(active, margins, 0.0).sum() * factor, dtype=s.dtype)
    if not _track(scores):
        return Tensor(out)

    def backward(g):
        _acc(scores, (-signs * active) * (g * factor))
    return Tensor(out, True, (scores,), backward)


def bce_loss(probs, targets, reduction="sum"):
    """Binary cross entropy on probabilities in the open interval (0, 1)."""
    p = probs.data
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("bce_loss: probabilities must lie strictly in (0, 1)")
    t = np.asarray(targets, dtype=p.dtype).reshape(p.shape)
    losses = -(t * np.log(p) + (1.0 - t) * np.log1p(-p))
    factor = 1.0 / p.size if reduction == "mean" else 1.0
    out = np.asarray(losses.sum() * factor, dtype=p.dtype)
    if not _track(probs):
        return Tensor(out)

    def backward(g):
        _acc(probs, ((p - t) / (p * (1.0 - p))) * (g * factor))
    return Tensor(out, True, (probs,), backward)


def bce_with_logits(logits, targets, reduction="sum"):
    """Numerically stable sigmoid + binary cross entropy."""
    s = logits.data
    t = np.asarray(targets, dtype=s.dtype).reshape(s.shape)
    losses = np.maximum(s, 0.0) - s * t + np.log1p(np.exp(-np.abs(s)))
    factor = 1.0 / s.size if reduction == "mean" else 1.0
    out = np.asarray(losses.sum() * factor, dtype=s.dtype)
    if not _track(logits):
        return Tensor(out)

    def backward(g):
        _acc(logits, (_sigmoid_array(s) - t) * (g * factor))
    return Tensor(out, True, (logits,), backward)


# ---------------------------------------------------------------------------
# Recurrent and bilinear ops
# ---------------------------------------------------------------------------

def lstm_step(x_t, h_prev, c_prev, wx, wh, b):
    """One LSTM cell step from primitive ops; returns (h_t, c_t).

    Gate order in the fused projection is input, forget, output, cell,
    matching ``lstm_run``.
    """
    hidden = wh.shape[0]
    z = add(add(matmul(x_t, wx), matmul(h_prev, wh)), b)
    i = sigmoid(cols(z, 0, hidden))
    f = sigmoid(cols(z, hidden, 2 * hidden))
    o = sigmoid(cols(z, 2 * hidden, 3 * hidden))
    g = tanh(cols(z, 3 * hidden, 4 * hidden))
    c_t = add(mul(f, c_prev), mul(i, g))
    h_t = mul(o, tanh(c_t))
    return h_t, c_t


def lstm_run(x, wx, wh, b, reverse=False):
    """Run an LSTM over an (n, in) sequence; returns (n, hidden) states.

    Fused into a single graph node: the backward pass is hand-written
    backpropagation through time, with the input and parameter gradients
    batched across timesteps.  Gate layout is (input, forget, output, cell)
    so the three sigmoids evaluate in one call.
    """
    X = x.data
    n = X.shape[0]
    hidden = wh.data.shape[0]
    sig_end = 3 * hidden
    dtype = X.dtype
    pre = X @ wx.data + b.data  # (n, 4H)
    order = range(n - 1, -1, -1) if reverse else range(n)

    hs = np.zeros((n, hidden), dtype=dtype)
    gates = np.empty((n, 4 * hidden), dtype=dtype)  # sigmoided i,f,o then tanh g
    tc = np.empty((n, hidden), dtype=dtype)
    h_prev = np.zeros((n, hidden), dtype=dtype)
    c_prev = np.zeros((n, hidden), dtype=dtype)

    Wh = wh.data
    h = np.zeros(hidden, dtype=dtype)
    c = np.zeros(hidden, dtype=dtype)
    with np.errstate(over="ignore"):  # saturated sigmoids flush to 0 exactly
        for t in order:
            h_prev[t] = h
            c_prev[t] = c
            a = pre[t] + h @ Wh
            row = gates[t]
            row[:sig_end] = 1.0 / (1.0 + np.exp(-a[:sig_end]))
            row[sig_end:] = np.tanh(a[sig_end:])
            i, f, o, g = (row[:hidden], row[hidden:2 * hidden],
                          row[2 * hidden:sig_end], row[sig_end:])
            c = f * c + i * g
            t_c = np.tanh(c)
            h = o * t_c
            hs[t] = h
            tc[t] = t_c

    if not _track(x, wx, wh, b):
        return Tensor(hs)

    def backward(gout):
        gi = gates[:, :hidden]
        gf = gates[:, hidden:2 * hidden]
        go = gates[:, 2 * hidden:sig_end]
        gg = gates[:, sig_end:]
        # local derivatives are independent across time; batch them
        d_sig = gates[:, :sig_end] * (1.0 - gates[:, :sig_end])
        d_tanh_g = 1.0 - gg * gg
        d_tanh_c = go * (1.0 - tc * tc)
        dA = np.empty((n, 4 * hidden), dtype=dtype)
        dh_next = np.zeros(hidden, dtype=dtype)
        dc_next = np.zeros(hidden, dtype=dtype)
        WhT = Wh.T
        for t in reversed(order):
            dh = gout[t] + dh_next
            dc = dh * d_tanh_c[t] + dc_next
            row = dA[t]
            row[:hidden] = dc * gg[t]
            row[hidden:2 * hidden] = dc * c_prev[t]
            row[2 * hidden:sig_end] = dh * tc[t]
            row[:sig_end] *= d_sig[t]
            row[sig_end:] = dc * gi[t] * d_tanh_g[t]
            dh_next = row @ WhT
            dc_next = dc * gf[t]
        if x.requires_grad:
            _acc(x, dA @ wx.data.T)
        if wx.requires_grad:
            _acc(wx, X.T @ dA)
        if wh.requires_grad:
            _acc(wh, h_prev.T @ dA)
        if b.requires_grad:
            _acc(b, dA.sum(axis=0))
    return Tensor(hs, True, (x, wx, wh, b), backward)


def bilinear(x_left, x_right, weight):
    """Row-wise biaffine form out[m, k] = x_left[m]^T W_k x_right[m].

    ``x_left``/``x_right`` are (m, d), ``weight`` is (k, d, d).
    """
    xl = x_left.data
    xr = x_right.data
    out = np.einsum("kij,mi,mj->mk", weight.data, xl, xr)
    if not _track(x_left, x_right, weight):
        return Tensor(out)

    def backward(g):
        if weight.requires_grad:
            _acc(weight, np.einsum("mk,mi,mj->kij", g, xl, xr))
        if x_left.requires_grad:
            _acc(x_left, np.einsum("kij,mk,mj->mi", weight.data, g, xr))
        if x_right.requires_grad:
            _acc(x_right, np.einsum("kij,mk,mi->mj", weight.data, g, xl))
    return Tensor(out, True, (x_left, x_right, weight), backward)
