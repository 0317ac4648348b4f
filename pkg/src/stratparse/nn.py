"""Parameter management, layer primitives, Adam, and checkpoint files."""

from __future__ import annotations

import json
import struct

import numpy as np

from . import autodiff as ad


def uniform_init(shape, fan_in, rng, dtype=np.float32):
    """uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class ParamStore:
    """Named trainable tensors; names are unique slash-separated paths."""

    def __init__(self, dtype=np.float32):
        self.dtype = dtype
        self._params = {}

    def create(self, name, shape, fan_in, rng, trainable=True):
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        data = uniform_init(shape, fan_in, rng, self.dtype)
        param = ad.Tensor(data, requires_grad=trainable)
        self._params[name] = param
        return param

    def add(self, name, data, trainable=True):
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        param = ad.Tensor(np.asarray(data, dtype=self.dtype), requires_grad=trainable)
        self._params[name] = param
        return param

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def named(self):
        return sorted(self._params.items())

    def trainable(self):
        return [(n, p) for n, p in self.named() if p.requires_grad]

    def zero_grad(self):
        for _, param in self._params.items():
            param.grad = None

    def scale_grads(self, factor):
        for _, param in self._params.items():
            if param.grad is not None:
                param.grad *= factor

    def state_dict(self):
        return {name: param.data.copy() for name, param in self.named()}

    def load_state(self, arrays):
        for name, param in self._params.items():
            if name not in arrays:
                raise KeyError(f"checkpoint is missing parameter {name}")
            loaded = np.asarray(arrays[name], dtype=param.data.dtype)
            if loaded.shape != param.data.shape:
                raise ValueError(f"{name}: checkpoint shape {loaded.shape} "
                                 f"!= model shape {param.data.shape}")
            param.data = loaded.copy()

    @property
    def size(self):
        return sum(int(np.prod(p.data.shape)) for _, p in self.named())


class Dense:
    def __init__(self, store, name, in_dim, out_dim, rng):
        self.w = store.create(f"{name}/w", (in_dim, out_dim), in_dim, rng)
        self.b = store.create(f"{name}/b", (out_dim,), in_dim, rng)

    def __call__(self, x):
        return ad.add(ad.matmul(x, self.w), self.b)


class LSTM:
    """Single-direction LSTM; ``run`` is the fused whole-sequence op."""

    def __init__(self, store, name, in_dim, hidden, rng):
        self.hidden = hidden
        self.wx = store.create(f"{name}/wx", (in_dim, 4 * hidden), in_dim, rng)
        self.wh = store.create(f"{name}/wh", (hidden, 4 * hidden), hidden, rng)
        self.b = store.create(f"{name}/b", (4 * hidden,), in_dim + hidden, rng)

    def run(self, x, reverse=False):
        return ad.lstm_run(x, self.wx, self.wh, self.b, reverse=reverse)

    def step(self, x_t, h_prev, c_prev):
        return ad.lstm_step(x_t, h_prev, c_prev, self.wx, self.wh, self.b)


class BiLSTM:
    """Forward and backward LSTMs over one sequence.

    Returns the two directional state matrices separately; ``concat``
    glues them into the usual (n, 2*hidden) representation.
    """

    def __init__(self, store, name, in_dim, hidden, rng):
        self.fwd = LSTM(store, f"{name}/fwd", in_dim, hidden, rng)
        self.bwd = LSTM(store, f"{name}/bwd", in_dim, hidden, rng)

    def __call__(self, x):
        if x.shape[0] == 0:
            raise ValueError("BiLSTM on an empty sequence")
        return self.fwd.run(x), self.bwd.run(x, reverse=True)

    def concat(self, x):
        hf, hb = self(x)
        return ad.concat(hf, hb, axis=1)


class StackedBiLSTM:
    """``depth`` BiLSTM layers mapping in_dim to out_dim (out_dim is even);
    depth 0 degenerates to a single dense projection."""

    def __init__(self, store, name, in_dim, out_dim, depth, rng):
        self.depth = depth
        self.layers = []
        self.projection = None
        if depth == 0:
            self.projection = Dense(store, f"{name}/proj", in_dim, out_dim, rng)
            return
        if out_dim % 2:
            raise ValueError("stacked BiLSTM output size must be even")
        for layer in range(depth):
            self.layers.append(BiLSTM(store, f"{name}/{layer}",
                                      in_dim if layer == 0 else out_dim,
                                      out_dim // 2, rng))

    def __call__(self, x, drop_rate=0.0, rng=None, training=False):
        if self.projection is not None:
            return self.projection(x)
        out = x
        for layer in self.layers:
            out = layer.concat(out)
            if training and drop_rate > 0.0:
                out = ad.dropout(out, drop_rate, rng, training=True)
        return out


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

def adam_update(values, grad, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam update with bias correction; returns ``values``."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    values -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return values


class Adam:
    def __init__(self, store, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        self.t += 1
        for name, param in self.store.trainable():
            if param.grad is None:
                continue
            if name not in self._m:
                self._m[name] = np.zeros_like(param.data, dtype=np.float64)
                self._v[name] = np.zeros_like(param.data, dtype=np.float64)
            updated = adam_update(param.data.astype(np.float64), param.grad,
                                  self._m[name], self._v[name], self.t,
                                  lr, self.beta1, self.beta2, self.eps)
            param.data = updated.astype(param.data.dtype)

    def zero_grad(self):
        self.store.zero_grad()


# ---------------------------------------------------------------------------
# Checkpoint container
# ---------------------------------------------------------------------------
# Layout: 8-byte magic, uint32 version, uint32 header length, UTF-8 JSON
# header, then the little-endian float32 payloads concatenated in header
# order.  The header lists every parameter name and shape and carries the
# model configuration and vocabularies.

CHECKPOINT_MAGIC = b"STRATCKP"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, arrays, config=None, extra=None):
    entries = [{"name": name, "shape": list(np.asarray(a).shape)}
               for name, a in sorted(arrays.items())]
    header = {"params": entries, "config": config or {}, "extra": extra or {}}
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        handle.write(blob)
        for name, _ in sorted(arrays.items()):
            handle.write(np.ascontiguousarray(arrays[name], dtype="<f4").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as handle:
        magic = handle.read(8)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, blob_len = struct.unpack("<II", handle.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(handle.read(blob_len).decode("utf-8"))
        arrays = {}
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = handle.read(4 * count)
            if len(buf) != 4 * count:
                raise ValueError(f"{path}: truncated payload at {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
    return arrays, header.get("config", {}), header.get("extra", {})
