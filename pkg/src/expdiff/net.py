"""Dense SiLU network with a sinusoidal time embedding and hand-written backprop.

The network maps (x, t) to an output vector. Inputs are the concatenation of
x and ``time_embed(t)``. Both the parameter gradient and the input gradient
(vector-Jacobian product) are computed by an explicit reverse pass, so no
autodiff library is needed.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ExpDiffError

TIME_SCALE = 1000.0
FREQ_BASE = 10000.0
MAGIC = b"EXPDIFF1"


def time_embed(t, length=64):
    """Interleaved (sin, cos) features of 1000 t at geometric frequencies.

    Returns shape ``(length,)`` for scalar t and ``(B, length)`` for a vector.
    """
    if length <= 0 or length % 2:
        raise ConfigError(f"time embedding length must be a positive even number, got {length}")
    t = np.asarray(t, dtype=float)
    k = np.arange(length // 2)
    omega = FREQ_BASE ** (-2.0 * k / length)
    arg = TIME_SCALE * t[..., None] * omega
    out = np.empty(t.shape + (length,))
    out[..., 0::2] = np.sin(arg)
    out[..., 1::2] = np.cos(arg)
    return out


def _silu(z):
    s = 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free logistic
    return z * s, s


def _silu_grad(z, s):
    return s * (1.0 + z * (1.0 - s))


@dataclass
class DenseNetwork:
    input_dim: int
    output_dim: int
    hidden: tuple = (96,) * 6
    time_embed_len: int = 64
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ConfigError("network dimensions must be positive")
        if self.time_embed_len % 2:
            raise ConfigError("time embedding length must be even")
        if not self.weights:
            sizes = self.layer_sizes
            self.weights = [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
            self.biases = [np.zeros(b) for b in sizes[1:]]
        self._check_shapes()

    @property
    def layer_sizes(self):
        return [self.input_dim + self.time_embed_len, *self.hidden, self.output_dim]

    @property
    def n_params(self):
        s = self.layer_sizes
        return sum(a * b + b for a, b in zip(s[:-1], s[1:]))

    @property
    def params(self):
        """Flat list [W0, b0, W1, b1, ...]; arrays are shared, not copied."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def _check_shapes(self):
        s = self.layer_sizes
        if len(self.weights) != len(s) - 1 or len(self.biases) != len(s) - 1:
            raise ConfigError("layer count does not match architecture")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (s[i], s[i + 1]) or b.shape != (s[i + 1],):
                raise ConfigError(f"layer {i} has shape {w.shape}/{b.shape}, expected {(s[i], s[i + 1])}")

    def copy(self):
        return DenseNetwork(
            self.input_dim, self.output_dim, self.hidden, self.time_embed_len,
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], dict(self.meta),
        )

    # -- evaluation -----------------------------------------------------------
    def _inputs(self, x, t):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x2 = x[None, :] if single else x
        if x2.ndim != 2 or x2.shape[1] != self.input_dim:
            raise ConfigError(f"expected input of width {self.input_dim}, got shape {x.shape}")
        t = np.broadcast_to(np.asarray(t, dtype=float), (x2.shape[0],))
        return single, np.concatenate([x2, time_embed(t, self.time_embed_len)], axis=1)

    def forward_cached(self, x, t):
        """Forward pass keeping activations for :meth:`backward`."""
        single, h = self._inputs(x, t)
        acts, pre, gates = [h], [], []
        n = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i < n - 1:
                h, s = _silu(z)
                pre.append(z)
                gates.append(s)
                acts.append(h)
            else:
                h = z
        cache = (single, acts, pre, gates)
        return (h[0] if single else h), cache

    def forward(self, x, t):
        return self.forward_cached(x, t)[0]

    __call__ = forward

    def backward(self, cache, g_out, need_params=True):
        """Reverse pass for cotangent ``g_out``; returns (param grads, input grad)."""
        single, acts, pre, gates = cache
        g = np.asarray(g_out, dtype=float)
        g = g[None, :] if single else g
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            if need_params:
                grads[2 * i] = acts[i].T @ g
                grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * _silu_grad(pre[i - 1], gates[i - 1])
        gx = g[:, : self.input_dim]
        return (grads if need_params else None), (gx[0] if single else gx)


def forward(net: DenseNetwork, x, t):
    return net.forward(x, t)


def grad_input(net: DenseNetwork, x, t, cotangent):
    """Vector-Jacobian product cotangent^T d net(x, t) / dx."""
    _, cache = net.forward_cached(x, t)
    return net.backward(cache, cotangent, need_params=False)[1]


def grad_params(net: DenseNetwork, x, t, loss_fn):
    """Loss value and parameter gradients for ``loss_fn(out) -> (loss, dloss/dout)``."""
    out, cache = net.forward_cached(x, t)
    loss, g_out = loss_fn(out)
    grads, _ = net.backward(cache, g_out)
    return loss, grads


def init(net: DenseNetwork, rng):
    """Kaiming-uniform weights (fan-in scaling) and zero biases, in place."""
    n = len(net.weights)
    for i, w in enumerate(net.weights):
        gain = 2.0 if i < n - 1 else 1.0
        bound = math.sqrt(3.0 * gain / w.shape[0])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
        net.biases[i][...] = 0.0
    return net


def make_network(input_dim, output_dim, rng, hidden=(96,) * 6, time_embed_len=64):
    return init(DenseNetwork(input_dim, output_dim, hidden, time_embed_len), rng)


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_network(cls, net, lr, **kw):
        p = net.params
        return cls(lr, m=[np.zeros_like(a) for a in p], v=[np.zeros_like(a) for a in p], **kw)


def adam_step(state: AdamState, net: DenseNetwork, grads):
    """One in-place Adam update of ``net``'s parameters."""
    params = net.params
    if len(grads) != len(params):
        raise ConfigError("gradient list does not match parameters")
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return net, state


# -- weight files ----------------------------------------------------------
def save(net: DenseNetwork, path):
    """Write ``MAGIC | uint32 header length | JSON header | float64 LE parameters``."""
    header = {
        "version": 1,
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "hidden": list(net.hidden),
        "time_embed_len": net.time_embed_len,
        "meta": net.meta,
    }
    raw = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for p in net.params:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load(path) -> DenseNetwork:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise ExpDiffError(f"{path} is not a weight file")
    (n,) = struct.unpack("<I", blob[8:12])
    header = json.loads(blob[12 : 12 + n])
    if header.get("version") != 1:
        raise ExpDiffError(f"unsupported weight file version {header.get('version')}")
    net = DenseNetwork(header["input_dim"], header["output_dim"], tuple(header["hidden"]),
                       header["time_embed_len"], meta=header["meta"])
    data = np.frombuffer(blob, dtype="<f8", offset=12 + n)
    if data.size != net.n_params:
        raise ExpDiffError(f"{path}: expected {net.n_params} parameters, found {data.size}")
    pos = 0
    for p in net.params:
        p[...] = data[pos : pos + p.size].reshape(p.shape)
        pos += p.size
    return net
