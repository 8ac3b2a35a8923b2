"""Minimal neural-network building blocks over numpy.

Every layer implements an explicit backward pass so gradients stay
inspectable and checkable against finite differences. Frozen modules still
propagate input gradients but never accumulate parameter gradients, which
keeps the "frozen weights receive exactly zero gradient" contract literal.

Convolutions dispatch to the selected kernel backend (see aai.kernels).
"""

import numpy as np

from . import kernels


class Param:
    """A trainable array plus its accumulated gradient."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


class Module:
    """Base for layers: ordered named parameters, freeze/thaw, state I/O."""

    def __init__(self):
        self.frozen = False
        self._params: dict[str, Param] = {}

    def add_param(self, name: str, value: np.ndarray) -> Param:
        p = Param(value)
        self._params[name] = p
        return p

    def named_params(self, prefix: str = "") -> list[tuple[str, Param]]:
        out = [(prefix + name, p) for name, p in self._params.items()]
        for attr, child in vars(self).items():
            if isinstance(child, Module):
                out.extend(child.named_params(prefix + attr + "."))
        return out

    def params(self) -> list[Param]:
        return [p for _, p in self.named_params()]

    def trainable_params(self) -> list[Param]:
        if self.frozen:
            return []
        out = list(self._params.values())
        for child in vars(self).values():
            if isinstance(child, Module):
                out.extend(child.trainable_params())
        return out

    def zero_grad(self):
        for p in self.params():
            p.grad[...] = 0.0

    def freeze(self):
        self.frozen = True
        for child in vars(self).values():
            if isinstance(child, Module):
                child.freeze()
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.named_params()}

    def load_state_dict(self, state: dict):
        mine = dict(self.named_params())
        missing = set(mine) - set(state)
        extra = set(state) - set(mine)
        if missing or extra:
            raise ValueError(f"state mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
        for name, p in mine.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.value.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {p.value.shape}")
            p.value[...] = arr
        return self


# ---------------------------------------------------------------------------
# activations / normalization (stateless function pairs)

def silu(x):
    s = 1.0 / (1.0 + np.exp(-x))
    return x * s


def silu_backward(x, dy):
    s = 1.0 / (1.0 + np.exp(-x))
    return dy * s * (1.0 + x * (1.0 - s))


def l2_normalize(x, axis=-1):
    norm = np.linalg.norm(x, axis=axis, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("cannot L2-normalize a zero vector")
    return x / norm


def l2_normalize_backward(x, dy, axis=-1):
    norm = np.linalg.norm(x, axis=axis, keepdims=True)
    y = x / norm
    return (dy - y * np.sum(dy * y, axis=axis, keepdims=True)) / norm


def softmax(x, axis=-1):
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(p, dp, axis=-1):
    # p = softmax(x); returns dx
    return p * (dp - np.sum(dp * p, axis=axis, keepdims=True))


# ---------------------------------------------------------------------------
# layers

class Conv2d(Module):
    def __init__(self, cin, cout, k=3, stride=1, pad=1, rng=None, w_scale=None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        scale = w_scale if w_scale is not None else np.sqrt(2.0 / (cin * k * k))
        self.w = self.add_param("w", rng.normal(0.0, scale, size=(cout, cin, k, k)))
        self.b = self.add_param("b", np.zeros(cout))
        self.k, self.stride, self.pad = k, stride, pad
        self._x = None

    def forward(self, x, train=False):
        if x.ndim != 4 or x.shape[1] != self.w.value.shape[1]:
            raise ValueError(f"expected [B,{self.w.value.shape[1]},H,W], got {x.shape}")
        if train:
            self._x = x
        return kernels.conv2d_forward(x, self.w.value, self.b.value, self.stride, self.pad)

    def backward(self, dy):
        x = self._x
        if not self.frozen:
            dw, db = kernels.conv2d_backward_weights(x, dy, self.k, self.k, self.stride, self.pad)
            self.w.grad += dw
            self.b.grad += db
        return kernels.conv2d_backward_input(dy, self.w.value, self.stride, self.pad,
                                             x.shape[2], x.shape[3])


class Linear(Module):
    def __init__(self, nin, nout, rng=None, w_scale=None, bias=True):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        scale = w_scale if w_scale is not None else np.sqrt(1.0 / nin)
        self.w = self.add_param("w", rng.normal(0.0, scale, size=(nin, nout)))
        self.b = self.add_param("b", np.zeros(nout)) if bias else None
        self._x = None

    def forward(self, x, train=False):
        if train:
            self._x = x
        y = x @ self.w.value
        if self.b is not None:
            y = y + self.b.value
        return y

    def backward(self, dy):
        if not self.frozen:
            x2 = self._x.reshape(-1, self._x.shape[-1])
            d2 = dy.reshape(-1, dy.shape[-1])
            self.w.grad += x2.T @ d2
            if self.b is not None:
                self.b.grad += d2.sum(axis=0)
        return dy @ self.w.value.T


class CrossAttention(Module):
    """Single-head cross-attention with a residual connection.

    Queries come from flattened spatial features [B, P, C]; keys and values
    from a token sequence [B, L, D]. An optional controller callable can
    rewrite the attention matrix at inference time (capture, injection,
    reweighting); backward assumes no controller was active.
    """

    def __init__(self, channels, token_dim, attn_dim, rng=None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.wq = Linear(channels, attn_dim, rng=rng, bias=False)
        self.wk = Linear(token_dim, attn_dim, rng=rng, bias=False)
        self.wv = Linear(token_dim, attn_dim, rng=rng, bias=False)
        self.wo = Linear(attn_dim, channels, rng=rng, bias=False)
        self.attn_dim = attn_dim
        self._cache = None

    def forward(self, x, tokens, train=False, controller=None):
        b, c, h, w = x.shape
        xf = x.reshape(b, c, h * w).transpose(0, 2, 1)  # [B, P, C]
        q = self.wq.forward(xf, train)
        k = self.wk.forward(tokens, train)
        v = self.wv.forward(tokens, train)
        scores = q @ k.transpose(0, 2, 1) / np.sqrt(self.attn_dim)
        attn = softmax(scores, axis=-1)
        if controller is not None:
            if train:
                raise RuntimeError("attention controllers are inference-only")
            attn = controller(attn)
        o = attn @ v
        y = self.wo.forward(o, train)
        if train:
            self._cache = (xf, q, k, v, attn, o)
        out = xf + y
        return out.transpose(0, 2, 1).reshape(b, c, h, w), attn

    def backward(self, dout):
        b, c, h, w = dout.shape
        d = dout.reshape(b, c, h * w).transpose(0, 2, 1)  # [B, P, C]
        xf, q, k, v, attn, o = self._cache
        do = self.wo.backward(d)
        dattn = do @ v.transpose(0, 2, 1)
        dv = attn.transpose(0, 2, 1) @ do
        dscores = softmax_backward(attn, dattn) / np.sqrt(self.attn_dim)
        dq = dscores @ k
        dk = dscores.transpose(0, 2, 1) @ q
        dxf = self.wq.backward(dq) + d  # residual path
        dtokens = self.wk.backward(dk) + self.wv.backward(dv)
        dx = dxf.transpose(0, 2, 1).reshape(b, c, h, w)
        return dx, dtokens


def upsample2x(x):
    return x.repeat(2, axis=2).repeat(2, axis=3)


def upsample2x_backward(dy):
    b, c, h, w = dy.shape
    return dy.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def timestep_embedding(t, dim):
    """Sinusoidal embedding of integer timesteps, [B, dim]."""
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    ang = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


# ---------------------------------------------------------------------------
# optimizer

class AdamW:
    """Adam with decoupled weight decay (wd=0 gives plain Adam)."""

    def __init__(self, params, lr, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.lr, self.eps, self.weight_decay = lr, eps, weight_decay
        self.b1, self.b2 = betas
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.value
            p.value -= self.lr * update

    def zero_grad(self):
        for p in self.params:
            p.grad[...] = 0.0
