"""Network building blocks on the autodiff core: linear, layer norm,
multi-head attention, transformer layers, and plain MLPs."""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class Module:
    def parameters(self):
        out = []
        for value in self.__dict__.values():
            if isinstance(value, Tensor) and value.requires_grad:
                out.append(value)
            elif isinstance(value, Module):
                out.extend(value.parameters())
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        out.extend(item.parameters())
                    elif isinstance(item, Tensor) and item.requires_grad:
                        out.append(item)
        return out

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def state_arrays(self):
        """Named parameter arrays, in deterministic traversal order."""
        return {f"p{i}": p.data for i, p in enumerate(self.parameters())}

    def load_state_arrays(self, arrays):
        params = self.parameters()
        if len(arrays) != len(params):
            raise ValueError(f"parameter count mismatch: {len(arrays)} vs {len(params)}")
        for i, p in enumerate(params):
            src = arrays[f"p{i}"]
            if src.shape != p.data.shape:
                raise ValueError(f"shape mismatch at p{i}: {src.shape} vs {p.data.shape}")
            p.data = np.array(src, dtype=np.float64)


def parameter(data):
    return Tensor(data, requires_grad=True)


class Linear(Module):
    def __init__(self, n_in, n_out, rng, bias=True, scale=1.0):
        bound = scale * math.sqrt(6.0 / (n_in + n_out))
        self.W = parameter(rng.uniform(-bound, bound, size=(n_in, n_out)))
        self.b = parameter(np.zeros(n_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ad.linear(x, self.W, self.b)


class LayerNorm(Module):
    def __init__(self, dim, eps=1e-5):
        self.gamma = parameter(np.ones(dim))
        self.beta = parameter(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ad.layer_norm(x, self.gamma, self.beta, self.eps)


class MultiHeadAttention(Module):
    """Scaled dot-product attention; self- or cross- depending on inputs."""

    def __init__(self, d_model, n_heads, rng):
        assert d_model % n_heads == 0
        self.d_model = d_model
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.wq = Linear(d_model, d_model, rng)
        self.wk = Linear(d_model, d_model, rng)
        self.wv = Linear(d_model, d_model, rng)
        self.wo = Linear(d_model, d_model, rng)

    def _split(self, x: Tensor, batch, seq):
        return x.reshape(batch, seq, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def __call__(self, query: Tensor, memory: Tensor | None = None) -> Tensor:
        memory = query if memory is None else memory
        b, tq, _ = query.shape
        tk = memory.shape[1]
        q = self._split(self.wq(query), b, tq)
        k = self._split(self.wk(memory), b, tk)
        v = self._split(self.wv(memory), b, tk)
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(self.d_head))
        attn = ad.softmax(scores, axis=-1)
        mixed = (attn @ v).transpose(0, 2, 1, 3).reshape(b, tq, self.d_model)
        return self.wo(mixed)


class FeedForward(Module):
    def __init__(self, d_model, d_ff, rng):
        self.lin1 = Linear(d_model, d_ff, rng)
        self.lin2 = Linear(d_ff, d_model, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.lin2(ad.relu(self.lin1(x)))


class TransformerEncoderLayer(Module):
    def __init__(self, d_model, n_heads, d_ff, rng):
        self.attn = MultiHeadAttention(d_model, n_heads, rng)
        self.ff = FeedForward(d_model, d_ff, rng)
        self.norm1 = LayerNorm(d_model)
        self.norm2 = LayerNorm(d_model)

    def __call__(self, x: Tensor) -> Tensor:
        x = self.norm1(x + self.attn(x))
        return self.norm2(x + self.ff(x))


class TransformerCrossLayer(Module):
    def __init__(self, d_model, n_heads, d_ff, rng):
        self.attn = MultiHeadAttention(d_model, n_heads, rng)
        self.ff = FeedForward(d_model, d_ff, rng)
        self.norm1 = LayerNorm(d_model)
        self.norm2 = LayerNorm(d_model)

    def __call__(self, x: Tensor, memory: Tensor) -> Tensor:
        x = self.norm1(x + self.attn(x, memory))
        return self.norm2(x + self.ff(x))


class MLP(Module):
    def __init__(self, sizes, rng, out_scale=1.0):
        self.layers = [
            Linear(sizes[i], sizes[i + 1], rng, scale=out_scale if i == len(sizes) - 2 else 1.0)
            for i in range(len(sizes) - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            x = ad.relu(layer(x))
        return self.layers[-1](x)
