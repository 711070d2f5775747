"""Numpy layer primitives with explicit forward caches and backward passes.

Everything runs in float64 on unbatched (sequence, feature) arrays; batching
happens one sample at a time in the training loop. Backward functions return
input gradients and accumulate parameter gradients into one flat dict keyed
by parameter name, shared across the whole network.
"""

from __future__ import annotations

import numpy as np

_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_A = 0.044715


def accumulate(grads: dict[str, np.ndarray], name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value.copy()


def linear_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    return x @ w + b, (x, w)


def linear_bwd(dy, cache, grads, w_name: str, b_name: str):
    x, w = cache
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    accumulate(grads, w_name, x2.T @ dy2)
    accumulate(grads, b_name, dy2.sum(axis=0))
    return dy @ w.T


def layernorm_fwd(x: np.ndarray, g: np.ndarray, b: np.ndarray, eps: float = 1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def layernorm_bwd(dy, cache, grads, prefix: str):
    xhat, inv, g = cache
    flat_hat = xhat.reshape(-1, xhat.shape[-1])
    flat_dy = dy.reshape(-1, dy.shape[-1])
    accumulate(grads, prefix + ".g", (flat_dy * flat_hat).sum(axis=0))
    accumulate(grads, prefix + ".b", flat_dy.sum(axis=0))
    dxhat = dy * g
    mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
    mean_dxhat_xhat = (dxhat * xhat).mean(axis=-1, keepdims=True)
    return inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)


def gelu_fwd(x: np.ndarray):
    inner = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(inner)
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_bwd(dy, cache):
    x, t = cache
    dinner = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner)


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    length, width = x.shape
    return x.reshape(length, n_heads, width // n_heads).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    n_heads, length, head_dim = x.shape
    return x.transpose(1, 0, 2).reshape(length, n_heads * head_dim)


def mha_fwd(
    x_q: np.ndarray,
    x_kv: np.ndarray,
    p: dict[str, np.ndarray],
    prefix: str,
    n_heads: int,
    causal: bool,
):
    """Multi-head attention: queries from x_q, keys/values from x_kv."""
    q, _ = linear_fwd(x_q, p[prefix + ".wq"], p[prefix + ".bq"])
    k, _ = linear_fwd(x_kv, p[prefix + ".wk"], p[prefix + ".bk"])
    v, _ = linear_fwd(x_kv, p[prefix + ".wv"], p[prefix + ".bv"])
    qh, kh, vh = (_split_heads(a, n_heads) for a in (q, k, v))
    head_dim = qh.shape[-1]
    scale = 1.0 / np.sqrt(head_dim)
    scores = qh @ kh.transpose(0, 2, 1) * scale
    if causal:
        lq, lk = scores.shape[1], scores.shape[2]
        scores = np.where(np.tril(np.ones((lq, lk), dtype=bool)), scores, -np.inf)
    probs = softmax(scores)
    oh = probs @ vh
    merged = _merge_heads(oh)
    out, _ = linear_fwd(merged, p[prefix + ".wo"], p[prefix + ".bo"])
    cache = (x_q, x_kv, qh, kh, vh, probs, merged, scale, p, prefix)
    return out, cache


def mha_bwd(dout, cache, grads):
    x_q, x_kv, qh, kh, vh, probs, merged, scale, p, prefix = cache
    n_heads = qh.shape[0]

    dmerged = linear_bwd(dout, (merged, p[prefix + ".wo"]), grads, prefix + ".wo", prefix + ".bo")
    doh = _split_heads(dmerged, n_heads)
    dprobs = doh @ vh.transpose(0, 2, 1)
    dvh = probs.transpose(0, 2, 1) @ doh
    dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
    dqh = dscores @ kh * scale
    dkh = dscores.transpose(0, 2, 1) @ qh * scale

    dq, dk, dv = (_merge_heads(a) for a in (dqh, dkh, dvh))
    dx_q = linear_bwd(dq, (x_q, p[prefix + ".wq"]), grads, prefix + ".wq", prefix + ".bq")
    dx_kv = linear_bwd(dk, (x_kv, p[prefix + ".wk"]), grads, prefix + ".wk", prefix + ".bk")
    dx_kv += linear_bwd(dv, (x_kv, p[prefix + ".wv"]), grads, prefix + ".wv", prefix + ".bv")
    return dx_q, dx_kv


def mlp_fwd(x: np.ndarray, p: dict[str, np.ndarray], prefix: str):
    h1, c1 = linear_fwd(x, p[prefix + ".w1"], p[prefix + ".b1"])
    a, c2 = gelu_fwd(h1)
    out, c3 = linear_fwd(a, p[prefix + ".w2"], p[prefix + ".b2"])
    return out, (c1, c2, c3, prefix)


def mlp_bwd(dout, cache, grads):
    c1, c2, c3, prefix = cache
    da = linear_bwd(dout, c3, grads, prefix + ".w2", prefix + ".b2")
    dh1 = gelu_bwd(da, c2)
    return linear_bwd(dh1, c1, grads, prefix + ".w1", prefix + ".b1")


def block_fwd(x: np.ndarray, x_kv: np.ndarray | None, p, prefix: str, n_heads: int, causal: bool):
    """Pre-LN transformer block; cross-attends to x_kv when provided."""
    a_in, ln1_cache = layernorm_fwd(x, p[prefix + ".ln1.g"], p[prefix + ".ln1.b"])
    kv = a_in if x_kv is None else x_kv
    a_out, attn_cache = mha_fwd(a_in, kv, p, prefix + ".attn", n_heads, causal)
    x2 = x + a_out
    m_in, ln2_cache = layernorm_fwd(x2, p[prefix + ".ln2.g"], p[prefix + ".ln2.b"])
    m_out, mlp_cache = mlp_fwd(m_in, p, prefix + ".mlp")
    out = x2 + m_out
    return out, (ln1_cache, attn_cache, ln2_cache, mlp_cache, x_kv is None, prefix)


def block_bwd(dout, cache, grads):
    """Returns (dx, dx_kv); dx_kv is None for self-attention blocks."""
    ln1_cache, attn_cache, ln2_cache, mlp_cache, self_attn, prefix = cache
    dm_in = mlp_bwd(dout, mlp_cache, grads)
    dx2 = dout + layernorm_bwd(dm_in, ln2_cache, grads, prefix + ".ln2")
    da_in, dkv = mha_bwd(dx2, attn_cache, grads)
    if self_attn:
        dx = dx2 + layernorm_bwd(da_in + dkv, ln1_cache, grads, prefix + ".ln1")
        return dx, None
    dx = dx2 + layernorm_bwd(da_in, ln1_cache, grads, prefix + ".ln1")
    return dx, dkv
