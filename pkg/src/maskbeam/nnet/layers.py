"""Forward-pass primitives for the mask estimator (numpy, float64).

All layers operate on arrays whose last axis is the feature dimension; any
leading axes are treated as batch. Attention runs over the second-to-last
axis.
"""

import numpy as np

LN_EPS = 1e-5


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def swish(x):
    return x * sigmoid(x)


def relu(x):
    return np.maximum(x, 0.0)


def softmax(x, axis=-1):
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def layer_norm(x, gain, bias, eps=LN_EPS):
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * gain + bias


def linear(x, weight, bias=None):
    """x (..., in) -> (..., out) with weight (out, in)."""
    y = x @ weight.T
    if bias is not None:
        y = y + bias
    return y


def multi_head_self_attention(x, wq, wk, wv, wo, bq, bk, bv, bo, num_heads,
                              return_weights=False):
    """Scaled dot-product self-attention over the token axis (-2).

    x has shape (..., T, width); width must be divisible by num_heads.
    """
    width = x.shape[-1]
    if width % num_heads != 0:
        raise ValueError(f"width {width} not divisible by {num_heads} heads")
    head_dim = width // num_heads
    tokens = x.shape[-2]
    lead = x.shape[:-2]

    def split(v):
        return v.reshape(*lead, tokens, num_heads, head_dim)

    q = split(linear(x, wq, bq))
    k = split(linear(x, wk, bk))
    v = split(linear(x, wv, bv))
    scores = np.einsum("...qhd,...khd->...hqk", q, k) / np.sqrt(head_dim)
    weights = softmax(scores, axis=-1)
    ctx = np.einsum("...hqk,...khd->...qhd", weights, v)
    out = linear(ctx.reshape(*lead, tokens, width), wo, bo)
    if return_weights:
        return out, weights
    return out


def depthwise_conv(x, kernel, bias=None):
    """Per-feature 1-D convolution over the token axis with same padding.

    kernel has shape (width, kernel_size); kernel_size must be odd.
    """
    width, ksize = kernel.shape
    if ksize % 2 != 1:
        raise ValueError("depthwise kernel size must be odd")
    half = ksize // 2
    pad = [(0, 0)] * (x.ndim - 2) + [(half, half), (0, 0)]
    padded = np.pad(x, pad)
    windows = np.lib.stride_tricks.sliding_window_view(padded, ksize, axis=-2)
    out = np.einsum("...thk,hk->...th", windows, kernel)
    if bias is not None:
        out = out + bias
    return out


def _mhsa_from_store(x, store, prefix, num_heads):
    return multi_head_self_attention(
        x,
        store[f"{prefix}.wq.weight"], store[f"{prefix}.wk.weight"],
        store[f"{prefix}.wv.weight"], store[f"{prefix}.wo.weight"],
        store[f"{prefix}.wq.bias"], store[f"{prefix}.wk.bias"],
        store[f"{prefix}.wv.bias"], store[f"{prefix}.wo.bias"],
        num_heads,
    )


def _feed_forward(x, store, prefix):
    y = layer_norm(x, store[f"{prefix}.norm.gain"], store[f"{prefix}.norm.bias"])
    y = swish(linear(y, store[f"{prefix}.lin1.weight"], store[f"{prefix}.lin1.bias"]))
    return linear(y, store[f"{prefix}.lin2.weight"], store[f"{prefix}.lin2.bias"])


def _conv_module(x, store, prefix):
    y = layer_norm(x, store[f"{prefix}.norm.gain"], store[f"{prefix}.norm.bias"])
    y = linear(y, store[f"{prefix}.pw1.weight"], store[f"{prefix}.pw1.bias"])
    a, b = np.split(y, 2, axis=-1)
    y = a * sigmoid(b)  # gated linear unit
    y = depthwise_conv(y, store[f"{prefix}.dw.weight"], store[f"{prefix}.dw.bias"])
    y = layer_norm(y, store[f"{prefix}.mid_norm.gain"], store[f"{prefix}.mid_norm.bias"])
    y = swish(y)
    return linear(y, store[f"{prefix}.pw2.weight"], store[f"{prefix}.pw2.bias"])


def conformer_layer(x, store, prefix, num_heads):
    """Single Conformer layer: two half-step feed-forwards sandwiching
    self-attention over frames and a depthwise convolution module."""
    x = x + 0.5 * _feed_forward(x, store, f"{prefix}.ffn1")
    att_in = layer_norm(
        x, store[f"{prefix}.attn.norm.gain"], store[f"{prefix}.attn.norm.bias"]
    )
    x = x + _mhsa_from_store(att_in, store, f"{prefix}.attn", num_heads)
    x = x + _conv_module(x, store, f"{prefix}.conv")
    x = x + 0.5 * _feed_forward(x, store, f"{prefix}.ffn2")
    return layer_norm(x, store[f"{prefix}.norm.gain"], store[f"{prefix}.norm.bias"])


def temporal_block(x, store, prefix, num_layers, num_heads):
    """Stack of Conformer layers over the frame axis; shape-preserving.

    x has shape (..., N, hidden) and is processed independently along any
    leading (channel) axes.
    """
    if x.shape[-2] == 0:
        raise ValueError("temporal block requires at least one frame")
    for layer in range(num_layers):
        x = conformer_layer(x, store, f"{prefix}.layer{layer}", num_heads)
    return x


def register_linear(store, prefix, out_dim, in_dim, bias=True):
    store.add_uniform(f"{prefix}.weight", (out_dim, in_dim))
    if bias:
        store.add_constant(f"{prefix}.bias", (out_dim,), 0.0)


def register_norm(store, prefix, dim):
    store.add_constant(f"{prefix}.gain", (dim,), 1.0)
    store.add_constant(f"{prefix}.bias", (dim,), 0.0)


def register_mhsa(store, prefix, width):
    for name in ("wq", "wk", "wv", "wo"):
        register_linear(store, f"{prefix}.{name}", width, width)


def register_conformer_layer(store, prefix, hidden, conv_kernel, ffn_expansion=4):
    inner = hidden * ffn_expansion
    for ffn in ("ffn1", "ffn2"):
        register_norm(store, f"{prefix}.{ffn}.norm", hidden)
        register_linear(store, f"{prefix}.{ffn}.lin1", inner, hidden)
        register_linear(store, f"{prefix}.{ffn}.lin2", hidden, inner)
    register_norm(store, f"{prefix}.attn.norm", hidden)
    register_mhsa(store, f"{prefix}.attn", hidden)
    register_norm(store, f"{prefix}.conv.norm", hidden)
    register_linear(store, f"{prefix}.conv.pw1", 2 * hidden, hidden)
    store.add_uniform(f"{prefix}.conv.dw.weight", (hidden, conv_kernel))
    store.add_constant(f"{prefix}.conv.dw.bias", (hidden,), 0.0)
    register_norm(store, f"{prefix}.conv.mid_norm", hidden)
    register_linear(store, f"{prefix}.conv.pw2", hidden, hidden)
    register_norm(store, f"{prefix}.norm", hidden)
