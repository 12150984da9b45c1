"""Cross-channel blocks: transform/attend/concatenate layers and the
permutation-invariant channel reductions.

Channel streams are stacked on the leading axis: x has shape (M, N, hidden).
"""

import numpy as np

from .layers import linear, multi_head_self_attention, register_linear, register_mhsa, relu, softmax


def channel_block_tac(x, store, prefix):
    """Transform-average-concatenate: per-channel transform concatenated
    with the broadcast cross-channel average of a second transform."""
    if x.shape[0] < 1:
        raise ValueError("need at least one channel")
    local = relu(linear(x, store[f"{prefix}.wc.weight"], store[f"{prefix}.wc.bias"]))
    pooled = relu(linear(x, store[f"{prefix}.wa.weight"], store[f"{prefix}.wa.bias"]))
    shared = np.broadcast_to(pooled.mean(axis=0, keepdims=True), pooled.shape)
    return np.concatenate([local, shared], axis=-1)


def channel_block_attend(x, store, prefix, num_heads):
    """Transform-attend-concatenate: the average pathway of the TAC block is
    replaced by multi-head self-attention across channels within each frame."""
    if x.shape[0] < 1:
        raise ValueError("need at least one channel")
    local = relu(linear(x, store[f"{prefix}.wc.weight"], store[f"{prefix}.wc.bias"]))
    attend_in = relu(linear(x, store[f"{prefix}.wa.weight"], store[f"{prefix}.wa.bias"]))
    # tokens = channels: (M, N, K) -> (N, M, K), attend over M, and back
    attended = multi_head_self_attention(
        attend_in.transpose(1, 0, 2),
        store[f"{prefix}.attn.wq.weight"], store[f"{prefix}.attn.wk.weight"],
        store[f"{prefix}.attn.wv.weight"], store[f"{prefix}.attn.wo.weight"],
        store[f"{prefix}.attn.wq.bias"], store[f"{prefix}.attn.wk.bias"],
        store[f"{prefix}.attn.wv.bias"], store[f"{prefix}.attn.wo.bias"],
        num_heads,
    ).transpose(1, 0, 2)
    return np.concatenate([local, attended], axis=-1)


def channel_reduce_mean(x):
    """Arithmetic mean over channel streams: (M, N, hidden) -> (N, hidden)."""
    if x.shape[0] < 1:
        raise ValueError("need at least one channel")
    return x.mean(axis=0)


def channel_reduce_attend(x, store, prefix):
    """Attention-weighted channel pooling with one weight vector per utterance.

    Channel scores come from query/value projections of the temporal average
    stream; a softmax over channels yields weights shared across frames.
    """
    if x.shape[0] < 1:
        raise ValueError("need at least one channel")
    temporal_avg = x.mean(axis=1)  # (M, hidden)
    queries = linear(temporal_avg, store[f"{prefix}.wq.weight"])
    values = linear(temporal_avg, store[f"{prefix}.wv.weight"])
    scores = (values @ queries.T).mean(axis=1)  # (M,)
    weights = softmax(scores)
    return np.einsum("mnh,m->nh", x, weights)


def channel_attention_weights(x, store, prefix):
    """Softmax channel weights used by channel_reduce_attend (for inspection)."""
    temporal_avg = x.mean(axis=1)
    queries = linear(temporal_avg, store[f"{prefix}.wq.weight"])
    values = linear(temporal_avg, store[f"{prefix}.wv.weight"])
    return softmax((values @ queries.T).mean(axis=1))


def register_channel_block(store, prefix, hidden, kind, num_heads):
    half = hidden // 2
    register_linear(store, f"{prefix}.wc", half, hidden)
    register_linear(store, f"{prefix}.wa", half, hidden)
    if kind == "attend":
        register_mhsa(store, f"{prefix}.attn", half)
    elif kind != "tac":
        raise ValueError(f"unknown channel block kind {kind!r}")


def register_channel_reduction(store, prefix, hidden, kind):
    if kind == "attend":
        register_linear(store, f"{prefix}.wq", hidden, hidden, bias=False)
        register_linear(store, f"{prefix}.wv", hidden, hidden, bias=False)
    elif kind != "mean":
        raise ValueError(f"unknown channel reduction kind {kind!r}")
