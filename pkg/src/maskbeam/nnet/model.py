"""Flexible TF-mask estimator: alternating channel and temporal blocks, a
permutation-invariant channel reduction, and a sigmoid mask head.

The same weight set serves any number of input channels; channel blocks are
permutation equivariant and the reduction is permutation invariant, so the
estimated mask does not depend on channel ordering.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..features import extract_features, normalize_features
from ..signal import Spectrogram
from ..validation import check_finite
from . import channel as channel_ops
from . import layers
from .weights import WeightStore


@dataclass
class NetConfig:
    num_freq_bins: int = 257
    hidden: int = 128
    heads: int = 4
    conv_kernel: int = 31
    layers_per_block: tuple = (5, 5, 5, 5, 5, 1)
    reduction_after_block: int = 3
    channel_block_kind: str = "attend"  # "tac" | "attend"
    reduction_kind: str = "attend"  # "mean" | "attend"
    ffn_expansion: int = 4

    @property
    def num_temporal_blocks(self):
        return len(self.layers_per_block)

    def validate(self):
        if self.hidden % self.heads != 0:
            raise ValueError("heads must divide hidden")
        if self.hidden % 2 != 0:
            raise ValueError("hidden must be even (channel blocks halve it)")
        if self.conv_kernel % 2 != 1:
            raise ValueError("conv_kernel must be odd")
        if not 1 <= self.reduction_after_block < self.num_temporal_blocks:
            raise ValueError("reduction_after_block must lie in [1, num_temporal_blocks)")
        if self.channel_block_kind not in ("tac", "attend"):
            raise ValueError(f"unknown channel block kind {self.channel_block_kind!r}")
        if self.reduction_kind not in ("mean", "attend"):
            raise ValueError(f"unknown reduction kind {self.reduction_kind!r}")
        if self.num_freq_bins < 1:
            raise ValueError("num_freq_bins must be positive")
        return self


def build_weights(cfg, seed=0):
    """Materialize every parameter the configuration references."""
    cfg.validate()
    store = WeightStore(rng_seed=seed)
    layers.register_linear(store, "input_proj", cfg.hidden, 2 * cfg.num_freq_bins)
    for block in range(1, cfg.num_temporal_blocks + 1):
        if block <= cfg.reduction_after_block:
            channel_ops.register_channel_block(
                store, f"channel{block}", cfg.hidden, cfg.channel_block_kind, cfg.heads
            )
        for layer in range(cfg.layers_per_block[block - 1]):
            layers.register_conformer_layer(
                store,
                f"temporal{block}.layer{layer}",
                cfg.hidden,
                cfg.conv_kernel,
                cfg.ffn_expansion,
            )
    channel_ops.register_channel_reduction(store, "reduce", cfg.hidden, cfg.reduction_kind)
    layers.register_linear(store, "output_proj", cfg.num_freq_bins, cfg.hidden)
    return store


def _apply_channel_block(x, cfg, store, block):
    if cfg.channel_block_kind == "tac":
        return channel_ops.channel_block_tac(x, store, f"channel{block}")
    return channel_ops.channel_block_attend(x, store, f"channel{block}", cfg.heads)


def _apply_reduction(x, cfg, store):
    if cfg.reduction_kind == "mean":
        return channel_ops.channel_reduce_mean(x)
    return channel_ops.channel_reduce_attend(x, store, "reduce")


def mask_forward(features, cfg, store):
    """Estimate a TF mask from stacked magnitude/IPD features.

    Parameters
    ----------
    features : ndarray of shape (2F, N, M)
        Normalized input features.
    cfg : NetConfig
    store : WeightStore

    Returns
    -------
    ndarray of shape (F, N) with entries in (0, 1).
    """
    cfg.validate()
    z = np.asarray(features, dtype=np.float64)
    if z.ndim != 3:
        raise ValueError(f"features must be (2F, N, M), got shape {z.shape}")
    if z.shape[0] != 2 * cfg.num_freq_bins:
        raise ValueError(
            f"feature rows {z.shape[0]} do not match 2F = {2 * cfg.num_freq_bins}"
        )
    if z.shape[2] == 0:
        raise ValueError("need at least one channel")
    if z.shape[1] == 0:
        raise ValueError("need at least one frame")
    check_finite(z, "features")

    x = z.transpose(2, 1, 0)  # (M, N, 2F)
    x = layers.linear(x, store["input_proj.weight"], store["input_proj.bias"])

    for block in range(1, cfg.reduction_after_block + 1):
        x = _apply_channel_block(x, cfg, store, block)
        x = layers.temporal_block(
            x, store, f"temporal{block}", cfg.layers_per_block[block - 1], cfg.heads
        )
    x = _apply_reduction(x, cfg, store)  # (N, hidden)
    for block in range(cfg.reduction_after_block + 1, cfg.num_temporal_blocks + 1):
        x = layers.temporal_block(
            x, store, f"temporal{block}", cfg.layers_per_block[block - 1], cfg.heads
        )
    logits = layers.linear(x, store["output_proj.weight"], store["output_proj.bias"])
    return layers.sigmoid(logits).T  # (F, N)


class MaskEstimator(BaseEstimator):
    """Sklearn-style wrapper around the mask-estimation forward pass.

    Weights are materialized from a seeded generator by `fit` (no training
    happens; the estimator is exercised with random or file-loaded weights).
    """

    def __init__(
        self,
        num_freq_bins=257,
        hidden=128,
        heads=4,
        conv_kernel=31,
        layers_per_block=(5, 5, 5, 5, 5, 1),
        reduction_after_block=3,
        channel_block_kind="attend",
        reduction_kind="attend",
        normalize=True,
        seed=0,
    ):
        self.num_freq_bins = num_freq_bins
        self.hidden = hidden
        self.heads = heads
        self.conv_kernel = conv_kernel
        self.layers_per_block = layers_per_block
        self.reduction_after_block = reduction_after_block
        self.channel_block_kind = channel_block_kind
        self.reduction_kind = reduction_kind
        self.normalize = normalize
        self.seed = seed

    def _config(self):
        return NetConfig(
            num_freq_bins=self.num_freq_bins,
            hidden=self.hidden,
            heads=self.heads,
            conv_kernel=self.conv_kernel,
            layers_per_block=tuple(self.layers_per_block),
            reduction_after_block=self.reduction_after_block,
            channel_block_kind=self.channel_block_kind,
            reduction_kind=self.reduction_kind,
        ).validate()

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        self.weights_ = build_weights(self.config_, seed=self.seed)
        return self

    def load_weights(self, path):
        self.config_ = self._config()
        self.weights_ = WeightStore.load(path)
        for name, shape in build_weights(self.config_, seed=0).manifest():
            if name not in self.weights_:
                raise ValueError(f"weight container misses parameter {name!r}")
            if tuple(self.weights_[name].shape) != shape:
                raise ValueError(
                    f"parameter {name!r} has shape {self.weights_[name].shape}, "
                    f"expected {shape}"
                )
        return self

    def save_weights(self, path):
        self._check_fitted()
        self.weights_.save(path)

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise RuntimeError("MaskEstimator is not fitted; call fit() or load_weights()")

    def predict(self, X):
        """Estimate an (F, N) mask from a Spectrogram or a feature tensor."""
        self._check_fitted()
        if isinstance(X, Spectrogram):
            features = extract_features(X)
            if self.normalize:
                features = normalize_features(features)
        else:
            features = np.asarray(X, dtype=np.float64)
        return mask_forward(features, self.config_, self.weights_)
