"""Mask-estimator input features: per-channel magnitude and inter-channel
phase difference (IPD) relative to the channel-averaged spectrum."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .signal import Spectrogram
from .validation import check_finite

VARIANCE_FLOOR = 1e-8


def extract_features(spec):
    """Stack magnitude and IPD features from a multichannel spectrogram.

    Parameters
    ----------
    spec : Spectrogram
        Complex TF bins of shape (F, N, M).

    Returns
    -------
    ndarray of shape (2F, N, M)
        Rows [0, F) hold |y_m(f, n)|; rows [F, 2F) hold the phase of
        y_m(f, n) relative to the channel mean spectrum. Bins where the
        channel mean is zero get IPD 0.
    """
    if not isinstance(spec, Spectrogram):
        raise TypeError("extract_features expects a Spectrogram")
    bins = spec.bins
    magnitude = np.abs(bins)
    channel_mean = bins.mean(axis=2)
    # angle(y / mean) == angle(y * conj(mean)); avoids division and makes the
    # zero-mean convention (IPD = 0) fall out of angle(0) = 0.
    ipd = np.angle(bins * np.conj(channel_mean)[:, :, None])
    return np.concatenate([magnitude, ipd], axis=0)


def normalize_features(features, eps=VARIANCE_FLOOR):
    """Normalize stacked features per (frequency, channel) over time frames.

    Magnitude rows are mean/variance normalized; IPD rows are only mean
    normalized. Requires at least two frames.
    """
    z = np.asarray(features, dtype=np.float64)
    if z.ndim != 3 or z.shape[0] % 2 != 0:
        raise ValueError(f"features must have shape (2F, N, M), got {z.shape}")
    if z.shape[1] < 2:
        raise ValueError("need at least 2 frames to estimate variance")
    check_finite(z, "features")

    num_bins = z.shape[0] // 2
    mag, ipd = z[:num_bins], z[num_bins:]
    mag_mean = mag.mean(axis=1, keepdims=True)
    mag_var = mag.var(axis=1, keepdims=True)
    mag_norm = (mag - mag_mean) / np.sqrt(mag_var + eps)
    ipd_norm = ipd - ipd.mean(axis=1, keepdims=True)
    return np.concatenate([mag_norm, ipd_norm], axis=0)


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Transformer from Spectrogram to (2F, N, M) mask-estimator features.

    Stateless; `fit` exists for pipeline compatibility.
    """

    def __init__(self, normalize=True, eps=VARIANCE_FLOOR):
        self.normalize = normalize
        self.eps = eps

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        features = extract_features(X)
        if self.normalize:
            features = normalize_features(features, eps=self.eps)
        return features
