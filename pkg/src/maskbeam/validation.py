"""Small input-validation helpers shared across the package."""

import numpy as np


def as_samples_2d(samples):
    """Coerce audio samples to a float64 array of shape (num_samples, num_channels).

    1-D input is treated as a single channel.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"samples must be 1-D or 2-D, got shape {x.shape}")
    return x


def check_finite(x, name="array"):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def as_mono(x):
    """Return a 1-D float64 view of a Waveform or array-like single-channel signal."""
    samples = getattr(x, "samples", x)
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 2:
        if samples.shape[1] != 1:
            raise ValueError(f"expected a single-channel signal, got {samples.shape[1]} channels")
        samples = samples[:, 0]
    elif samples.ndim != 1:
        raise ValueError(f"expected a 1-D or (T, 1) signal, got shape {samples.shape}")
    return samples


def check_mask(g, num_bins=None, num_frames=None):
    """Validate a TF mask: real (F, N) array with entries in [0, 1]."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError(f"mask must be 2-D (bins, frames), got shape {g.shape}")
    check_finite(g, "mask")
    if g.min() < 0.0 or g.max() > 1.0:
        raise ValueError("mask entries must lie in [0, 1]")
    if num_bins is not None and g.shape[0] != num_bins:
        raise ValueError(f"mask has {g.shape[0]} bins, expected {num_bins}")
    if num_frames is not None and g.shape[1] != num_frames:
        raise ValueError(f"mask has {g.shape[1]} frames, expected {num_frames}")
    return g


def check_square_hermitian(mat, tol=1e-10, name="matrix"):
    """Validate a stack of Hermitian matrices (..., M, M)."""
    mat = np.asarray(mat)
    if mat.ndim < 2 or mat.shape[-1] != mat.shape[-2]:
        raise ValueError(f"{name} must have square trailing dimensions, got {mat.shape}")
    dev = np.max(np.abs(mat - np.conj(np.swapaxes(mat, -1, -2))))
    scale = max(np.max(np.abs(mat)), 1.0)
    if dev > tol * scale:
        raise ValueError(f"{name} deviates from Hermitian symmetry by {dev:.3e}")
    return mat
