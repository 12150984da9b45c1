"""Spherically-isotropic diffuse noise via coherence-preserving mixing.

Independent white Gaussian channels are mixed per frequency bin by a matrix
square root of the target coherence matrix Gamma_ij(f) = sinc(2 pi f d_ij / c),
so the synthesized field reproduces the ideal diffuse coherence while keeping
unit-variance marginals.
"""

import numpy as np

from ..signal import Waveform
from .rir import SPEED_OF_SOUND

EIGENVALUE_FLOOR = 1e-10
_FREQ_CHUNK = 65536


def diffuse_coherence(distances, freqs, c=SPEED_OF_SOUND):
    """Ideal spherically-isotropic coherence sinc(2 pi f d / c).

    Broadcasting is outer: array frequencies with an (M, M) distance matrix
    give an (F, M, M) stack; scalars pass through.
    """
    x = 2.0 * np.pi * np.multiply.outer(np.asarray(freqs, dtype=np.float64), distances) / c
    return np.sinc(x / np.pi)


def _mixing_matrices(gamma):
    """Cholesky factors of (eigenvalue-floored) coherence matrices."""
    try:
        return np.linalg.cholesky(gamma)
    except np.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(gamma)
    eigvals = np.maximum(eigvals, EIGENVALUE_FLOOR)
    floored = np.einsum("...ij,...j,...kj->...ik", eigvecs, eigvals, eigvecs)
    return np.linalg.cholesky(floored)


def diffuse_noise(mic_positions, num_samples, seed, sample_rate=16000, c=SPEED_OF_SOUND):
    """Multichannel spherically-isotropic noise at the given positions.

    Parameters
    ----------
    mic_positions : array (M, 3), M >= 2
    num_samples : int
    seed : int
    """
    positions = np.asarray(mic_positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise ValueError("mic_positions must have shape (M, 3)")
    num_mics = positions.shape[0]
    if num_mics < 2:
        raise ValueError("diffuse noise needs at least 2 microphones")
    if num_samples < 2:
        raise ValueError("num_samples must be >= 2")
    distances = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    off_diag = distances[~np.eye(num_mics, dtype=bool)]
    if np.min(off_diag) < 1e-9:
        raise ValueError("coincident microphones make the coherence matrix singular")

    rng = np.random.default_rng(seed)
    white = rng.standard_normal((num_samples, num_mics))
    spectra = np.fft.rfft(white, axis=0)  # (F, M)
    freqs = np.fft.rfftfreq(num_samples, d=1.0 / sample_rate)

    mixed = np.empty_like(spectra)
    for start in range(0, freqs.shape[0], _FREQ_CHUNK):
        stop = min(start + _FREQ_CHUNK, freqs.shape[0])
        gamma = diffuse_coherence(distances, freqs[start:stop], c)
        mixing = _mixing_matrices(gamma)
        mixed[start:stop] = np.einsum("fij,fj->fi", mixing, spectra[start:stop])

    out = np.fft.irfft(mixed, n=num_samples, axis=0)
    return Waveform(out, sample_rate)
