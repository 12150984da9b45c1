"""Mask-conditioned covariance estimation, MVDR weights with automatic
reference selection, and single-channel post-masking."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .signal import Spectrogram
from .validation import check_mask, check_square_hermitian

MASK_SUM_FLOOR = 1e-6  # relative to the frame count
DIAGONAL_LOADING = 1e-6  # trace-scaled loading added to the undesired covariance
TRACE_TOL = 1e-12


@dataclass
class CovariancePair:
    """Per-subband spatial covariances of the desired and undesired signals."""

    phi_dd: np.ndarray  # (F, M, M) complex
    phi_uu: np.ndarray  # (F, M, M) complex

    def __post_init__(self):
        self.phi_dd = np.asarray(self.phi_dd, dtype=np.complex128)
        self.phi_uu = np.asarray(self.phi_uu, dtype=np.complex128)
        if self.phi_dd.shape != self.phi_uu.shape:
            raise ValueError("phi_dd and phi_uu must have identical shapes")
        check_square_hermitian(self.phi_dd, name="phi_dd")
        check_square_hermitian(self.phi_uu, name="phi_uu")

    @property
    def num_bins(self):
        return self.phi_dd.shape[0]

    @property
    def num_channels(self):
        return self.phi_dd.shape[-1]


@dataclass
class BeamWeights:
    """Per-subband beamforming vectors and the reference channel they target."""

    weights: np.ndarray  # (F, M) complex
    reference: int

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.complex128)
        if not np.all(np.isfinite(self.weights.view(np.float64))):
            raise ValueError("beam weights contain non-finite values")
        if not 0 <= self.reference < self.weights.shape[-1]:
            raise ValueError(f"reference {self.reference} out of range")


def oracle_mask(early, mixture, channel=0, eps=1e-12):
    """Wiener-like mask from the clean early-speech image at one channel.

    g = |d|^2 / (|d|^2 + |y - d|^2 + eps), clamped to [0, 1]. Stands in for
    a trained estimator so the downstream chain is testable end to end.
    """
    if early.bins.shape != mixture.bins.shape:
        raise ValueError(
            f"shape mismatch: early {early.bins.shape} vs mixture {mixture.bins.shape}"
        )
    d = early.bins[:, :, channel]
    y = mixture.bins[:, :, channel]
    desired = np.abs(d) ** 2
    residual = np.abs(y - d) ** 2
    return np.clip(desired / (desired + residual + eps), 0.0, 1.0)


def estimate_covariances(mixture, mask, mask_sum_floor=MASK_SUM_FLOOR):
    """Mask-weighted spatial covariance pair from a multichannel spectrogram.

    Each subband is normalized by its mask weight sum; the complement mask
    1 - g weights the undesired covariance. Subbands whose (complement) mask
    sum falls below mask_sum_floor * num_frames are reported as degenerate.
    """
    if not isinstance(mixture, Spectrogram):
        raise TypeError("estimate_covariances expects a Spectrogram")
    g = check_mask(mask, num_bins=mixture.num_bins, num_frames=mixture.num_frames)
    gu = 1.0 - g
    delta = mask_sum_floor * mixture.num_frames
    g_sum = g.sum(axis=1)
    gu_sum = gu.sum(axis=1)
    for name, sums in (("mask", g_sum), ("complement mask", gu_sum)):
        bad = np.nonzero(sums <= delta)[0]
        if bad.size:
            raise ValueError(
                f"degenerate {name} sum {sums[bad[0]]:.3e} in subband {bad[0]} "
                f"(threshold {delta:.3e})"
            )

    y = mixture.bins  # (F, N, M)
    phi_dd = np.einsum("fn,fnm,fnk->fmk", g, y, np.conj(y)) / g_sum[:, None, None]
    phi_uu = np.einsum("fn,fnm,fnk->fmk", gu, y, np.conj(y)) / gu_sum[:, None, None]
    phi_dd = 0.5 * (phi_dd + np.conj(phi_dd.swapaxes(-1, -2)))
    phi_uu = 0.5 * (phi_uu + np.conj(phi_uu.swapaxes(-1, -2)))
    return CovariancePair(phi_dd, phi_uu)


def mvdr_weights(cov, reference, diagonal_loading=DIAGONAL_LOADING):
    """MVDR beamformer toward `reference`: w = (Phi_uu^-1 Phi_dd / trace) e_r.

    Phi_uu is first regularized by adding its trace scaled with
    `diagonal_loading` to the diagonal.
    """
    num_bins, num_ch = cov.num_bins, cov.num_channels
    if not 0 <= reference < num_ch:
        raise ValueError(f"reference {reference} out of range for {num_ch} channels")
    traces = np.real(np.trace(cov.phi_uu, axis1=-2, axis2=-1))
    eye = np.eye(num_ch)
    phi_uu = cov.phi_uu + (diagonal_loading * traces)[:, None, None] * eye
    try:
        ratio = np.linalg.solve(phi_uu, cov.phi_dd)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"undesired-signal covariance is singular: {exc}") from exc
    ratio_trace = np.trace(ratio, axis1=-2, axis2=-1)
    small = np.abs(ratio_trace) < TRACE_TOL
    if np.any(small):
        f = int(np.nonzero(small)[0][0])
        raise ValueError(f"no desired signal in subband {f} (trace ~ 0)")
    weights = ratio[:, :, reference] / ratio_trace[:, None]
    if not np.all(np.isfinite(weights.view(np.float64))):
        raise ValueError("MVDR produced non-finite weights")
    return BeamWeights(weights, reference)


def output_snr(cov, weights):
    """Average output SNR of a beamformer over subbands (ratio of sums)."""
    w = weights.weights
    num = np.real(np.einsum("fm,fmk,fk->", np.conj(w), cov.phi_dd, w))
    den = np.real(np.einsum("fm,fmk,fk->", np.conj(w), cov.phi_uu, w))
    return num / den


def select_reference(cov, candidates=None, diagonal_loading=DIAGONAL_LOADING):
    """Reference channel maximizing the average output SNR.

    Candidates whose MVDR solve fails are skipped; ties break toward the
    lowest index. Raises when every candidate fails.
    """
    if candidates is None:
        candidates = range(cov.num_channels)
    best_idx, best_snr = None, -np.inf
    failures = []
    for m in candidates:
        try:
            w = mvdr_weights(cov, m, diagonal_loading=diagonal_loading)
            snr = output_snr(cov, w)
        except ValueError as exc:
            failures.append(f"channel {m}: {exc}")
            continue
        if snr > best_snr:
            best_idx, best_snr = m, snr
    if best_idx is None:
        raise ValueError("reference selection failed for every candidate: " + "; ".join(failures))
    return best_idx


def apply_beamformer(mixture, beam):
    """d_hat(f, n) = w(f)^H y(f, n); returns a single-channel Spectrogram."""
    if not isinstance(mixture, Spectrogram):
        raise TypeError("apply_beamformer expects a Spectrogram")
    if beam.weights.shape != (mixture.num_bins, mixture.num_channels):
        raise ValueError(
            f"weights shaped {beam.weights.shape} do not match spectrogram "
            f"({mixture.num_bins} bins, {mixture.num_channels} channels)"
        )
    out = np.einsum("fm,fnm->fn", np.conj(beam.weights), mixture.bins)
    return Spectrogram(
        out,
        frame_size=mixture.frame_size,
        hop=mixture.hop,
        sample_rate=mixture.sample_rate,
        num_samples=mixture.num_samples,
    )


def apply_mask_floor(enhanced, mask, floor_db=0.0):
    """Post-mask a single-channel spectrogram by max(g, 10^(floor_db / 20)).

    floor_db = 0 makes the effective mask identically 1, leaving the input
    untouched.
    """
    if floor_db > 0:
        raise ValueError("mask floor must be given in dB <= 0")
    if enhanced.num_channels != 1:
        raise ValueError("post-masking applies to single-channel spectrograms")
    g = check_mask(mask, num_bins=enhanced.num_bins, num_frames=enhanced.num_frames)
    floor = 10.0 ** (floor_db / 20.0)
    bins = enhanced.bins * np.maximum(g, floor)[:, :, None]
    return Spectrogram(
        bins,
        frame_size=enhanced.frame_size,
        hop=enhanced.hop,
        sample_rate=enhanced.sample_rate,
        num_samples=enhanced.num_samples,
    )


class MvdrBeamformer(BaseEstimator):
    """Sklearn-style wrapper: spectrogram + mask -> single-channel spectrogram.

    reference is either "auto" (output-SNR maximization) or a fixed channel
    index.
    """

    def __init__(self, reference="auto", diagonal_loading=DIAGONAL_LOADING, mask_floor_db=0.0):
        self.reference = reference
        self.diagonal_loading = diagonal_loading
        self.mask_floor_db = mask_floor_db

    def fit(self, X=None, y=None):
        return self

    def transform(self, X, mask):
        out, _ = self.transform_with_info(X, mask)
        return out

    def transform_with_info(self, X, mask):
        cov = estimate_covariances(X, mask)
        if self.reference == "auto":
            ref = select_reference(cov, diagonal_loading=self.diagonal_loading)
        else:
            ref = int(self.reference)
        beam = mvdr_weights(cov, ref, diagonal_loading=self.diagonal_loading)
        out = apply_beamformer(X, beam)
        if self.mask_floor_db != 0.0:
            out = apply_mask_floor(out, mask, self.mask_floor_db)
        return out, {"reference": ref}
