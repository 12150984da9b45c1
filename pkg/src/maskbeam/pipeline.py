"""End-to-end enhancement: STFT, mask (oracle or estimator), MVDR with
reference selection, optional post-masking, inverse STFT."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .beamform import (
    apply_beamformer,
    apply_mask_floor,
    estimate_covariances,
    mvdr_weights,
    oracle_mask,
    select_reference,
)
from .nnet import MaskEstimator
from .signal import DEFAULT_FRAME_SIZE, Waveform, istft, stft


@dataclass
class EnhanceInfo:
    reference: int
    mask_mean: float


class SpeechEnhancer(BaseEstimator):
    """Multichannel waveform in, enhanced single-channel waveform out.

    mask_source is "oracle" (requires the early-speech image alongside the
    mixture) or a fitted MaskEstimator. reference is "auto" or a channel
    index.
    """

    def __init__(
        self,
        frame_size=DEFAULT_FRAME_SIZE,
        mask_source="oracle",
        reference="auto",
        mask_floor_db=0.0,
        diagonal_loading=1e-6,
        oracle_channel="strongest",
    ):
        self.frame_size = frame_size
        self.mask_source = mask_source
        self.reference = reference
        self.mask_floor_db = mask_floor_db
        self.diagonal_loading = diagonal_loading
        self.oracle_channel = oracle_channel

    def fit(self, X=None, y=None):
        if isinstance(self.mask_source, MaskEstimator):
            if not hasattr(self.mask_source, "weights_"):
                self.mask_source.fit()
        elif self.mask_source != "oracle":
            raise ValueError("mask_source must be 'oracle' or a MaskEstimator")
        return self

    def enhance(self, mixture, early_image=None):
        """Run the full chain; returns (waveform, EnhanceInfo)."""
        self.fit()
        if not isinstance(mixture, Waveform):
            mixture = Waveform(mixture)
        mix_spec = stft(mixture, frame_size=self.frame_size)

        if self.mask_source == "oracle":
            if early_image is None:
                raise ValueError("oracle mask requires the early-speech image")
            if not isinstance(early_image, Waveform):
                early_image = Waveform(early_image, mixture.sample_rate)
            early_spec = stft(early_image, frame_size=self.frame_size)
            if self.oracle_channel == "strongest":
                # strongest early image = (in practice) the closest microphone
                channel = int(np.argmax(np.sum(early_image.samples**2, axis=0)))
            else:
                channel = int(self.oracle_channel)
            mask = oracle_mask(early_spec, mix_spec, channel=channel)
        else:
            mask = self.mask_source.predict(mix_spec)

        cov = estimate_covariances(mix_spec, mask)
        if self.reference == "auto":
            ref = select_reference(cov, diagonal_loading=self.diagonal_loading)
        else:
            ref = int(self.reference)
        beam = mvdr_weights(cov, ref, diagonal_loading=self.diagonal_loading)
        enhanced = apply_beamformer(mix_spec, beam)
        if self.mask_floor_db != 0.0:
            enhanced = apply_mask_floor(enhanced, mask, self.mask_floor_db)
        out = istft(enhanced)
        return out, EnhanceInfo(reference=ref, mask_mean=float(mask.mean()))

    def transform(self, X):
        """Sklearn-style entry point (mask-estimator mode only)."""
        if self.mask_source == "oracle":
            raise ValueError("transform(X) lacks the early image; use enhance()")
        return self.enhance(X)[0]
