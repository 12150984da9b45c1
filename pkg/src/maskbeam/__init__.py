"""Mask-driven multichannel speech enhancement toolkit.

Pipeline: STFT -> magnitude/IPD features -> flexible mask estimator ->
MVDR beamforming with automatic reference selection -> optional
post-masking -> inverse STFT. Includes an acoustic scene simulator and
convolution-invariant SDR metrics.
"""

from .audio_io import read_wav, write_wav
from .beamform import (
    BeamWeights,
    CovariancePair,
    MvdrBeamformer,
    apply_beamformer,
    apply_mask_floor,
    estimate_covariances,
    mvdr_weights,
    oracle_mask,
    select_reference,
)
from .features import FeatureExtractor, extract_features, normalize_features
from .metrics import CISDRConfig, ci_sdr, ls_filter_estimate, snr_db
from .nnet import MaskEstimator, NetConfig, WeightStore, build_weights, mask_forward
from .pipeline import SpeechEnhancer
from .signal import Spectrogram, Waveform, istft, stft

__version__ = "0.1.0"

__all__ = [
    "BeamWeights",
    "CISDRConfig",
    "CovariancePair",
    "FeatureExtractor",
    "MaskEstimator",
    "MvdrBeamformer",
    "NetConfig",
    "SpeechEnhancer",
    "Spectrogram",
    "Waveform",
    "WeightStore",
    "apply_beamformer",
    "apply_mask_floor",
    "build_weights",
    "ci_sdr",
    "estimate_covariances",
    "extract_features",
    "istft",
    "ls_filter_estimate",
    "mask_forward",
    "mvdr_weights",
    "normalize_features",
    "oracle_mask",
    "read_wav",
    "select_reference",
    "snr_db",
    "stft",
    "write_wav",
]
