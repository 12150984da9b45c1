"""Multichannel waveform/spectrogram containers and STFT analysis-synthesis.

The transform uses a periodic Hann window at 50% overlap for both analysis
and synthesis, with the synthesis stage normalized by the squared-window
overlap envelope. Together with half-frame zero padding at both signal edges
this gives perfect reconstruction over the original sample range.
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import as_samples_2d, check_finite

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_FRAME_SIZE = 512  # 32 ms at 16 kHz


@dataclass
class Waveform:
    """Time-domain signal, shape (num_samples, num_channels)."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        self.samples = as_samples_2d(self.samples)
        check_finite(self.samples, "samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def num_samples(self):
        return self.samples.shape[0]

    @property
    def num_channels(self):
        return self.samples.shape[1]

    @property
    def duration(self):
        return self.num_samples / self.sample_rate

    def channel(self, m):
        """Single channel as a new mono Waveform."""
        return Waveform(self.samples[:, m].copy(), self.sample_rate)

    def select_channels(self, indices):
        return Waveform(self.samples[:, list(indices)].copy(), self.sample_rate)

    def mono(self):
        """1-D sample view; raises unless the waveform has one channel."""
        if self.num_channels != 1:
            raise ValueError(f"expected mono waveform, got {self.num_channels} channels")
        return self.samples[:, 0]


@dataclass
class Spectrogram:
    """One-sided complex STFT, shape (num_bins, num_frames, num_channels)."""

    bins: np.ndarray
    frame_size: int
    hop: int
    sample_rate: int = DEFAULT_SAMPLE_RATE
    num_samples: int | None = field(default=None)

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.ndim == 2:
            self.bins = self.bins[:, :, None]
        if self.bins.ndim != 3:
            raise ValueError(f"bins must be (F, N, M), got shape {self.bins.shape}")
        if self.frame_size % 2 != 0:
            raise ValueError("frame_size must be even")
        if self.bins.shape[0] != self.frame_size // 2 + 1:
            raise ValueError(
                f"bin count {self.bins.shape[0]} inconsistent with frame_size "
                f"{self.frame_size} (expected {self.frame_size // 2 + 1})"
            )
        if self.hop != self.frame_size // 2:
            raise ValueError("only 50% overlap (hop = frame_size / 2) is supported")
        check_finite(self.bins.view(np.float64), "spectrogram bins")

    @property
    def num_bins(self):
        return self.bins.shape[0]

    @property
    def num_frames(self):
        return self.bins.shape[1]

    @property
    def num_channels(self):
        return self.bins.shape[2]

    def channel(self, m):
        return Spectrogram(
            self.bins[:, :, m].copy(),
            frame_size=self.frame_size,
            hop=self.hop,
            sample_rate=self.sample_rate,
            num_samples=self.num_samples,
        )

    def select_channels(self, indices):
        return Spectrogram(
            self.bins[:, :, list(indices)].copy(),
            frame_size=self.frame_size,
            hop=self.hop,
            sample_rate=self.sample_rate,
            num_samples=self.num_samples,
        )


def periodic_hann(frame_size):
    """Periodic Hann window; satisfies COLA exactly at 50% overlap."""
    n = np.arange(frame_size)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / frame_size)


def _num_frames(num_samples, hop):
    return int(np.ceil(num_samples / hop)) + 1


def stft(x, frame_size=DEFAULT_FRAME_SIZE, hop=None):
    """Short-time Fourier transform of a (multichannel) waveform.

    Parameters
    ----------
    x : Waveform
        Input signal; must be non-empty.
    frame_size : int
        Analysis frame length in samples; must be even.
    hop : int, optional
        Frame shift; only frame_size // 2 is supported (default).

    Returns
    -------
    Spectrogram
        One-sided spectrum with frame_size // 2 + 1 bins. The signal is
        zero padded by half a frame at both edges so every original sample
        is covered with unit overlap gain.
    """
    if not isinstance(x, Waveform):
        x = Waveform(x)
    if frame_size % 2 != 0:
        raise ValueError("frame_size must be even")
    if hop is None:
        hop = frame_size // 2
    if hop != frame_size // 2:
        raise ValueError("only 50% overlap (hop = frame_size / 2) is supported")
    if x.num_samples == 0:
        raise ValueError("cannot transform an empty signal")

    num_frames = _num_frames(x.num_samples, hop)
    padded_len = (num_frames - 1) * hop + frame_size
    pad_tail = padded_len - (x.num_samples + hop)
    padded = np.pad(x.samples, ((hop, pad_tail), (0, 0)))

    window = periodic_hann(frame_size)
    # (num_frames, M, frame_size) views of the padded signal
    frames = np.lib.stride_tricks.sliding_window_view(padded, frame_size, axis=0)[::hop]
    spec = np.fft.rfft(frames * window[None, None, :], axis=2)
    bins = spec.transpose(2, 0, 1)  # (F, N, M)
    return Spectrogram(
        bins,
        frame_size=frame_size,
        hop=hop,
        sample_rate=x.sample_rate,
        num_samples=x.num_samples,
    )


def istft(spec):
    """Inverse STFT by windowed overlap-add with squared-window normalization.

    Output is trimmed to the original signal length recorded at analysis
    time; if unknown, the half-frame edge padding is removed instead.
    """
    if not isinstance(spec, Spectrogram):
        raise TypeError("istft expects a Spectrogram")
    frame_size, hop = spec.frame_size, spec.hop
    window = periodic_hann(frame_size)

    frames = np.fft.irfft(spec.bins, n=frame_size, axis=0)  # (frame, N, M)
    frames = frames * window[:, None, None]

    out_len = (spec.num_frames - 1) * hop + frame_size
    out = np.zeros((out_len, spec.num_channels))
    envelope = np.zeros(out_len)
    wsq = window**2
    for n in range(spec.num_frames):
        start = n * hop
        out[start : start + frame_size] += frames[:, n, :]
        envelope[start : start + frame_size] += wsq
    nonzero = envelope > 1e-12
    out[nonzero] /= envelope[nonzero, None]

    if spec.num_samples is not None:
        out = out[hop : hop + spec.num_samples]
    else:
        out = out[hop : out_len - hop]
    return Waveform(out, spec.sample_rate)
