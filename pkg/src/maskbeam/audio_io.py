"""WAV file reading and writing (RIFF little-endian, PCM16 and float32)."""

import numpy as np
from scipy.io import wavfile

from .signal import Waveform

_PCM16_SCALE = 32768.0


def read_wav(path, expected_sample_rate=None):
    """Read a mono or multichannel WAV file into a Waveform.

    16-bit PCM data is scaled to [-1, 1); float data is taken as is.
    Raises if `expected_sample_rate` is given and does not match the file
    (no resampling is performed).
    """
    rate, data = wavfile.read(path)
    if expected_sample_rate is not None and rate != expected_sample_rate:
        raise ValueError(
            f"{path}: sample rate {rate} Hz does not match expected "
            f"{expected_sample_rate} Hz (resampling is not supported)"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _PCM16_SCALE
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}")
    return Waveform(samples, sample_rate=rate)


def write_wav(path, waveform, encoding="float32"):
    """Write a Waveform as 32-bit float or 16-bit PCM WAV.

    PCM16 clips to [-1, 1) before quantization.
    """
    data = waveform.samples
    if data.shape[1] == 1:
        data = data[:, 0]
    if encoding == "float32":
        wavfile.write(path, waveform.sample_rate, data.astype(np.float32))
    elif encoding == "pcm16":
        clipped = np.clip(data, -1.0, 1.0 - 1.0 / _PCM16_SCALE)
        wavfile.write(path, waveform.sample_rate, np.round(clipped * _PCM16_SCALE).astype(np.int16))
    else:
        raise ValueError(f"unsupported encoding {encoding!r} (use 'float32' or 'pcm16')")
