"""Image-method room impulse responses with fractional-delay interpolation.

Mirror-image sources are enumerated on the rectangular lattice, attenuated by
uniform wall reflection coefficients derived from the target reverberation
time via Sabine's formula, and written into the response through a
Hann-windowed sinc kernel. Integer-sample delays therefore collapse to a
single exact impulse while fractional delays are band-limited interpolated.
"""

from dataclasses import dataclass, replace

import numpy as np

from .scene import sabine_absorption

SPEED_OF_SOUND = 343.0
KERNEL_HALF_WIDTH = 32  # samples on each side of the arrival
EARLY_WINDOW = 0.050  # seconds after the direct path kept in the early image
_CHUNK = 50_000


@dataclass
class RIRSet:
    """Per-microphone impulse responses plus the early/late split metadata."""

    responses: np.ndarray  # (M, L)
    sample_rate: int
    direct_delays: np.ndarray  # (M,) fractional samples to the direct path
    early_split: np.ndarray  # (M,) first sample index of the late part

    @property
    def num_mics(self):
        return self.responses.shape[0]

    def early(self, mic):
        h = np.zeros_like(self.responses[mic])
        split = self.early_split[mic]
        h[:split] = self.responses[mic, :split]
        return h

    def late(self, mic):
        h = np.zeros_like(self.responses[mic])
        split = self.early_split[mic]
        h[split:] = self.responses[mic, split:]
        return h


def reflection_coefficient(room_dims, t60, max_absorption=1.0):
    alpha = sabine_absorption(room_dims, t60)
    if alpha >= max_absorption:
        raise ValueError(
            f"t60 {t60:.3f} s requires absorption {alpha:.3f} >= {max_absorption}; "
            "room/t60 combination is not realizable"
        )
    return np.sqrt(1.0 - alpha)


def rir_length(t60, sample_rate, direct_distance=0.0, c=SPEED_OF_SOUND):
    margin = int(np.ceil(direct_distance / c * sample_rate))
    return int(np.ceil(1.25 * t60 * sample_rate)) + margin + 2 * KERNEL_HALF_WIDTH + 1


def _image_positions(source, room_dims, max_distance):
    """Mirror-image source lattice covering every image within max_distance
    of any in-room point; per-mic distance masking happens later."""
    orders = np.ceil(max_distance / (2.0 * room_dims)).astype(int) + 1
    grids = [np.arange(-n, n + 1) for n in orders]
    rx, ry, rz = np.meshgrid(*grids, indexing="ij")
    r = np.stack([rx.ravel(), ry.ravel(), rz.ravel()], axis=1)  # (K, 3)

    positions = []
    orders_sum = []
    for p in np.ndindex(2, 2, 2):
        p = np.array(p)
        pos = (1 - 2 * p) * source + 2.0 * r * room_dims
        positions.append(pos)
        orders_sum.append(np.sum(np.abs(r + p) + np.abs(r), axis=1))
    return np.concatenate(positions), np.concatenate(orders_sum)


class _KernelScatter:
    """Accumulates Hann-windowed sinc kernels centered at fractional delays.

    Tap values over the kernel support are expanded from three per-arrival
    trig evaluations via angle-addition identities, and the tap grid covers
    [-W, W) only (the window is exactly zero at +/-W), so arrivals whose
    taps all land inside the response need no per-element masking. Chunk
    buffers are reused across calls.
    """

    def __init__(self, chunk=_CHUNK, width=KERNEL_HALF_WIDTH):
        if width % 2 != 0:
            raise ValueError("kernel half-width must be even")
        self.width = width
        taps = 2 * width
        j = np.arange(taps)
        self.j = j.astype(np.float64)
        self.j_int = j
        self.signs = np.where(j % 2 == 0, 1.0, -1.0)
        self.cos_j = np.cos(np.pi * j / width)
        self.sin_j = np.sin(np.pi * j / width)
        self._u = np.empty((chunk, taps))
        self._piu = np.empty((chunk, taps))
        self._sinval = np.empty((chunk, taps))
        self._window = np.empty((chunk, taps))
        self._tmp = np.empty((chunk, taps))
        self._n = np.empty((chunk, taps), dtype=np.int64)

    def add(self, h, delays, amplitudes):
        length = h.shape[0]
        width = self.width
        taps = 2 * width
        count = delays.shape[0]
        base = np.ceil(delays - width).astype(np.int64)
        # frac in [0, 1) is exact (operands within a factor of two), which keeps
        # sin(pi * u0) accurate for taps arbitrarily close to u = 0; width is
        # even, so sin(pi * (frac - width)) = sin(pi * frac).
        frac = (base + width) - delays
        u0 = frac - width

        u = self._u[:count]
        piu = self._piu[:count]
        sinval = self._sinval[:count]
        window = self._window[:count]
        tmp = self._tmp[:count]
        n = self._n[:count]

        np.add.outer(u0, self.j, out=u)
        np.multiply.outer(np.sin(np.pi * frac), self.signs, out=sinval)
        np.multiply(u, np.pi, out=piu)
        # exact integer delays put one tap at u = 0; guard the division there
        integer_rows = np.nonzero(frac == 0.0)[0]
        if integer_rows.size:
            piu[integer_rows, width] = 1.0
        np.divide(sinval, piu, out=sinval)
        if integer_rows.size:
            sinval[integer_rows, width] = 1.0
        np.multiply.outer(-np.cos(np.pi * frac / width), self.cos_j, out=window)
        np.multiply.outer(-np.sin(np.pi * frac / width), self.sin_j, out=tmp)
        window -= tmp
        window += 1.0
        window *= 0.5 * amplitudes[:, None]
        np.multiply(sinval, window, out=sinval)
        np.add.outer(base, self.j_int, out=n)

        inside = (base >= 0) & (base + taps <= length)
        if np.all(inside):
            h += np.bincount(n.ravel(), weights=sinval.ravel(), minlength=length)
            return
        ok = np.nonzero(inside)[0]
        if ok.size:
            h += np.bincount(
                n[ok].ravel(), weights=sinval[ok].ravel(), minlength=length
            )
        partial = np.nonzero(~inside)[0]
        n_part = n[partial]
        keep = (n_part >= 0) & (n_part < length)
        if np.any(keep):
            h += np.bincount(
                n_part[keep], weights=sinval[partial][keep], minlength=length
            )


def compute_rir_set(scene, length=None, c=SPEED_OF_SOUND, early_window=EARLY_WINDOW):
    """Image-method RIRs for every microphone of a scene.

    The image lattice is enumerated once and reused across microphones.
    """
    fs = scene.sample_rate
    mic_positions = scene.mic_positions
    dists_direct = np.linalg.norm(mic_positions - scene.source_pos, axis=1)
    if np.min(dists_direct) < 1e-6:
        raise ValueError("source coincides with a microphone")
    beta = reflection_coefficient(scene.room_dims, scene.t60)
    if length is None:
        length = rir_length(scene.t60, fs, float(np.max(dists_direct)), c)
    max_distance = (length + KERNEL_HALF_WIDTH) / fs * c

    positions, orders = _image_positions(scene.source_pos, scene.room_dims, max_distance)
    gains = beta**orders

    scatter = _KernelScatter()
    responses = np.zeros((scene.num_mics, length))
    for m, mic in enumerate(mic_positions):
        h = responses[m]
        for start in range(0, positions.shape[0], _CHUNK):
            pos = positions[start : start + _CHUNK]
            gain = gains[start : start + _CHUNK]
            d = np.sqrt(np.sum((pos - mic) ** 2, axis=1))
            keep = d <= max_distance
            if not np.any(keep):
                continue
            d = d[keep]
            amps = gain[keep] / (4.0 * np.pi * d)
            scatter.add(h, d * (fs / c), amps)

    direct_delays = dists_direct / c * fs
    early_split = np.floor(direct_delays + early_window * fs).astype(int) + 1
    early_split = np.minimum(early_split, length)
    return RIRSet(
        responses=responses,
        sample_rate=fs,
        direct_delays=direct_delays,
        early_split=early_split,
    )


def image_method_rir(scene, mic, length=None, c=SPEED_OF_SOUND):
    """Impulse response between the scene source and one microphone."""
    if not 0 <= mic < scene.num_mics:
        raise ValueError(f"mic index {mic} out of range")
    sub = scene_for_mic(scene, mic)
    return compute_rir_set(sub, length=length, c=c).responses[0]


def scene_for_mic(scene, mic):
    """Copy of the scene restricted to a single microphone."""
    return replace(scene, mic_positions=scene.mic_positions[mic : mic + 1])


def scene_for_source(scene, source_pos):
    """Copy of the scene with the speech source moved (for noise sources)."""
    return replace(scene, source_pos=np.asarray(source_pos, dtype=np.float64))
