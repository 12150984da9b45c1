"""Scene rendering: convolve the source with room responses and add diffuse
plus directional noise components at exact per-component RSNR targets."""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from ..signal import Waveform
from ..validation import as_mono
from .noise import diffuse_noise
from .rir import RIRSet, compute_rir_set, scene_for_source

RSNR_REFERENCE_MIC = 0


@dataclass
class MixResult:
    """Rendered scene components; mixture = reverberant + sum of noises."""

    mixture: Waveform
    early_image: Waveform
    reverberant: Waveform
    noise_components: list = field(default_factory=list)  # list of (label, Waveform)

    @property
    def noise_total(self):
        total = np.zeros_like(self.mixture.samples)
        for _, component in self.noise_components:
            total += component.samples
        return Waveform(total, self.mixture.sample_rate)


def _convolve_channels(signal, responses, num_samples):
    out = np.empty((num_samples, responses.shape[0]))
    for m in range(responses.shape[0]):
        out[:, m] = fftconvolve(signal, responses[m])[:num_samples]
    return out


def _rsnr_scale(speech_ref, noise_ref, rsnr_db):
    speech_energy = float(np.dot(speech_ref, speech_ref))
    noise_energy = float(np.dot(noise_ref, noise_ref))
    if noise_energy <= 0.0:
        raise ValueError("noise component has zero energy at the reference mic")
    return np.sqrt(speech_energy / (noise_energy * 10.0 ** (rsnr_db / 10.0)))


def mix_scene(clean, scene, rirs=None, noise_signals=None):
    """Render a scene into (mixture, early image, components).

    Parameters
    ----------
    clean : Waveform (mono)
        Dry source signal; must have nonzero energy.
    scene : RoomScene
    rirs : RIRSet, optional
        Speech-source responses; computed from the scene when omitted.
    noise_signals : list of 1-D arrays, optional
        Dry signals for the directional noise sources; seeded white noise is
        drawn when omitted.

    Every noise component is scaled so its energy at the reference mic
    (index 0) sits exactly at the planned RSNR below the reverberant speech.
    """
    dry = as_mono(clean)
    num_samples = dry.shape[0]
    if not np.any(dry):
        raise ValueError("clean signal has zero energy")
    if clean.sample_rate != scene.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: clean {clean.sample_rate} vs scene {scene.sample_rate}"
        )
    if rirs is None:
        rirs = compute_rir_set(scene)
    if not isinstance(rirs, RIRSet):
        raise TypeError("rirs must be a RIRSet")

    reverberant = _convolve_channels(dry, rirs.responses, num_samples)
    early_responses = np.stack([rirs.early(m) for m in range(rirs.num_mics)])
    early = _convolve_channels(dry, early_responses, num_samples)
    speech_ref = reverberant[:, RSNR_REFERENCE_MIC]

    plan = scene.noise_plan
    components = []
    rng = np.random.default_rng(np.random.SeedSequence([scene.seed, 0xD1F]))

    if plan.diffuse_rsnr_db is not None:
        diffuse = diffuse_noise(
            scene.mic_positions,
            num_samples,
            seed=int(rng.integers(0, 2**63)),
            sample_rate=scene.sample_rate,
        ).samples
        diffuse *= _rsnr_scale(speech_ref, diffuse[:, RSNR_REFERENCE_MIC], plan.diffuse_rsnr_db)
        components.append(("diffuse", Waveform(diffuse, scene.sample_rate)))

    for k, src in enumerate(plan.directional):
        if noise_signals is not None and k < len(noise_signals):
            dry_noise = as_mono(noise_signals[k])
            if dry_noise.shape[0] < num_samples:
                reps = int(np.ceil(num_samples / dry_noise.shape[0]))
                dry_noise = np.tile(dry_noise, reps)
            dry_noise = dry_noise[:num_samples]
        else:
            dry_noise = np.random.default_rng(
                np.random.SeedSequence([scene.seed, 0xD02, k])
            ).standard_normal(num_samples)
        noise_rirs = compute_rir_set(scene_for_source(scene, src.position))
        rendered = _convolve_channels(dry_noise, noise_rirs.responses, num_samples)
        rendered *= _rsnr_scale(speech_ref, rendered[:, RSNR_REFERENCE_MIC], src.rsnr_db)
        components.append((f"directional{k}", Waveform(rendered, scene.sample_rate)))

    mixture = reverberant.copy()
    for _, component in components:
        mixture += component.samples

    return MixResult(
        mixture=Waveform(mixture, scene.sample_rate),
        early_image=Waveform(early, scene.sample_rate),
        reverberant=Waveform(reverberant, scene.sample_rate),
        noise_components=components,
    )


def synthetic_speech(num_samples, seed, sample_rate=16000):
    """Deterministic speech-like test source: a drifting-pitch harmonic tone
    with syllabic amplitude bursts, gaps, and a weak noise floor.

    Not speech, but spectrally and temporally structured enough to exercise
    masking and beamforming at desk scale.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EEC]))
    t = np.arange(num_samples) / sample_rate

    # slowly drifting fundamental between ~110 and ~220 Hz
    drift = rng.standard_normal(max(num_samples // 1600, 4))
    drift = np.interp(np.linspace(0, 1, num_samples), np.linspace(0, 1, drift.size), drift)
    f0 = 160.0 + 50.0 * np.tanh(drift)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate

    voiced = np.zeros(num_samples)
    for k, amp in enumerate((1.0, 0.6, 0.45, 0.3, 0.15), start=1):
        voiced += amp * np.sin(k * phase + rng.uniform(0, 2 * np.pi))

    # syllable-rate envelope with pauses (~4 Hz activity)
    seg = max(int(0.25 * sample_rate), 1)
    gates = rng.uniform(0.0, 1.0, num_samples // seg + 2) > 0.3
    env = np.repeat(gates.astype(np.float64), seg)[:num_samples]
    smooth = int(0.020 * sample_rate)
    if smooth > 1:
        kernel = np.hanning(smooth)
        env = np.convolve(env, kernel / kernel.sum(), mode="same")

    noise_floor = 0.01 * rng.standard_normal(num_samples)
    samples = env * voiced * 0.2 + noise_floor
    return Waveform(samples, sample_rate)
