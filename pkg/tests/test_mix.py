import numpy as np
import pytest
from scipy.signal import fftconvolve

from maskbeam.metrics import snr_db
from maskbeam.signal import Waveform
from maskbeam.sim.mix import mix_scene, synthetic_speech
from maskbeam.sim.rir import compute_rir_set
from maskbeam.sim.scene import NoisePlan, NoiseSource, RoomScene, sample_scene

FS = 16000


def _small_scene(noise_plan, seed=0):
    return RoomScene(
        room_dims=[5.0, 6.0, 3.0],
        t60=0.25,
        source_pos=[2.0, 3.0, 1.5],
        mic_positions=np.array([[3.5, 2.0, 1.4], [3.56, 2.0, 1.4]]),
        array_kind="explicit",
        noise_plan=noise_plan,
        seed=seed,
    )


def test_noiseless_plan_mixture_equals_reverberant():
    scene = _small_scene(NoisePlan(None))
    clean = synthetic_speech(8000, seed=1)
    result = mix_scene(clean, scene)
    np.testing.assert_array_equal(result.mixture.samples, result.reverberant.samples)
    assert result.noise_components == []


def test_per_component_rsnr_hits_target():
    plan = NoisePlan(7.5, [NoiseSource([1.0, 5.0, 1.9], -2.0), NoiseSource([4.0, 4.5, 2.1], 13.0)])
    scene = _small_scene(plan, seed=3)
    clean = synthetic_speech(8000, seed=2)
    result = mix_scene(clean, scene)
    assert len(result.noise_components) == 3
    speech_ref = result.reverberant.samples[:, 0]
    targets = [7.5, -2.0, 13.0]
    for (label, component), target in zip(result.noise_components, targets):
        measured = snr_db(speech_ref, component.samples[:, 0])
        assert abs(measured - target) < 0.01, label


def test_additive_decomposition_with_early_late_split():
    plan = NoisePlan(5.0)
    scene = _small_scene(plan, seed=4)
    clean = synthetic_speech(6000, seed=3)
    rirs = compute_rir_set(scene)
    result = mix_scene(clean, scene, rirs=rirs)

    dry = clean.samples[:, 0]
    late = np.stack(
        [fftconvolve(dry, rirs.late(m))[:6000] for m in range(2)], axis=1
    )
    recomposed = result.early_image.samples + late + result.noise_total.samples
    scale = np.max(np.abs(result.mixture.samples))
    assert np.max(np.abs(recomposed - result.mixture.samples)) < 1e-9 * max(scale, 1.0)


def test_early_image_is_early_convolution():
    scene = _small_scene(NoisePlan(None), seed=5)
    clean = synthetic_speech(5000, seed=4)
    rirs = compute_rir_set(scene)
    result = mix_scene(clean, scene, rirs=rirs)
    dry = clean.samples[:, 0]
    for m in range(2):
        expected = fftconvolve(dry, rirs.early(m))[:5000]
        np.testing.assert_allclose(result.early_image.samples[:, m], expected, atol=1e-12)


def test_zero_clean_rejected():
    scene = _small_scene(NoisePlan(None))
    with pytest.raises(ValueError, match="zero energy"):
        mix_scene(Waveform(np.zeros(1000)), scene)


def test_sample_rate_mismatch_rejected():
    scene = _small_scene(NoisePlan(None))
    clean = Waveform(np.ones(1000), sample_rate=8000)
    with pytest.raises(ValueError, match="sample-rate"):
        mix_scene(clean, scene)


def test_user_supplied_directional_noise():
    plan = NoisePlan(None, [NoiseSource([1.0, 5.0, 1.9], 0.0)])
    scene = _small_scene(plan, seed=6)
    clean = synthetic_speech(4000, seed=5)
    tone = np.sin(2 * np.pi * 440 * np.arange(2000) / FS)  # shorter; gets tiled
    result = mix_scene(clean, scene, noise_signals=[tone])
    assert len(result.noise_components) == 1
    measured = snr_db(result.reverberant.samples[:, 0], result.noise_components[0][1].samples[:, 0])
    assert abs(measured) < 0.01


def test_mixing_deterministic():
    scene = sample_scene("circular7", 42, num_directional=1)
    clean = synthetic_speech(4000, seed=7)
    a = mix_scene(clean, scene)
    b = mix_scene(clean, scene)
    np.testing.assert_array_equal(a.mixture.samples, b.mixture.samples)
    np.testing.assert_array_equal(a.early_image.samples, b.early_image.samples)


def test_synthetic_speech_properties():
    speech = synthetic_speech(2 * FS, seed=11)
    assert speech.num_samples == 2 * FS
    assert speech.num_channels == 1
    assert np.any(speech.samples != 0.0)
    again = synthetic_speech(2 * FS, seed=11)
    np.testing.assert_array_equal(speech.samples, again.samples)
    other = synthetic_speech(2 * FS, seed=12)
    assert not np.array_equal(speech.samples, other.samples)
