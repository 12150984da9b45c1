import numpy as np
import pytest

from maskbeam.metrics import ci_sdr
from maskbeam.nnet import MaskEstimator
from maskbeam.pipeline import SpeechEnhancer
from maskbeam.sim import mix_scene, sample_scene, synthetic_speech

FS = 16000


@pytest.fixture(scope="module")
def rendered_scene():
    scene = sample_scene("circular7", seed=77, num_directional=0)
    clean = synthetic_speech(2 * FS, seed=78)
    return scene, mix_scene(clean, scene)


def test_oracle_enhancement_improves_ci_sdr(rendered_scene):
    scene, mix = rendered_scene
    enhancer = SpeechEnhancer(mask_source="oracle", reference="auto")
    out, info = enhancer.enhance(mix.mixture, mix.early_image)
    assert out.num_channels == 1
    assert out.num_samples == mix.mixture.num_samples
    assert 0 <= info.reference < 7

    closest = scene.closest_mic()
    reference = mix.early_image.channel(closest)
    input_sdr = ci_sdr(reference, mix.mixture.channel(closest))
    output_sdr = ci_sdr(reference, out)
    assert output_sdr > input_sdr


def test_mask_floor_zero_matches_plain_path(rendered_scene):
    _, mix = rendered_scene
    plain, _ = SpeechEnhancer(mask_source="oracle").enhance(mix.mixture, mix.early_image)
    floored, _ = SpeechEnhancer(mask_source="oracle", mask_floor_db=0.0).enhance(
        mix.mixture, mix.early_image
    )
    np.testing.assert_array_equal(plain.samples, floored.samples)


def test_mask_floor_negative_changes_output(rendered_scene):
    _, mix = rendered_scene
    plain, _ = SpeechEnhancer(mask_source="oracle").enhance(mix.mixture, mix.early_image)
    masked, _ = SpeechEnhancer(mask_source="oracle", mask_floor_db=-6.0).enhance(
        mix.mixture, mix.early_image
    )
    assert not np.array_equal(plain.samples, masked.samples)


def test_oracle_requires_early_image(rendered_scene):
    _, mix = rendered_scene
    with pytest.raises(ValueError, match="early"):
        SpeechEnhancer(mask_source="oracle").enhance(mix.mixture)


def test_fixed_reference(rendered_scene):
    _, mix = rendered_scene
    out, info = SpeechEnhancer(mask_source="oracle", reference=3).enhance(
        mix.mixture, mix.early_image
    )
    assert info.reference == 3


def test_single_channel_auto_equals_fixed():
    scene = sample_scene("circular7", seed=79, num_directional=0)
    clean = synthetic_speech(FS, seed=80)
    mix = mix_scene(clean, scene)
    mono_mix = mix.mixture.select_channels([2])
    mono_early = mix.early_image.select_channels([2])
    auto, info_a = SpeechEnhancer(mask_source="oracle", reference="auto").enhance(
        mono_mix, mono_early
    )
    fixed, info_f = SpeechEnhancer(mask_source="oracle", reference=0).enhance(
        mono_mix, mono_early
    )
    assert info_a.reference == info_f.reference == 0
    np.testing.assert_array_equal(auto.samples, fixed.samples)


def test_estimator_mask_path(rendered_scene):
    _, mix = rendered_scene
    estimator = MaskEstimator(
        num_freq_bins=257, hidden=32, heads=4, conv_kernel=7,
        layers_per_block=(1, 1), reduction_after_block=1, seed=5,
    )
    enhancer = SpeechEnhancer(mask_source=estimator, reference="auto")
    out, info = enhancer.enhance(mix.mixture)
    assert out.num_samples == mix.mixture.num_samples
    assert np.all(np.isfinite(out.samples))
    # transform() works without the early image in estimator mode
    out2 = enhancer.transform(mix.mixture)
    np.testing.assert_array_equal(out2.samples, out.samples)


def test_transform_rejected_in_oracle_mode(rendered_scene):
    _, mix = rendered_scene
    with pytest.raises(ValueError, match="early"):
        SpeechEnhancer(mask_source="oracle").transform(mix.mixture)


def test_enhancer_get_params():
    params = SpeechEnhancer(mask_floor_db=-6.0).get_params()
    assert params["mask_floor_db"] == -6.0
    assert params["reference"] == "auto"
