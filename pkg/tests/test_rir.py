import numpy as np
import pytest

from maskbeam.sim.rir import (
    KERNEL_HALF_WIDTH,
    SPEED_OF_SOUND,
    compute_rir_set,
    image_method_rir,
    reflection_coefficient,
)
from maskbeam.sim.scene import NoisePlan, RoomScene

FS = 16000


def _explicit_scene(room, source, mics, t60):
    return RoomScene(
        room_dims=room,
        t60=t60,
        source_pos=source,
        mic_positions=np.asarray(mics, dtype=float),
        array_kind="explicit",
        noise_plan=NoisePlan(None),
        seed=0,
    )


def _open_space_scene(distance_samples):
    # a huge room whose first reflection arrives long after the analyzed
    # window, so a truncated response contains only the direct path
    d = distance_samples * SPEED_OF_SOUND / FS
    return _explicit_scene(
        [60.0, 60.0, 60.0], [30.0, 30.0, 30.0], [[30.0 + d, 30.0, 30.0]], t60=2.5
    )


def test_direct_path_only_integer_delay():
    scene = _open_space_scene(100)
    rirs = compute_rir_set(scene, length=400)
    h = rirs.responses[0]
    d = 100 * SPEED_OF_SOUND / FS
    expected_amp = 1.0 / (4.0 * np.pi * d)
    assert np.argmax(np.abs(h)) == 100
    assert abs(h[100] - expected_amp) < 1e-12
    assert np.max(np.abs(np.delete(h, 100))) < 1e-9 * expected_amp


def test_fractional_delay_kernel_matches_direct_formula():
    scene = _explicit_scene(
        [60.0, 60.0, 60.0], [30.0, 30.0, 30.0], [[31.7137, 30.0, 30.0]], t60=2.5
    )
    rirs = compute_rir_set(scene, length=300)
    h = rirs.responses[0]
    d = 1.7137
    tau = d / SPEED_OF_SOUND * FS
    n = np.arange(300)
    u = n - tau
    w = KERNEL_HALF_WIDTH
    kernel = np.where(
        np.abs(u) < w, 0.5 * (1.0 + np.cos(np.pi * np.clip(u, -w, w) / w)) * np.sinc(u), 0.0
    )
    np.testing.assert_allclose(h, kernel / (4.0 * np.pi * d), atol=1e-12)


def test_energy_decay_matches_target_t60():
    # moderate absorption, where the Sabine-derived coefficients track the
    # requested reverberation time well
    scene = _explicit_scene([5.0, 6.0, 3.0], [2.0, 3.0, 1.5], [[3.5, 2.0, 1.4]], t60=0.4)
    rirs = compute_rir_set(scene)
    h = rirs.responses[0]
    energy = np.cumsum(h[::-1] ** 2)[::-1]
    edc = 10.0 * np.log10(energy / energy[0] + 1e-30)
    crossing = np.argmax(edc <= -60.0)
    measured = (crossing - rirs.direct_delays[0]) / FS
    assert abs(measured - 0.4) <= 0.3 * 0.4


def test_reciprocity_direct_delay():
    room = [5.0, 6.0, 3.0]
    a, b = [2.0, 3.0, 1.5], [3.5, 2.0, 1.4]
    fwd = compute_rir_set(_explicit_scene(room, a, [b], t60=0.3))
    rev = compute_rir_set(_explicit_scene(room, b, [a], t60=0.3))
    assert fwd.direct_delays[0] == pytest.approx(rev.direct_delays[0], abs=1e-9)


def test_early_late_partition():
    scene = _explicit_scene([5.0, 6.0, 3.0], [2.0, 3.0, 1.5], [[3.5, 2.0, 1.4]], t60=0.3)
    rirs = compute_rir_set(scene)
    np.testing.assert_array_equal(rirs.early(0) + rirs.late(0), rirs.responses[0])
    split = rirs.early_split[0]
    assert np.all(rirs.early(0)[split:] == 0)
    assert np.all(rirs.late(0)[:split] == 0)
    # split sits 50 ms after the direct arrival
    assert split == int(np.floor(rirs.direct_delays[0] + 0.050 * FS)) + 1


def test_no_energy_before_direct_arrival_window():
    scene = _explicit_scene([5.0, 6.0, 3.0], [2.0, 3.0, 1.5], [[4.3, 4.8, 1.4]], t60=0.3)
    rirs = compute_rir_set(scene)
    h = rirs.responses[0]
    first = int(np.floor(rirs.direct_delays[0])) - KERNEL_HALF_WIDTH
    if first > 0:
        assert np.max(np.abs(h[:first])) < 1e-12 * np.max(np.abs(h))


def test_rir_length_covers_t60():
    scene = _explicit_scene([5.0, 6.0, 3.0], [2.0, 3.0, 1.5], [[3.5, 2.0, 1.4]], t60=0.25)
    rirs = compute_rir_set(scene)
    assert rirs.responses.shape[1] >= int(0.25 * FS)


def test_coincident_source_and_mic_rejected():
    scene = _explicit_scene([5.0, 6.0, 3.0], [2.0, 3.0, 1.5], [[2.0, 3.0, 1.5]], t60=0.3)
    with pytest.raises(ValueError, match="coincides"):
        compute_rir_set(scene)


def test_unrealizable_absorption_rejected():
    with pytest.raises(ValueError, match="not realizable"):
        reflection_coefficient([7.0, 9.0, 3.5], 0.05)


def test_determinism():
    scene = _explicit_scene([5.0, 6.0, 3.0], [2.0, 3.0, 1.5], [[3.5, 2.0, 1.4]], t60=0.3)
    a = compute_rir_set(scene)
    b = compute_rir_set(scene)
    np.testing.assert_array_equal(a.responses, b.responses)


def test_single_mic_wrapper_matches_set():
    scene = _explicit_scene(
        [5.0, 6.0, 3.0],
        [2.0, 3.0, 1.5],
        [[3.5, 2.0, 1.4], [1.2, 4.0, 1.1]],
        t60=0.2,
    )
    full = compute_rir_set(scene, length=3000)
    for mic in range(2):
        single = image_method_rir(scene, mic, length=3000)
        np.testing.assert_allclose(single, full.responses[mic], atol=1e-12)
    with pytest.raises(ValueError, match="out of range"):
        image_method_rir(scene, 5)
