import numpy as np
import pytest

from maskbeam.sim.scene import (
    RoomScene,
    circular_array,
    rectangular_array,
    sabine_absorption,
    sample_scene,
)


def test_circular_geometry():
    mics = circular_array([2.0, 3.0, 1.2], yaw=0.3)
    assert mics.shape == (7, 3)
    center = mics[6]
    np.testing.assert_allclose(center, [2.0, 3.0, 1.2])
    radii = np.linalg.norm(mics[:6] - center, axis=1)
    np.testing.assert_allclose(radii, 0.035, atol=1e-12)
    # opposite rim microphones sit a diameter apart
    for a, b in ((0, 3), (1, 4), (2, 5)):
        assert np.linalg.norm(mics[a] - mics[b]) == pytest.approx(0.07, abs=1e-9)


def test_rectangular_geometry():
    mics = rectangular_array([1.0, 1.0, 1.3], yaw=0.0)
    assert mics.shape == (6, 3)
    # rows 19 cm apart, columns spanning 20 cm
    np.testing.assert_allclose(np.linalg.norm(mics[0] - mics[3]), 0.19, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(mics[0] - mics[2]), 0.20, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(mics[1] - mics[4]), 0.19, atol=1e-12)


def test_rectangular_geometry_rotation_invariant_spacing():
    mics = rectangular_array([1.0, 1.0, 1.3], yaw=1.1)
    np.testing.assert_allclose(np.linalg.norm(mics[0] - mics[2]), 0.20, atol=1e-12)
    np.testing.assert_allclose(mics[:, 2], 1.3)


@pytest.mark.parametrize("kind,num_mics", [("circular7", 7), ("rectangular6", 6), ("random", 6)])
def test_sampled_scene_constraints(kind, num_mics):
    for seed in range(25):
        scene = sample_scene(kind, seed)
        assert scene.num_mics == num_mics
        w, l, h = scene.room_dims
        assert 3.0 <= w <= 7.0 and 3.0 <= l <= 9.0 and 2.3 <= h <= 3.5
        assert 0.1 <= scene.t60 <= 0.5
        assert 1.4 <= scene.source_pos[2] <= 1.8
        for point in np.vstack([scene.mic_positions, scene.source_pos[None]]):
            assert np.all(point >= 0.5 - 1e-9)
            assert np.all(point <= scene.room_dims - 0.5 + 1e-9)
        if kind == "random":
            assert np.all(scene.mic_positions[:, 2] >= 1.0 - 1e-9)
            assert np.all(scene.mic_positions[:, 2] <= 1.5 + 1e-9)
        else:
            assert 1.0 <= scene.mic_positions[0, 2] <= 1.5
        assert -5.0 <= scene.noise_plan.diffuse_rsnr_db <= 20.0
        assert 0 <= len(scene.noise_plan.directional) <= 3
        for src in scene.noise_plan.directional:
            assert -5.0 <= src.rsnr_db <= 20.0
            assert np.all(src.position >= 0.5 - 1e-9)
            assert np.all(src.position <= scene.room_dims - 0.5 + 1e-9)
        assert sabine_absorption(scene.room_dims, scene.t60) <= 0.95


def test_thousand_scene_wall_margin_sweep():
    # broad constraint sweep across many seeds (geometry only, no rendering)
    for seed in range(1000):
        scene = sample_scene("circular7", seed)
        points = np.vstack([scene.mic_positions, scene.source_pos[None]])
        assert np.all(points >= 0.5 - 1e-9)
        assert np.all(points <= scene.room_dims - 0.5 + 1e-9)
        assert 0.1 <= scene.t60 <= 0.5


def test_determinism():
    a = sample_scene("circular7", 123)
    b = sample_scene("circular7", 123)
    np.testing.assert_array_equal(a.mic_positions, b.mic_positions)
    np.testing.assert_array_equal(a.source_pos, b.source_pos)
    assert a.t60 == b.t60
    assert a.noise_plan.diffuse_rsnr_db == b.noise_plan.diffuse_rsnr_db
    c = sample_scene("circular7", 124)
    assert not np.array_equal(a.source_pos, c.source_pos)


def test_directional_count_override():
    for count in range(4):
        scene = sample_scene("circular7", 5, num_directional=count)
        assert len(scene.noise_plan.directional) == count
    with pytest.raises(ValueError):
        sample_scene("circular7", 5, num_directional=4)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown array kind"):
        sample_scene("octagon", 0)


def test_explicit_requires_positions():
    with pytest.raises(ValueError, match="requires mic_positions"):
        sample_scene("explicit", 0)
    scene = sample_scene("explicit", 0, mic_positions=[[1.0, 1.0, 1.2], [1.2, 1.0, 1.2]])
    assert scene.num_mics == 2


def test_unsatisfiable_constraints_error_after_retries():
    # positions outside every sampleable room exhaust the retry budget
    with pytest.raises(RuntimeError, match="could not sample"):
        sample_scene("explicit", 0, mic_positions=[[20.0, 20.0, 1.2]], max_tries=20)


def test_scene_json_roundtrip(tmp_path):
    scene = sample_scene("rectangular6", 9, num_directional=2)
    path = tmp_path / "scene.json"
    scene.save(path)
    loaded = RoomScene.load(path)
    np.testing.assert_array_equal(loaded.mic_positions, scene.mic_positions)
    np.testing.assert_array_equal(loaded.source_pos, scene.source_pos)
    assert loaded.t60 == scene.t60
    assert loaded.seed == scene.seed
    assert loaded.noise_plan.diffuse_rsnr_db == scene.noise_plan.diffuse_rsnr_db
    assert len(loaded.noise_plan.directional) == 2
    np.testing.assert_array_equal(
        loaded.noise_plan.directional[1].position, scene.noise_plan.directional[1].position
    )
    # the scene file is human-readable structured text
    text = path.read_text()
    assert "room_dims" in text and "t60" in text and "noise_plan" in text


def test_closest_mic():
    scene = RoomScene(
        room_dims=[5.0, 5.0, 3.0],
        t60=0.3,
        source_pos=[1.0, 1.0, 1.5],
        mic_positions=np.array([[4.0, 4.0, 1.2], [1.5, 1.0, 1.2], [3.0, 3.0, 1.2]]),
        array_kind="explicit",
        noise_plan=None,
        seed=0,
    )
    assert scene.closest_mic() == 1
