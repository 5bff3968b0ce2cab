import json
import math

import numpy as np
import pytest

from elidmap.errors import FileNotFound, MalformedScene
from elidmap.geometry import EulerAngles, apply_transform
from elidmap.imu import STANDARD_GRAVITY as G
from elidmap.rotation import extract_middle_ring
from elidmap.simulator import (
    Box,
    SceneSpec,
    SensorPose,
    face_normal,
    ground_truth_transform,
    load_scene,
    parse_scene,
    render_frame,
    render_imu,
    scene_to_dict,
    trace_frame,
)


def empty_room(size=(4.0, 4.0, 3.0), sensors=(), obstacles=()):
    return SceneSpec(Box(np.zeros(3), np.array(size)), tuple(obstacles), tuple(sensors))


def centered_sensor(size=(4.0, 4.0, 3.0), **kw):
    pos = np.array(size) / 2.0
    return SensorPose(pos, EulerAngles(0, 0, 0), **kw)


def surface_residual(scene, world_points, faces):
    """Distance of each point from the plane its ray was reported to hit."""
    res = np.empty(len(world_points))
    for i, (p, code) in enumerate(zip(world_points, faces)):
        box_i, rem = divmod(int(code), 6)
        axis, side = divmod(rem, 2)
        box = scene.room if box_i == 0 else scene.obstacles[box_i - 1]
        bound = box.max_corner[axis] if side else box.min_corner[axis]
        res[i] = abs(p[axis] - bound)
    return res


class TestSceneValidation:
    def test_obstacle_must_be_inside(self):
        with pytest.raises(MalformedScene):
            empty_room(obstacles=[Box(np.array([3.0, 1.0, 0.5]),
                                      np.array([5.0, 2.0, 1.0]))])

    def test_sensor_must_be_inside_room(self):
        with pytest.raises(MalformedScene):
            empty_room(sensors=[SensorPose(np.array([9.0, 1.0, 1.0]),
                                           EulerAngles(0, 0, 0))])

    def test_sensor_not_inside_obstacle(self):
        ob = Box(np.array([1.0, 1.0, 0.5]), np.array([3.0, 3.0, 2.5]))
        with pytest.raises(MalformedScene):
            empty_room(obstacles=[ob],
                       sensors=[SensorPose(np.array([2.0, 2.0, 1.0]),
                                           EulerAngles(0, 0, 0))])

    def test_ring_count_minimum(self):
        with pytest.raises(MalformedScene):
            SensorPose(np.ones(3), EulerAngles(0, 0, 0), ring_count=2)


class TestTraceAndRender:
    def test_noiseless_points_lie_on_surfaces(self):
        scene = empty_room(sensors=[centered_sensor()])
        tr = trace_frame(scene, 0)
        res = surface_residual(scene, tr.points_world, tr.faces)
        assert res.max() < 1e-9

    def test_middle_ring_at_sensor_height_for_odd_rings(self):
        # 17 rings: the middle ring is the horizontal FoV midline.
        scene = empty_room(sensors=[centered_sensor(ring_count=17, azimuth_steps=64)])
        cloud = render_frame(scene, 0)
        mid = extract_middle_ring(cloud)
        z = cloud.xyz[cloud.ring_indices(mid), 2]
        assert np.abs(z).max() < 1e-9  # sensor frame: midline stays at z = 0

    def test_ring_indices_match_elevation_bands(self):
        sensor = centered_sensor(ring_count=5, azimuth_steps=32, vertical_fov_deg=40)
        scene = empty_room(sensors=[sensor])
        cloud = render_frame(scene, 0)
        elev = np.degrees(np.arctan2(cloud.xyz[:, 2],
                                     np.hypot(cloud.xyz[:, 0], cloud.xyz[:, 1])))
        for ring in range(5):
            expected = -20.0 + ring * 10.0
            band = elev[cloud.ring_indices(ring)]
            assert np.abs(band - expected).max() < 1e-9

    def test_azimuth_order_within_ring(self):
        scene = empty_room(sensors=[centered_sensor(azimuth_steps=64)])
        cloud = render_frame(scene, 0)
        az = np.arctan2(cloud.xyz[:, 1], cloud.xyz[:, 0]) % (2 * math.pi)
        ring0 = az[cloud.ring_indices(8)]
        assert np.all(np.diff(ring0) > -1e-12)

    def test_determinism(self):
        scene = empty_room(sensors=[centered_sensor(azimuth_steps=64)])
        a = render_frame(scene, 0, range_noise_sigma=0.02, seed=5)
        b = render_frame(scene, 0, range_noise_sigma=0.02, seed=5)
        assert a == b
        c = render_frame(scene, 0, range_noise_sigma=0.02, seed=6)
        assert not np.array_equal(a.xyz, c.xyz)

    def test_obstacle_blocks_wall(self):
        ob = Box(np.array([2.5, 1.8, 0.5]), np.array([3.0, 2.2, 2.5]))
        scene = empty_room(sensors=[centered_sensor(azimuth_steps=256)],
                           obstacles=[ob])
        tr = trace_frame(scene, 0)
        # Rays toward +x near the horizontal plane must stop at the obstacle face.
        hits = tr.faces >= 6
        assert hits.any()
        res = surface_residual(scene, tr.points_world[hits], tr.faces[hits])
        assert res.max() < 1e-9

    def test_intensity_distinguishes_surfaces(self):
        ob = Box(np.array([2.5, 1.8, 0.5]), np.array([3.0, 2.2, 2.5]))
        scene = empty_room(sensors=[centered_sensor(azimuth_steps=128)], obstacles=[ob])
        cloud = render_frame(scene, 0)
        assert set(np.unique(cloud.intensity)) == {0.4, 0.8}


class TestGroundTruthTransform:
    def test_same_sensor_identity(self):
        scene = empty_room(sensors=[centered_sensor()])
        t = ground_truth_transform(scene, 0, 0)
        np.testing.assert_allclose(t.homogeneous, np.eye(4), atol=1e-15)

    def test_pure_yaw_pair(self):
        s0 = SensorPose(np.array([2.0, 2.0, 1.5]), EulerAngles(0, 0, 0))
        s1 = SensorPose(np.array([2.0, 2.0, 1.5]), EulerAngles.from_degrees(0, 0, 20))
        scene = empty_room(sensors=[s0, s1])
        t = ground_truth_transform(scene, 0, 1)
        from elidmap.geometry import build_rotation_matrix
        np.testing.assert_allclose(t.rotation,
                                   build_rotation_matrix(EulerAngles.from_degrees(0, 0, 20)),
                                   atol=1e-12)
        np.testing.assert_allclose(t.translation, 0, atol=1e-12)

    def test_pure_translation_pair(self):
        s0 = SensorPose(np.array([1.0, 2.0, 1.5]), EulerAngles(0, 0, 0))
        s1 = SensorPose(np.array([3.0, 2.0, 1.5]), EulerAngles(0, 0, 0))
        scene = empty_room(sensors=[s0, s1])
        t = ground_truth_transform(scene, 0, 1)
        np.testing.assert_allclose(t.rotation, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(t.translation, [2, 0, 0], atol=1e-15)

    def test_transformed_cloud_lands_on_surfaces(self):
        s0 = SensorPose(np.array([1.2, 1.4, 1.5]), EulerAngles.from_degrees(1, -2, 25),
                        azimuth_steps=128)
        s1 = SensorPose(np.array([2.8, 2.3, 1.7]), EulerAngles.from_degrees(-2, 1, -40),
                        azimuth_steps=128)
        scene = empty_room(sensors=[s0, s1])
        cloud_b = render_frame(scene, 1)
        t = ground_truth_transform(scene, 0, 1)
        in_a = apply_transform(cloud_b, t)
        world = in_a.xyz @ s0.rotation.T + s0.position
        tr_b = trace_frame(scene, 1)
        res = surface_residual(scene, world, tr_b.faces)
        assert res.max() < 1e-9


class TestRenderImu:
    def test_level_reads_plus_g_on_z(self):
        pose = centered_sensor()
        samples = render_imu(pose, n_samples=3)
        for s in samples:
            np.testing.assert_allclose(s.vector, [0, 0, G], atol=1e-12)

    def test_rolled_pose_matches_analytic_rotation(self):
        pose = SensorPose(np.ones(3), EulerAngles.from_degrees(30, 0, 0))
        sample = render_imu(pose, n_samples=1)[0]
        from elidmap.geometry import build_rotation_matrix
        expected = build_rotation_matrix(EulerAngles.from_degrees(30, 0, 0)).T @ [0, 0, G]
        np.testing.assert_allclose(sample.vector, expected, atol=1e-12)

    def test_timestamps_increase(self):
        samples = render_imu(centered_sensor(), n_samples=5, rate_hz=100)
        ts = [s.timestamp_ns for s in samples]
        assert ts == sorted(ts) and len(set(ts)) == 5


class TestSceneJson:
    def test_round_trip(self, tmp_path):
        scene = empty_room(
            sensors=[SensorPose(np.array([1.0, 2.0, 1.5]),
                                EulerAngles.from_degrees(1, 2, 3),
                                ring_count=16, azimuth_steps=256)],
            obstacles=[Box(np.array([0.5, 0.5, 0.1]), np.array([1.5, 1.0, 0.9]))],
        )
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(scene_to_dict(scene)))
        loaded = load_scene(path)
        np.testing.assert_allclose(loaded.room.max_corner, scene.room.max_corner)
        assert len(loaded.obstacles) == 1 and len(loaded.sensors) == 1
        np.testing.assert_allclose(loaded.sensors[0].position, [1, 2, 1.5])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFound):
            load_scene(tmp_path / "absent.json")

    @pytest.mark.parametrize("payload", [
        "[]",
        "{}",
        '{"room": {"size": [1, 2]}}',
        '{"room": {"size": [4, 4, 3]}, "weird": 1}',
        '{"room": {"size": [4, 4, 3]}, "sensors": [{"position": "x"}]}',
        "not json at all {",
    ])
    def test_malformed_scene_files(self, tmp_path, payload):
        path = tmp_path / "bad.json"
        path.write_text(payload)
        with pytest.raises(MalformedScene):
            load_scene(path)

    def test_parse_rejects_non_dict(self):
        with pytest.raises(MalformedScene):
            parse_scene([1, 2, 3])


class TestFaceNormal:
    def test_room_normals_point_inward(self):
        np.testing.assert_array_equal(face_normal(0), [1, 0, 0])   # room min-x wall
        np.testing.assert_array_equal(face_normal(1), [-1, 0, 0])  # room max-x wall

    def test_obstacle_normals_point_outward(self):
        np.testing.assert_array_equal(face_normal(6), [-1, 0, 0])  # obstacle 0 min-x
        np.testing.assert_array_equal(face_normal(11), [0, 0, 1])  # obstacle 0 top
