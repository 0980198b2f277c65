import math

import numpy as np
import pytest

from pseudoview.accumulate import (
    AccumulationConfig,
    accumulate,
    points_in_box,
    repose_object_points,
    voxel_downsample,
)
from pseudoview.cloud import ColoredPointCloud
from pseudoview.colorize import colorize_frame
from pseudoview.errors import ConfigurationError
from pseudoview.geometry import RigidTransform


def _pose(x, y, z, yaw=0.0):
    return RigidTransform.from_translation(x, y, z).compose(
        RigidTransform.from_rotation_z(yaw)
    )


def test_repose_pure_translation():
    src = _pose(0, 0, 0)
    dst = _pose(3, 0, 0)
    out = repose_object_points(np.array([[1.0, 1.0, 0.0]]), src, dst)
    np.testing.assert_allclose(out, [[4.0, 1.0, 0.0]])


def test_repose_identity():
    pose = _pose(2, -1, 0.5, yaw=0.3)
    pts = np.random.default_rng(0).normal(size=(10, 3))
    np.testing.assert_allclose(repose_object_points(pts, pose, pose), pts, atol=1e-12)


def test_repose_yaw_about_center():
    center = np.array([5.0, 2.0, 1.0])
    src = RigidTransform(np.eye(3), center)
    dst = RigidTransform(
        RigidTransform.from_rotation_z(math.pi / 2).rotation, center
    )
    out = repose_object_points((center + [1.0, 0.0, 0.0])[None], src, dst)
    np.testing.assert_allclose(out[0], center + [0.0, 1.0, 0.0], atol=1e-6)


def test_points_in_box_dilation():
    pose = RigidTransform.identity()
    size = (2.0, 2.0, 2.0)
    pts = np.array([[1.05, 0, 0], [1.15, 0, 0]])
    inside = points_in_box(pts, pose, size)  # half extent 1.0 + 0.1 dilation
    np.testing.assert_array_equal(inside, [True, False])


def _colored(scene, frames):
    return {f: colorize_frame(scene, f) for f in frames}


def test_radius_zero_is_identity(fixture_scene):
    colored = _colored(fixture_scene, [2])
    out = accumulate(fixture_scene, colored, 2, AccumulationConfig(radius=0))
    np.testing.assert_array_equal(out.positions, colored[2].positions)
    np.testing.assert_array_equal(out.colors, colored[2].colors)
    np.testing.assert_array_equal(out.source_frames, colored[2].source_frames)
    assert out.frame_index == 2


def test_static_synthetic_scene_counts_and_center_invariance():
    # Purely synthetic static scene: no objects, N points per frame.
    from pseudoview.scene import Frame, SceneSequence

    rng = np.random.default_rng(4)
    base = rng.uniform(-10, 10, (40, 3))
    frames = []
    clouds = {}
    for f in range(7):
        frames.append(
            Frame(f, 0.1 * f, RigidTransform.identity(), np.zeros((0, 4), np.float32),
                  None, {}, ())
        )
        clouds[f] = ColoredPointCloud(
            base, np.full((40, 3), 9, np.uint8), np.full(40, f, np.int32), f
        )
    scene = SceneSequence(tuple(frames), ())
    out = accumulate(scene, clouds, 3, AccumulationConfig(radius=2))
    assert len(out) == 5 * 40

    # World positions invariant to the center frame choice (set equality).
    alt = accumulate(scene, clouds, 2, AccumulationConfig(radius=2))
    a = {tuple(np.round(p, 6)) for p in out.positions}
    b = {tuple(np.round(p, 6)) for p in alt.positions}
    assert a == b


def test_moving_box_copies_coincide(fixture_scene):
    # Fixture box moves (1, 0, 0) m/frame with 4 interior points.
    colored = _colored(fixture_scene, [1, 2, 3])
    out = accumulate(fixture_scene, colored, 2, AccumulationConfig(radius=1))

    center_frame = fixture_scene.frames[2]
    box = next(b for b in center_frame.objects if b.track_id == "mv1")
    merged_inside = out.positions[points_in_box(out.positions, box.world_from_box, box.size)]
    # 3 window frames x 4 interior points, all re-posed onto the center pose.
    assert len(merged_inside) == 12
    unique = np.unique(np.round(merged_inside, 6), axis=0)
    assert len(unique) == 4

    by_source = {}
    for p, sf in zip(out.positions, out.source_frames):
        if points_in_box(p[None], box.world_from_box, box.size)[0]:
            by_source.setdefault(sf, []).append(p)
    ref = np.sort(np.round(by_source[2], 6), axis=0)
    for sf, pts in by_source.items():
        np.testing.assert_allclose(np.sort(np.round(pts, 6), axis=0), ref, atol=1e-6)


def test_without_reposing_copies_spread_by_velocity(fixture_scene):
    colored = _colored(fixture_scene, [1, 2, 3])
    out = accumulate(
        fixture_scene, colored, 2, AccumulationConfig(radius=1), repose_moving=False
    )
    box = next(b for b in fixture_scene.frames[2].objects if b.track_id == "mv1")
    # Box interior points from frame 1 sit exactly 1 m behind their frame-2
    # copies along x (velocity 1 m/frame, gap 1 frame).
    f1 = sorted(
        (tuple(np.round(p, 6)) for p, sf in zip(out.positions, out.source_frames)
         if sf == 1 and abs(p[1] - box.world_from_box.translation[1]) < 1.2
         and abs(p[0] - (box.world_from_box.translation[0] - 1.0)) < 1.2),
    )
    f2 = sorted(
        (tuple(np.round(p, 6)) for p, sf in zip(out.positions, out.source_frames)
         if sf == 2 and points_in_box(p[None], box.world_from_box, box.size)[0]),
    )
    assert len(f1) == len(f2) == 4
    for a, b in zip(f1, f2):
        np.testing.assert_allclose(np.subtract(b, a), [1.0, 0.0, 0.0], atol=1e-6)


def test_absent_track_points_dropped():
    # Track exists at frame 0 but not at frame 1 (the center): its box points
    # from frame 0 must be dropped; background passes through.
    from pseudoview.scene import Frame, ObjectBox, SceneSequence

    box0 = ObjectBox("gone", RigidTransform.from_translation(5, 0, 0), (2, 2, 2), True)
    frames = (
        Frame(0, 0.0, RigidTransform.identity(), np.zeros((0, 4), np.float32), None, {}, (box0,)),
        Frame(1, 0.1, RigidTransform.identity(), np.zeros((0, 4), np.float32), None, {}, ()),
    )
    scene = SceneSequence(frames, ())
    clouds = {
        0: ColoredPointCloud(
            np.array([[5.0, 0.0, 0.0], [20.0, 0.0, 0.0]]),
            np.full((2, 3), 5, np.uint8), np.zeros(2, np.int32), 0,
        ),
        1: ColoredPointCloud(
            np.array([[21.0, 0.0, 0.0]]), np.full((1, 3), 6, np.uint8), np.ones(1, np.int32), 1
        ),
    }
    out = accumulate(scene, clouds, 1, AccumulationConfig(radius=1))
    assert len(out) == 2  # one frame-0 background point + one frame-1 point
    assert not points_in_box(out.positions, box0.world_from_box, box0.size).any()


def test_output_size_accounting(fixture_scene):
    colored = _colored(fixture_scene, [0, 1, 2, 3, 4])
    out = accumulate(fixture_scene, colored, 2, AccumulationConfig(radius=2))
    # mv1 exists at every frame, so nothing is dropped.
    assert len(out) == sum(len(colored[f]) for f in range(5))


def test_static_box_points_pass_through(overlap_scene):
    colored = {f: colorize_frame(overlap_scene, f) for f in [0, 1, 2]}
    out = accumulate(overlap_scene, colored, 1, AccumulationConfig(radius=1))
    box = next(b for b in overlap_scene.frames[1].objects if b.track_id == "st1")
    # Static box contents stay where each frame observed them.
    inside0 = colored[0].positions[points_in_box(colored[0].positions, box.world_from_box, box.size)]
    merged0 = out.positions[(out.source_frames == 0) & points_in_box(out.positions, box.world_from_box, box.size)]
    np.testing.assert_array_equal(np.sort(merged0, axis=0), np.sort(inside0, axis=0))


def test_missing_window_cloud_raises(fixture_scene):
    with pytest.raises(ConfigurationError, match="frame 1"):
        accumulate(fixture_scene, {2: colorize_frame(fixture_scene, 2)}, 2,
                   AccumulationConfig(radius=1))


def test_voxel_downsample_keeps_nearest_to_center():
    cloud = ColoredPointCloud(
        np.array([[0.29, 0.29, 0.29], [0.24, 0.24, 0.24], [0.9, 0.9, 0.9]]),
        np.array([[1, 1, 1], [2, 2, 2], [3, 3, 3]], np.uint8),
        np.zeros(3, np.int32),
        0,
    )
    out = voxel_downsample(cloud, 0.5)  # voxel centers at 0.25 and 0.75
    assert len(out) == 2
    np.testing.assert_array_equal(out.colors[0], [2, 2, 2])  # 0.24 beats 0.29
    np.testing.assert_array_equal(out.colors[1], [3, 3, 3])


def test_voxel_downsample_preserves_row_order():
    rng = np.random.default_rng(8)
    cloud = ColoredPointCloud(
        rng.uniform(0, 4, (200, 3)),
        rng.integers(0, 256, (200, 3), dtype=np.uint8),
        rng.integers(0, 3, 200, dtype=np.int32),
        0,
    )
    out = voxel_downsample(cloud, 1.0)
    rows = [np.flatnonzero((cloud.positions == p).all(axis=1))[0] for p in out.positions]
    assert rows == sorted(rows)
