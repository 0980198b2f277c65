import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures_scene import make_fixture_scene

from pseudoview.cloud import (
    ColoredPointCloud,
    read_colored_points,
    read_raw_points,
    write_colored_points,
    write_raw_points,
)
from pseudoview.errors import FormatError, SceneLoadError, SceneValidationError
from pseudoview.scene import load_scene


def test_load_fixture_scene(fixture_manifest):
    scene = load_scene(fixture_manifest)
    assert len(scene) == 6
    assert scene.camera_names == ("FRONT", "LEFT")
    frame = scene.frames[0]
    assert frame.lidar.shape[1] == 4
    assert set(frame.cameras) == {"FRONT", "LEFT"}
    assert frame.objects[0].track_id == "mv1"
    assert frame.objects[0].is_moving


def test_load_is_deterministic(fixture_manifest):
    a = load_scene(fixture_manifest)
    b = load_scene(fixture_manifest)
    assert len(a) == len(b)
    for fa, fb in zip(a.frames, b.frames):
        np.testing.assert_array_equal(fa.lidar, fb.lidar)
        np.testing.assert_array_equal(
            fa.world_from_ego.matrix(), fb.world_from_ego.matrix()
        )


def test_missing_manifest_raises_load_error(tmp_path):
    with pytest.raises(SceneLoadError, match="not found"):
        load_scene(tmp_path / "nope.json")


def test_empty_frames_rejected(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text(json.dumps({"camera_names": ["FRONT"], "frames": []}))
    with pytest.raises(SceneValidationError, match="scene has no frames"):
        load_scene(path)


def test_non_increasing_timestamps_cite_frame(tmp_path):
    manifest = make_fixture_scene(tmp_path, n_frames=3)
    doc = json.loads(manifest.read_text())
    doc["frames"][1]["timestamp"] = doc["frames"][0]["timestamp"]
    manifest.write_text(json.dumps(doc))
    with pytest.raises(SceneValidationError, match="frame 1.*timestamp"):
        load_scene(manifest)


def test_missing_lidar_file_names_path(tmp_path):
    manifest = make_fixture_scene(tmp_path, n_frames=2)
    doc = json.loads(manifest.read_text())
    doc["frames"][0]["lidar"] = "lidar/absent.fvpc"
    manifest.write_text(json.dumps(doc))
    with pytest.raises(SceneLoadError, match="absent.fvpc"):
        load_scene(manifest)


def test_missing_camera_entry_rejected(tmp_path):
    manifest = make_fixture_scene(tmp_path, n_frames=2)
    doc = json.loads(manifest.read_text())
    del doc["frames"][1]["cameras"]["LEFT"]
    manifest.write_text(json.dumps(doc))
    with pytest.raises(SceneValidationError, match="frame 1.*LEFT"):
        load_scene(manifest)


def test_bad_box_size_rejected(tmp_path):
    manifest = make_fixture_scene(tmp_path, n_frames=2)
    doc = json.loads(manifest.read_text())
    doc["frames"][0]["objects"][0]["size"] = [2.0, 0.0, 2.0]
    manifest.write_text(json.dumps(doc))
    with pytest.raises(SceneValidationError, match="size"):
        load_scene(manifest)


def test_moving_flag_derived_when_absent(tmp_path):
    manifest = make_fixture_scene(tmp_path, n_frames=3)
    doc = json.loads(manifest.read_text())
    for frame in doc["frames"]:
        for obj in frame["objects"]:
            del obj["is_moving"]
    manifest.write_text(json.dumps(doc))
    scene = load_scene(manifest)
    assert scene.frames[0].objects[0].is_moving  # moves 1 m per frame


def test_raw_points_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(1000, 4)).astype(np.float32)
    path = tmp_path / "sweep.fvpc"
    write_raw_points(path, pts)
    np.testing.assert_array_equal(read_raw_points(path), pts)


def test_raw_points_bad_magic(tmp_path):
    path = tmp_path / "bad.fvpc"
    path.write_bytes(b"XXXX" + b"\x00" * 4)
    with pytest.raises(FormatError, match="magic"):
        read_raw_points(path)


def test_raw_points_truncated_reports_counts(tmp_path):
    path = tmp_path / "short.fvpc"
    path.write_bytes(b"FVPC" + np.uint32(10).tobytes() + b"\x00" * 16)
    with pytest.raises(FormatError, match="16 bytes, expected 160"):
        read_raw_points(path)


def _random_cloud(rng, n, frame_index=0):
    return ColoredPointCloud(
        rng.uniform(-100, 100, (n, 3)).astype(np.float32).astype(np.float64),
        rng.integers(0, 256, (n, 3), dtype=np.uint8),
        frame_index + rng.integers(-2, 3, n, dtype=np.int32),
        frame_index,
    )


def test_colored_round_trip_exact(tmp_path):
    rng = np.random.default_rng(1)
    cloud = _random_cloud(rng, 1000, frame_index=5)
    path = tmp_path / "cloud.fvcp"
    write_colored_points(path, cloud)
    back = read_colored_points(path, frame_index=5)
    np.testing.assert_array_equal(back.positions, cloud.positions)
    np.testing.assert_array_equal(back.colors, cloud.colors)
    np.testing.assert_array_equal(back.source_frames, cloud.source_frames)
    assert back.frame_index == cloud.frame_index


def test_colored_empty_round_trip(tmp_path):
    path = tmp_path / "empty.fvcp"
    write_colored_points(path, ColoredPointCloud.empty(3))
    back = read_colored_points(path, frame_index=3)
    assert len(back) == 0


def test_colored_bad_magic(tmp_path):
    path = tmp_path / "bad.fvcp"
    path.write_bytes(b"FVPC" + np.uint32(0).tobytes())
    with pytest.raises(FormatError, match="magic"):
        read_colored_points(path)


def test_colored_truncated(tmp_path):
    path = tmp_path / "short.fvcp"
    path.write_bytes(b"FVCP" + np.uint32(2).tobytes() + b"\x00" * 20)
    with pytest.raises(FormatError, match="20 bytes, expected 40"):
        read_colored_points(path)


def test_colored_record_size_is_20_bytes(tmp_path):
    rng = np.random.default_rng(2)
    cloud = _random_cloud(rng, 7)
    path = tmp_path / "cloud.fvcp"
    write_colored_points(path, cloud)
    assert path.stat().st_size == 8 + 7 * 20


@given(st.integers(0, 2**32 - 1), st.integers(0, 3000))
@settings(max_examples=25, deadline=None)
def test_colored_round_trip_property(tmp_path_factory, seed, n):
    rng = np.random.default_rng(seed)
    cloud = _random_cloud(rng, n, frame_index=int(rng.integers(0, 50)))
    path = tmp_path_factory.mktemp("rt") / "c.fvcp"
    write_colored_points(path, cloud)
    back = read_colored_points(path, frame_index=cloud.frame_index)
    np.testing.assert_array_equal(back.positions, cloud.positions)
    np.testing.assert_array_equal(back.colors, cloud.colors)
    np.testing.assert_array_equal(back.source_frames, cloud.source_frames)


def test_colored_round_trip_large(tmp_path):
    rng = np.random.default_rng(9)
    cloud = _random_cloud(rng, 1_000_000, frame_index=10)
    path = tmp_path / "big.fvcp"
    write_colored_points(path, cloud)
    back = read_colored_points(path, frame_index=10)
    np.testing.assert_array_equal(back.positions, cloud.positions)
    np.testing.assert_array_equal(back.colors, cloud.colors)
