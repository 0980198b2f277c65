import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_rigid_transform

from pseudoview.geometry import (
    CameraIntrinsics,
    RigidTransform,
    project_to_pixel,
    unproject_pixel,
)


def test_compose_identity():
    t = RigidTransform.from_translation(1.0, -2.0, 3.0)
    out = RigidTransform.identity().compose(t)
    np.testing.assert_allclose(out.matrix(), t.matrix())


def test_compose_inverse_is_identity():
    rng = np.random.default_rng(0)
    t = random_rigid_transform(rng)
    eye = t.compose(t.invert())
    np.testing.assert_allclose(eye.matrix(), np.eye(4), atol=1e-6)


def test_compose_translations_commute():
    a = RigidTransform.from_translation(1, 0, 0)
    b = RigidTransform.from_translation(0, 2, 0)
    np.testing.assert_allclose(a.compose(b).translation, [1, 2, 0])


def test_transform_points_identity_and_translation():
    p = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_array_equal(RigidTransform.identity().apply(p), p)
    np.testing.assert_allclose(
        RigidTransform.from_translation(0, 0, 5).apply(np.zeros((1, 3))), [[0, 0, 5]]
    )


def test_yaw_90_rotates_x_to_y():
    t = RigidTransform.from_rotation_z(math.pi / 2)
    out = t.apply(np.array([1.0, 0.0, 0.0]))
    # Hand-evaluated Rz(90): columns (0,1,0), (-1,0,0), (0,0,1).
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]) @ np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(out, [0.0, 1.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(out, expected, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_rigid_transform(rng) for _ in range(3))
    left = a.compose(b).compose(c)
    right = a.compose(b.compose(c))
    assert np.max(np.abs(left.matrix() - right.matrix())) < 1e-6


@given(st.integers(0, 2**32 - 1), st.integers(2, 2000))
@settings(max_examples=20, deadline=None)
def test_transform_preserves_pairwise_distances(seed, n):
    rng = np.random.default_rng(seed)
    t = random_rigid_transform(rng)
    pts = rng.uniform(-50, 50, (n, 3))
    out = t.apply(pts)
    picks = rng.integers(0, n, (min(200, n), 2))
    d_in = np.linalg.norm(pts[picks[:, 0]] - pts[picks[:, 1]], axis=1)
    d_out = np.linalg.norm(out[picks[:, 0]] - out[picks[:, 1]], axis=1)
    assert np.max(np.abs(d_in - d_out)) < 1e-6


def test_transform_large_cloud_distances():
    rng = np.random.default_rng(3)
    t = random_rigid_transform(rng)
    pts = rng.uniform(-100, 100, (100_000, 3))
    out = t.apply(pts)
    picks = rng.integers(0, len(pts), (500, 2))
    d_in = np.linalg.norm(pts[picks[:, 0]] - pts[picks[:, 1]], axis=1)
    d_out = np.linalg.norm(out[picks[:, 0]] - out[picks[:, 1]], axis=1)
    assert np.max(np.abs(d_in - d_out)) < 1e-6


def test_project_optical_axis():
    k = CameraIntrinsics(100, 100, 320, 240, 640, 480)
    assert project_to_pixel(k, (0, 0, 5)) == (320, 240, 5)


def test_project_hand_evaluated():
    k = CameraIntrinsics(100, 100, 0, 0, 640, 480)
    u, v, depth = project_to_pixel(k, (1, 2, 4))
    assert (u, v, depth) == (25.0, 50.0, 4.0)


def test_project_behind_camera_is_marker():
    k = CameraIntrinsics(100, 100, 0, 0, 640, 480)
    assert project_to_pixel(k, (1, 1, -2)) is None
    assert project_to_pixel(k, (0, 0, 0.05)) is None  # inside the near plane


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_project_unproject_round_trip(seed):
    rng = np.random.default_rng(seed)
    k = CameraIntrinsics(
        rng.uniform(50, 500), rng.uniform(50, 500),
        rng.uniform(0, 640), rng.uniform(0, 480), 640, 480,
    )
    p = np.array([rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0.2, 80)])
    u, v, depth = project_to_pixel(k, p)
    back = unproject_pixel(k, u, v, depth)
    assert np.max(np.abs(back - p)) < 1e-5


def test_intrinsics_validation():
    from pseudoview.errors import SceneValidationError

    with pytest.raises(SceneValidationError):
        CameraIntrinsics(0, 100, 0, 0, 64, 64).require_valid()
    with pytest.raises(SceneValidationError):
        CameraIntrinsics(100, 100, 0, 0, 0, 64).require_valid()


def test_rotation_validation_rejects_sheared_matrix():
    from pseudoview.errors import SceneValidationError

    bad = RigidTransform(np.array([[1, 0.1, 0], [0, 1, 0], [0, 0, 1.0]]), np.zeros(3))
    with pytest.raises(SceneValidationError):
        bad.require_valid()
