"""Rigid-body pose algebra and the pinhole camera model.

Conventions used everywhere in this package:

* Camera frame: x right, y down, z forward along the optical axis.
* Pixel (i, j) covers the half-open square [i, i+1) x [j, j+1); continuous
  image coordinates are rasterized with floor().
* Points closer than ``Z_NEAR`` to the image plane count as behind the
  camera so projection never divides by a near-zero depth.

Projection is evaluated as ``u = fx * (x / z) + cx`` (and likewise for v);
test oracles rely on reproducing that exact operation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SceneValidationError, ShapeError

Z_NEAR = 0.1

_ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion: ``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_matrix(matrix: np.ndarray, validate: bool = False) -> "RigidTransform":
        """Build from a 4x4 homogeneous matrix (row-major)."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise ShapeError(f"expected 4x4 matrix, got {m.shape}")
        t = RigidTransform(m[:3, :3].copy(), m[:3, 3].copy())
        if validate:
            t.require_valid()
        return t

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "RigidTransform":
        return RigidTransform(np.eye(3), np.array([x, y, z], dtype=np.float64))

    @staticmethod
    def from_rotation_z(angle_rad: float) -> "RigidTransform":
        c, s = math.cos(angle_rad), math.sin(angle_rad)
        r = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return RigidTransform(r, np.zeros(3))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return the transform mapping ``x -> self(other(x))``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def invert(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt.copy(), -(rt @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform points, shape (3,) or (N, 3), into the target frame.

        Spelled out component-wise so the floating-point operation order is
        fixed (left-to-right) and identical to a scalar re-implementation.
        """
        p = np.asarray(points, dtype=np.float64)
        single = p.ndim == 1
        if single:
            p = p[None, :]
        r = self.rotation
        t = self.translation
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        out = np.empty_like(p)
        out[:, 0] = x * r[0, 0] + y * r[0, 1] + z * r[0, 2] + t[0]
        out[:, 1] = x * r[1, 0] + y * r[1, 1] + z * r[1, 2] + t[1]
        out[:, 2] = x * r[2, 0] + y * r[2, 1] + z * r[2, 2] + t[2]
        return out[0] if single else out

    def require_valid(self, tol: float = _ORTHO_TOL) -> None:
        """Raise unless the rotation is orthonormal with determinant +1."""
        r = self.rotation
        if r.shape != (3, 3) or self.translation.shape != (3,):
            raise SceneValidationError("rigid transform has wrong array shapes")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(self.translation)):
            raise SceneValidationError("rigid transform contains non-finite values")
        if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
            raise SceneValidationError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > tol:
            raise SceneValidationError("rotation determinant is not +1")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters in pixels plus the raster size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def require_valid(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise SceneValidationError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise SceneValidationError("raster size must be at least 1x1")

    def scaled(self, sx: float, sy: float, width: int, height: int) -> "CameraIntrinsics":
        """Proportionally rescaled intrinsics for a resized raster."""
        return CameraIntrinsics(
            self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy, width, height
        )

    def project(
        self, points_cam: np.ndarray, z_near: float = Z_NEAR
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Project camera-frame points to continuous pixels.

        Returns ``(uv, depth, in_front)`` where ``uv`` is (N, 2) float64,
        ``depth`` is the camera-frame z, and ``in_front`` marks points with
        ``z > z_near``. Pixel values of points behind the camera are
        meaningless and must be masked with ``in_front``.
        """
        p = np.asarray(points_cam, dtype=np.float64)
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        in_front = z > z_near
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * (x / z) + self.cx
            v = self.fy * (y / z) + self.cy
        return np.stack([u, v], axis=1), z, in_front


def project_to_pixel(
    k: CameraIntrinsics, p_cam: np.ndarray, z_near: float = Z_NEAR
) -> tuple[float, float, float] | None:
    """Single-point pinhole projection.

    Returns ``(u, v, depth)`` in continuous pixel coordinates, or None when
    the point sits behind the near plane (the behind-camera marker).
    """
    x, y, z = float(p_cam[0]), float(p_cam[1]), float(p_cam[2])
    if not z > z_near:
        return None
    return k.fx * (x / z) + k.cx, k.fy * (y / z) + k.cy, z


def unproject_pixel(k: CameraIntrinsics, u: float, v: float, depth: float) -> np.ndarray:
    """Inverse pinhole map: continuous pixel plus depth back to camera frame."""
    x = (u - k.cx) / k.fx * depth
    y = (v - k.cy) / k.fy * depth
    return np.array([x, y, depth], dtype=np.float64)


@dataclass(frozen=True)
class CameraView:
    """One camera at one instant: intrinsics, rig mount, and ego pose."""

    name: str
    intrinsics: CameraIntrinsics
    ego_from_camera: RigidTransform
    world_from_ego: RigidTransform

    @property
    def world_from_camera(self) -> RigidTransform:
        return self.world_from_ego.compose(self.ego_from_camera)

    @property
    def camera_from_world(self) -> RigidTransform:
        return self.world_from_camera.invert()


@dataclass(frozen=True)
class WorldPoint:
    """A colored world-frame point tagged with its source frame."""

    position: np.ndarray
    color: tuple[int, int, int]
    source_frame: int
