"""Sparse pseudo-image rendering: project a colored cloud into a camera.

Every surviving point writes its color and depth into the square pixel
block of edge ``2 * splat_radius + 1`` around its floor pixel; per pixel
the smallest depth wins and exact ties fall to the smallest
(source_frame, point row) pair, which makes output independent of point
order within a source frame block and of any parallel schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels
from .cloud import ColoredPointCloud
from .geometry import Z_NEAR, CameraView

DEPTH_PNG_SCALE = 100.0  # stored value is centimeters
DEPTH_PNG_MAX = 65535


@dataclass(frozen=True)
class RenderConfig:
    splat_radius: int = 0
    z_near: float = Z_NEAR

    def __post_init__(self) -> None:
        if self.splat_radius < 0:
            raise ValueError("splat_radius must be >= 0")


@dataclass
class PseudoImage:
    """Sparse raster: rgb is (0,0,0) and depth +inf wherever valid is False."""

    rgb: np.ndarray  # (H, W, 3) uint8
    valid: np.ndarray  # (H, W) bool
    depth: np.ndarray  # (H, W) float32, +inf where invalid
    camera: CameraView | None = None

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]


def render_pseudo_image(
    cloud: ColoredPointCloud, camera: CameraView, cfg: RenderConfig = RenderConfig()
) -> PseudoImage:
    intr = camera.intrinsics
    h, w = intr.height, intr.width
    if len(cloud) == 0:
        return PseudoImage(
            np.zeros((h, w, 3), np.uint8),
            np.zeros((h, w), bool),
            np.full((h, w), np.inf, np.float32),
            camera,
        )

    p_cam = camera.camera_from_world.apply(cloud.positions)
    uv, z, in_front = intr.project(p_cam, cfg.z_near)
    px = np.full(len(cloud), -1, dtype=np.int64)
    py = np.full(len(cloud), -1, dtype=np.int64)
    px[in_front] = np.floor(uv[in_front, 0]).astype(np.int64)
    py[in_front] = np.floor(uv[in_front, 1]).astype(np.int64)
    keep = in_front & (px >= 0) & (px < w) & (py >= 0) & (py < h)

    # The kept rows stay in cloud order, so row rank inside the kernel is a
    # consistent stand-in for the point's index in the full cloud.
    rgb, valid, depth = kernels.zbuffer_scatter(
        px[keep],
        py[keep],
        z[keep].astype(np.float32),
        cloud.colors[keep],
        cloud.source_frames[keep],
        cfg.splat_radius,
        h,
        w,
    )
    return PseudoImage(rgb, valid, depth, camera)


def save_pseudo_image(p: PseudoImage, stem: str | Path) -> tuple[Path, Path, Path]:
    """Write ``<stem>.rgb.png``, ``<stem>.mask.png`` and ``<stem>.depth.png``.

    The depth channel is stored as 16-bit centimeters clamped to 65535;
    invalid pixels clamp to the maximum.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    rgb_path = stem.with_name(stem.name + ".rgb.png")
    mask_path = stem.with_name(stem.name + ".mask.png")
    depth_path = stem.with_name(stem.name + ".depth.png")

    Image.fromarray(p.rgb, mode="RGB").save(rgb_path)
    Image.fromarray(np.where(p.valid, 255, 0).astype(np.uint8), mode="L").save(mask_path)
    cm = np.minimum(np.round(p.depth.astype(np.float64) * DEPTH_PNG_SCALE), DEPTH_PNG_MAX)
    Image.fromarray(cm.astype(np.uint16)).save(depth_path)
    return rgb_path, mask_path, depth_path


def load_pseudo_image(stem: str | Path) -> PseudoImage:
    """Rebuild a PseudoImage from its exported triple (camera is not stored)."""
    stem = Path(stem)
    rgb = np.asarray(Image.open(stem.with_name(stem.name + ".rgb.png")).convert("RGB"))
    mask = np.asarray(Image.open(stem.with_name(stem.name + ".mask.png")).convert("L"))
    valid = mask >= 128
    depth_path = stem.with_name(stem.name + ".depth.png")
    if depth_path.is_file():
        cm = np.asarray(Image.open(depth_path)).astype(np.float32)
        depth = np.where(valid, cm / DEPTH_PNG_SCALE, np.float32(np.inf)).astype(np.float32)
    else:
        depth = np.where(valid, np.float32(1.0), np.float32(np.inf)).astype(np.float32)
    rgb = np.where(valid[:, :, None], rgb, 0).astype(np.uint8)
    return PseudoImage(rgb, valid, depth, None)
