"""Assign RGB colors to LiDAR points from the frame's camera images.

A point's color is the per-channel mean of every camera sample it
receives, accumulated as exact integer sums and rounded half-up once, so
the result is independent of camera order. Points that land in no camera
are dropped.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .cloud import ColoredPointCloud
from .errors import SceneLoadError
from .geometry import Z_NEAR
from .scene import SceneSequence

# A point may sample a pixel only if its depth is within this many meters
# of the nearest point on that pixel (the occlusion prepass).
OCCLUSION_DEPTH_TOLERANCE_M = 0.3


def _load_image(path, camera_name: str, frame_index: int) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, UnidentifiedImageError) as e:
        raise SceneLoadError(
            f"frame {frame_index} camera {camera_name}: cannot read image {path}: {e}"
        ) from None


def colorize_frame(
    scene: SceneSequence,
    frame_index: int,
    occlusion_check: bool = True,
    z_near: float = Z_NEAR,
    depth_tolerance: float = OCCLUSION_DEPTH_TOLERANCE_M,
) -> ColoredPointCloud:
    """Color one frame's LiDAR sweep from its own camera images.

    Positions in the returned cloud are exactly the world-frame transforms
    of the frame's LiDAR points restricted to points that sampled at least
    one camera; colorization never moves points.
    """
    if not 0 <= frame_index < len(scene):
        raise IndexError(f"frame {frame_index} out of range 0..{len(scene) - 1}")
    frame = scene.frames[frame_index]
    pts_world = frame.world_from_ego.apply(frame.lidar_xyz())
    n = len(pts_world)

    sums = np.zeros((n, 3), dtype=np.uint64)
    counts = np.zeros(n, dtype=np.uint64)

    for name in scene.camera_names:
        capture = frame.cameras[name]
        view = capture.view
        intr = view.intrinsics
        p_cam = view.camera_from_world.apply(pts_world)
        uv, z, in_front = intr.project(p_cam, z_near)
        px = np.full(n, -1, dtype=np.int64)
        py = np.full(n, -1, dtype=np.int64)
        px[in_front] = np.floor(uv[in_front, 0]).astype(np.int64)
        py[in_front] = np.floor(uv[in_front, 1]).astype(np.int64)
        hit = in_front & (px >= 0) & (px < intr.width) & (py >= 0) & (py < intr.height)
        if not hit.any():
            continue

        if occlusion_check:
            depth32 = z[hit].astype(np.float32)
            _, _, zbuf = kernels.zbuffer_scatter(
                px[hit], py[hit], depth32,
                np.zeros((int(hit.sum()), 3), np.uint8),
                np.zeros(int(hit.sum()), np.int32),
                0, intr.height, intr.width,
            )
            near_front = depth32.astype(np.float64) <= (
                zbuf[py[hit], px[hit]].astype(np.float64) + depth_tolerance
            )
            sample = np.zeros(n, dtype=bool)
            sample[np.nonzero(hit)[0][near_front]] = True
        else:
            sample = hit

        image = _load_image(capture.image_path, name, frame_index)
        picked = image[py[sample], px[sample]].astype(np.uint64)
        sums[sample] += picked
        counts[sample] += 1

    colored = counts > 0
    k = counts[colored][:, None]
    colors = ((2 * sums[colored] + k) // (2 * k)).astype(np.uint8)  # mean, half-up
    return ColoredPointCloud(
        pts_world[colored],
        colors,
        np.full(int(colored.sum()), frame_index, dtype=np.int32),
        frame_index,
    )
