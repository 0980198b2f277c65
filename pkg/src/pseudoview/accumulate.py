"""Temporal merging of colored clouds around a center frame.

Points inside a moving object's (slightly dilated) box follow the object:
they are re-posed from their frame's box pose to the center frame's pose
for the same track. Tracks with no box at the center frame contribute no
points from their boxes, since no destination pose exists. Everything
else passes through unchanged, and no deduplication is performed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .cloud import ColoredPointCloud, concat_clouds
from .errors import ConfigurationError
from .geometry import RigidTransform
from .scene import Frame, SceneSequence

BOX_DILATION_M = 0.1


@dataclass(frozen=True)
class AccumulationConfig:
    radius: int = 2
    voxel_downsample: float | None = None

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ConfigurationError("accumulation radius must be >= 0")
        if self.voxel_downsample is not None and self.voxel_downsample <= 0:
            raise ConfigurationError("voxel edge length must be positive")


def repose_object_points(
    points: np.ndarray,
    world_from_box_src: RigidTransform,
    world_from_box_dst: RigidTransform,
) -> np.ndarray:
    """Carry world points rigidly from one box pose to another."""
    motion = world_from_box_dst.compose(world_from_box_src.invert())
    return motion.apply(points)


def points_in_box(
    points: np.ndarray,
    world_from_box: RigidTransform,
    size: tuple[float, float, float],
    dilation: float = BOX_DILATION_M,
) -> np.ndarray:
    """Boolean mask of world points inside the dilated box."""
    local = world_from_box.invert().apply(points)
    half = np.asarray(size, dtype=np.float64) / 2.0 + dilation
    return np.all(np.abs(local) <= half, axis=1)


def _merge_frame(
    frame: Frame, cloud: ColoredPointCloud, center_frame: Frame, repose_moving: bool
) -> ColoredPointCloud:
    if frame.index == center_frame.index:
        return cloud
    positions = cloud.positions.copy()
    keep = np.ones(len(cloud), dtype=bool)
    claimed = np.zeros(len(cloud), dtype=bool)
    center_boxes = {b.track_id: b for b in center_frame.objects}
    for box in frame.objects:
        if not box.is_moving:
            continue
        inside = points_in_box(cloud.positions, box.world_from_box, box.size) & ~claimed
        if not inside.any():
            continue
        claimed |= inside
        dst = center_boxes.get(box.track_id)
        if dst is None:
            keep &= ~inside
        elif repose_moving:
            positions[inside] = repose_object_points(
                cloud.positions[inside], box.world_from_box, dst.world_from_box
            )
    return ColoredPointCloud(
        positions[keep], cloud.colors[keep], cloud.source_frames[keep], cloud.frame_index
    )


def voxel_downsample(cloud: ColoredPointCloud, edge: float) -> ColoredPointCloud:
    """Keep, per voxel, the point nearest the voxel center (ties: lowest row)."""
    if len(cloud) == 0:
        return cloud
    vox = np.floor(cloud.positions / edge).astype(np.int64)
    _, vid = np.unique(vox, axis=0, return_inverse=True)
    center = (vox + 0.5) * edge
    d2 = np.sum((cloud.positions - center) ** 2, axis=1)
    rows = np.arange(len(cloud), dtype=np.int64)
    order = np.lexsort((rows, d2, vid))
    vid_sorted = vid[order]
    firsts = np.nonzero(np.r_[True, vid_sorted[1:] != vid_sorted[:-1]])[0]
    winners = np.sort(order[firsts])  # restore original relative order
    return ColoredPointCloud(
        cloud.positions[winners],
        cloud.colors[winners],
        cloud.source_frames[winners],
        cloud.frame_index,
    )


def accumulate(
    scene: SceneSequence,
    colored: Mapping[int, ColoredPointCloud],
    center: int,
    cfg: AccumulationConfig = AccumulationConfig(),
    repose_moving: bool = True,
) -> ColoredPointCloud:
    """Merge colored clouds over [center - r, center + r], clipped to bounds.

    ``repose_moving=False`` disables moving-object trajectory merging and is
    only meant for regression comparisons.
    """
    if not 0 <= center < len(scene):
        raise IndexError(f"center frame {center} out of range 0..{len(scene) - 1}")
    lo = max(0, center - cfg.radius)
    hi = min(len(scene) - 1, center + cfg.radius)
    center_frame = scene.frames[center]
    parts = []
    for f in range(lo, hi + 1):
        if f not in colored:
            raise ConfigurationError(f"no colorized cloud supplied for window frame {f}")
        parts.append(_merge_frame(scene.frames[f], colored[f], center_frame, repose_moving))
    merged = concat_clouds(parts, center)
    if cfg.voxel_downsample is not None:
        merged = voxel_downsample(merged, cfg.voxel_downsample)
    return merged
