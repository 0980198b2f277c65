"""Scene manifest loading, validation, and writing.

A scene is a single JSON manifest plus per-frame binary LiDAR files
(``FVPC``) and 8-bit RGB PNG images. All relative paths in the manifest
resolve against the manifest's own directory. Loading validates every
structural invariant up front so downstream stages can assume a
well-formed sequence.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .cloud import read_raw_points
from .errors import SceneLoadError, SceneValidationError
from .geometry import CameraIntrinsics, CameraView, RigidTransform

# A track whose box center moves more than this between consecutive frames
# is treated as a moving object when the manifest does not say.
MOVING_THRESHOLD_M = 0.05


@dataclass(frozen=True)
class ObjectBox:
    """Tracked 3D box: center pose in world frame plus full extents."""

    track_id: str
    world_from_box: RigidTransform
    size: tuple[float, float, float]  # length (x), width (y), height (z)
    is_moving: bool


@dataclass(frozen=True)
class FrameCamera:
    view: CameraView
    image_path: Path


@dataclass(frozen=True)
class Frame:
    index: int
    timestamp: float
    world_from_ego: RigidTransform
    lidar: np.ndarray  # (N, 4) float32: x, y, z, intensity in ego frame
    lidar_path: Path
    cameras: dict[str, FrameCamera]
    objects: tuple[ObjectBox, ...]

    def lidar_xyz(self) -> np.ndarray:
        return self.lidar[:, :3].astype(np.float64)


@dataclass(frozen=True)
class SceneSequence:
    frames: tuple[Frame, ...]
    camera_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.frames)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SceneValidationError(message)


def _matrix16(values, where: str) -> RigidTransform:
    arr = np.asarray(values, dtype=np.float64)
    _require(arr.shape == (16,), f"{where}: expected 16 numbers for a 4x4 matrix")
    t = RigidTransform.from_matrix(arr.reshape(4, 4))
    try:
        t.require_valid()
    except SceneValidationError as e:
        raise SceneValidationError(f"{where}: {e}") from None
    return t


def _image_size(path: Path, where: str) -> tuple[int, int]:
    try:
        with Image.open(path) as im:
            return im.size  # (width, height)
    except (OSError, UnidentifiedImageError) as e:
        raise SceneLoadError(f"{where}: cannot read image {path}: {e}") from None


def derive_moving_flags(
    box_centers: dict[str, list[tuple[int, np.ndarray]]],
    threshold: float = MOVING_THRESHOLD_M,
) -> set[str]:
    """Track ids whose center moved more than threshold between consecutive frames."""
    moving: set[str] = set()
    for track_id, entries in box_centers.items():
        entries.sort(key=lambda e: e[0])
        for (fa, ca), (fb, cb) in zip(entries, entries[1:]):
            if fb == fa + 1 and float(np.linalg.norm(cb - ca)) > threshold:
                moving.add(track_id)
                break
    return moving


def load_scene(manifest_path: str | Path) -> SceneSequence:
    """Load and fully validate a scene manifest.

    Raises SceneLoadError when a referenced file is missing or unreadable
    and SceneValidationError when content breaks an invariant; validation
    messages name the offending frame index and field.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise SceneLoadError(f"scene manifest not found: {manifest_path}")
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SceneValidationError(f"{manifest_path}: invalid JSON: {e}") from None
    root = manifest_path.parent

    camera_names = doc.get("camera_names")
    _require(isinstance(camera_names, list) and camera_names, "manifest: camera_names missing or empty")
    camera_names = tuple(str(n) for n in camera_names)

    raw_frames = doc.get("frames")
    _require(isinstance(raw_frames, list), "manifest: frames must be a list")
    if not raw_frames:
        raise SceneValidationError("scene has no frames")

    frames: list[Frame] = []
    pending_boxes: list[list[dict]] = []
    box_centers: dict[str, list[tuple[int, np.ndarray]]] = {}

    for pos, rf in enumerate(raw_frames):
        where = f"frame {pos}"
        _require(isinstance(rf, dict), f"{where}: frame record must be an object")
        _require(int(rf.get("index", -1)) == pos, f"{where}: index must equal its position")
        timestamp = float(rf["timestamp"])
        world_from_ego = _matrix16(rf["world_from_ego"], f"{where}: world_from_ego")

        lidar_path = root / rf["lidar"]
        if not lidar_path.is_file():
            raise SceneLoadError(f"{where}: lidar file not found: {lidar_path}")
        lidar = read_raw_points(lidar_path)
        if not np.all(np.isfinite(lidar[:, :3])):
            raise SceneValidationError(f"{where}: lidar contains non-finite coordinates")

        cams_doc = rf.get("cameras", {})
        missing = [n for n in camera_names if n not in cams_doc]
        _require(not missing, f"{where}: missing camera entries {missing}")
        cameras: dict[str, FrameCamera] = {}
        for name in camera_names:
            c = cams_doc[name]
            cwhere = f"{where}: camera {name}"
            image_path = root / c["image"]
            if not image_path.is_file():
                raise SceneLoadError(f"{cwhere}: image not found: {image_path}")
            intr = CameraIntrinsics(
                float(c["fx"]), float(c["fy"]), float(c["cx"]), float(c["cy"]),
                int(c["width"]), int(c["height"]),
            )
            actual_w, actual_h = _image_size(image_path, cwhere)
            if (actual_w, actual_h) != (intr.width, intr.height):
                # Image payloads may be stored resized; rescale the pinhole
                # parameters proportionally so projection stays consistent.
                intr = intr.scaled(actual_w / intr.width, actual_h / intr.height, actual_w, actual_h)
            try:
                intr.require_valid()
            except SceneValidationError as e:
                raise SceneValidationError(f"{cwhere}: {e}") from None
            ego_from_camera = _matrix16(c["ego_from_camera"], f"{cwhere}: ego_from_camera")
            view = CameraView(name, intr, ego_from_camera, world_from_ego)
            cameras[name] = FrameCamera(view, image_path)

        objs_doc = rf.get("objects", [])
        pending_boxes.append(objs_doc)
        for o in objs_doc:
            center = np.asarray(o["world_from_box"], dtype=np.float64).reshape(4, 4)[:3, 3]
            box_centers.setdefault(str(o["track_id"]), []).append((pos, center))

        frames.append(
            Frame(pos, timestamp, world_from_ego, lidar, lidar_path, cameras, ())
        )

    for pos in range(1, len(frames)):
        if not frames[pos].timestamp > frames[pos - 1].timestamp:
            raise SceneValidationError(
                f"frame {pos}: timestamp must be greater than frame {pos - 1}'s"
            )

    derived_moving = derive_moving_flags(box_centers)
    final_frames: list[Frame] = []
    for pos, (frame, objs_doc) in enumerate(zip(frames, pending_boxes)):
        boxes = []
        for o in objs_doc:
            where = f"frame {pos}: object {o.get('track_id')}"
            size = tuple(float(s) for s in o["size"])
            _require(len(size) == 3 and all(s > 0 for s in size), f"{where}: size components must be > 0")
            world_from_box = _matrix16(o["world_from_box"], f"{where}: world_from_box")
            track_id = str(o["track_id"])
            is_moving = bool(o["is_moving"]) if "is_moving" in o else track_id in derived_moving
            boxes.append(ObjectBox(track_id, world_from_box, size, is_moving))
        final_frames.append(replace(frame, objects=tuple(boxes)))

    return SceneSequence(tuple(final_frames), camera_names)


def save_scene_manifest(scene: SceneSequence, path: str | Path) -> None:
    """Write a manifest referencing the scene's existing data files.

    Data payloads are not copied; lidar and image paths are rewritten
    relative to the new manifest location.
    """
    path = Path(path)
    root = path.parent

    def rel(p: Path) -> str:
        return os.path.relpath(p, root)

    doc = {
        "camera_names": list(scene.camera_names),
        "frames": [
            {
                "index": f.index,
                "timestamp": f.timestamp,
                "world_from_ego": [float(v) for v in f.world_from_ego.matrix().ravel()],
                "lidar": rel(f.lidar_path),
                "cameras": {
                    name: {
                        "fx": fc.view.intrinsics.fx,
                        "fy": fc.view.intrinsics.fy,
                        "cx": fc.view.intrinsics.cx,
                        "cy": fc.view.intrinsics.cy,
                        "width": fc.view.intrinsics.width,
                        "height": fc.view.intrinsics.height,
                        "ego_from_camera": [float(v) for v in fc.view.ego_from_camera.matrix().ravel()],
                        "image": rel(fc.image_path),
                    }
                    for name, fc in f.cameras.items()
                },
                "objects": [
                    {
                        "track_id": b.track_id,
                        "world_from_box": [float(v) for v in b.world_from_box.matrix().ravel()],
                        "size": list(b.size),
                        "is_moving": b.is_moving,
                    }
                    for b in f.objects
                ],
            }
            for f in scene.frames
        ],
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
