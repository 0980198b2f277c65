"""Viewpoint-transformation simulation, benchmark splits, and trajectory edits.

Training pairs render each target frame's cameras from a cloud accumulated
around a temporally offset center, which mimics camera displacement while
supervision stays on the recorded images. Splits and lateral trajectory
shifts implement the two benchmark constructions.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .accumulate import AccumulationConfig, accumulate
from .cloud import ColoredPointCloud
from .errors import ConfigurationError, FrameRangeError
from .geometry import CameraView, RigidTransform
from .render import PseudoImage, RenderConfig, render_pseudo_image
from .scene import FrameCamera, SceneSequence

SPLIT_NOVEL_FRAME = "novel_frame"
SPLIT_NOVEL_CAMERA = "novel_camera"
NOVEL_FRAME_PERIOD = 4


@dataclass(frozen=True)
class SimulationConfig:
    window: int = 4
    enable_probability: float = 0.5
    sequence_length: int = 8

    def __post_init__(self) -> None:
        if self.window < 0:
            raise ConfigurationError("simulation window must be >= 0")
        if not 0.0 <= self.enable_probability <= 1.0:
            raise ConfigurationError("enable_probability must be in [0, 1]")
        if self.sequence_length < 1:
            raise ConfigurationError("sequence_length must be >= 1")


@dataclass
class TrainingPair:
    pseudo_sequence: list[list[PseudoImage]]  # [frame][camera]
    target_image_paths: list[list[Path]]
    offset: int
    center_frame: int


@dataclass(frozen=True)
class Split:
    kind: str
    train_views: tuple[tuple[int, str], ...]
    test_views: tuple[tuple[int, str], ...]


def sample_offset(cfg: SimulationConfig, rng_seed: int) -> int:
    """Draw a simulation offset: 0 with probability 1 - enable_probability,
    otherwise uniform over the nonzero integers in [-window, window]."""
    if cfg.enable_probability > 0 and cfg.window == 0:
        raise ConfigurationError("window must be > 0 when simulation can trigger")
    rng = random.Random(rng_seed)
    if rng.random() >= cfg.enable_probability:
        return 0
    k = rng.randrange(2 * cfg.window)
    return k - cfg.window if k < cfg.window else k - cfg.window + 1


def build_training_pair(
    scene: SceneSequence,
    colored: Mapping[int, ColoredPointCloud],
    target_start: int,
    offset: int,
    cfg: SimulationConfig,
    acc: AccumulationConfig = AccumulationConfig(),
    rc: RenderConfig = RenderConfig(),
) -> TrainingPair:
    """Render pseudo-images for n target frames from offset observation centers.

    For target frame t the cloud is accumulated around t + offset and
    rendered into frame t's true camera poses, so offset = 0 is the
    matched-frame case.
    """
    n = cfg.sequence_length
    last = target_start + n - 1
    if target_start < 0 or last >= len(scene):
        raise FrameRangeError(
            f"target frames {target_start}..{last} outside sequence 0..{len(scene) - 1}"
        )
    if target_start + offset < 0 or last + offset >= len(scene):
        raise FrameRangeError(
            f"observation frames {target_start + offset}..{last + offset} "
            f"outside sequence 0..{len(scene) - 1}"
        )
    pseudo_rows: list[list[PseudoImage]] = []
    target_rows: list[list[Path]] = []
    for t in range(target_start, target_start + n):
        cloud = accumulate(scene, colored, t + offset, acc)
        row, paths = [], []
        for name in scene.camera_names:
            capture = scene.frames[t].cameras[name]
            row.append(render_pseudo_image(cloud, capture.view, rc))
            paths.append(capture.image_path)
        pseudo_rows.append(row)
        target_rows.append(paths)
    return TrainingPair(pseudo_rows, target_rows, offset, target_start)


def shift_trajectory(
    scene: SceneSequence,
    lateral_offset: float = 0.0,
    offset_xyz: Sequence[float] | None = None,
) -> SceneSequence:
    """Translate every ego pose in its own body frame; nothing else changes.

    The default shifts along ego y (lateral to the heading direction);
    ``offset_xyz`` generalizes to an arbitrary body-frame translation.
    LiDAR payloads, images, rig extrinsics, and object boxes are shared
    with the input scene.
    """
    vec = (0.0, float(lateral_offset), 0.0) if offset_xyz is None else tuple(offset_xyz)
    shift = RigidTransform.from_translation(*vec)
    new_frames = []
    for frame in scene.frames:
        pose = frame.world_from_ego.compose(shift)
        cameras = {
            name: FrameCamera(
                CameraView(fc.view.name, fc.view.intrinsics, fc.view.ego_from_camera, pose),
                fc.image_path,
            )
            for name, fc in frame.cameras.items()
        }
        new_frames.append(replace(frame, world_from_ego=pose, cameras=cameras))
    return SceneSequence(tuple(new_frames), scene.camera_names)


def make_split(
    scene: SceneSequence, kind: str, test_cameras: Sequence[str] | None = None
) -> Split:
    """Partition all (frame, camera) views into train and test sets."""
    all_views = [(f.index, name) for f in scene.frames for name in scene.camera_names]
    if kind == SPLIT_NOVEL_FRAME:
        test = [(f, c) for f, c in all_views if f % NOVEL_FRAME_PERIOD == 0]
    elif kind == SPLIT_NOVEL_CAMERA:
        if not test_cameras:
            raise ConfigurationError("novel_camera split needs at least one test camera")
        unknown = set(test_cameras) - set(scene.camera_names)
        if unknown:
            raise ConfigurationError(f"unknown test cameras: {sorted(unknown)}")
        if set(test_cameras) >= set(scene.camera_names):
            raise ConfigurationError("test cameras must be a strict subset of all cameras")
        held = set(test_cameras)
        test = [(f, c) for f, c in all_views if c in held]
    else:
        raise ConfigurationError(f"unknown split kind {kind!r}")
    test_set = set(test)
    train = [v for v in all_views if v not in test_set]
    return Split(kind, tuple(train), tuple(test))


def save_split(split: Split, path: str | Path, params: dict | None = None) -> None:
    doc = {
        "kind": split.kind,
        "params": params or {},
        "train": [[f, c] for f, c in split.train_views],
        "test": [[f, c] for f, c in split.test_views],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")


def load_split(path: str | Path) -> Split:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return Split(
        doc["kind"],
        tuple((int(f), str(c)) for f, c in doc["train"]),
        tuple((int(f), str(c)) for f, c in doc["test"]),
    )
