"""Sparse pseudo-image synthesis engine for driving scenes.

Converts multi-frame LiDAR + multi-camera recordings into colored world
point clouds and renders geometrically exact sparse rasters at arbitrary
camera poses, with benchmark split tooling, trajectory shifting, training
pair export, a classical completion baseline, and image metrics.
"""

from .accumulate import AccumulationConfig, accumulate, repose_object_points
from .cloud import ColoredPointCloud, read_colored_points, read_raw_points, write_colored_points, write_raw_points
from .colorize import colorize_frame
from .completion import complete_sequence, get_backend, pull_push_complete, register_backend
from .geometry import CameraIntrinsics, CameraView, RigidTransform, WorldPoint, project_to_pixel, unproject_pixel
from .metrics import MetricReport, mask_density, psnr, ssim
from .render import PseudoImage, RenderConfig, load_pseudo_image, render_pseudo_image, save_pseudo_image
from .scene import Frame, ObjectBox, SceneSequence, load_scene, save_scene_manifest
from .viewsim import (
    SimulationConfig,
    Split,
    TrainingPair,
    build_training_pair,
    make_split,
    sample_offset,
    shift_trajectory,
)

__version__ = "0.1.0"
