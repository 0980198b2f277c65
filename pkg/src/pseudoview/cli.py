"""Command-line pipeline: ingest -> colorize -> accumulate -> render ->
(shift/split/pairs) -> complete -> eval.

Every subcommand is deterministic for a fixed seed: rerunning with the
same inputs produces byte-identical artifacts regardless of --threads.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import metrics
from .accumulate import AccumulationConfig, accumulate
from .cloud import read_colored_points, write_colored_points
from .colorize import colorize_frame
from .completion import SubprocessBackend, get_backend, pull_push_complete
from .errors import (
    BackendError,
    ConfigurationError,
    FormatError,
    FrameRangeError,
    PseudoViewError,
    SceneLoadError,
    SceneValidationError,
    ShapeError,
)
from .render import PseudoImage, RenderConfig, load_pseudo_image, render_pseudo_image, save_pseudo_image
from .scene import SceneSequence, load_scene, save_scene_manifest
from .viewsim import (
    SPLIT_NOVEL_CAMERA,
    SPLIT_NOVEL_FRAME,
    SimulationConfig,
    build_training_pair,
    make_split,
    sample_offset,
    save_split,
    shift_trajectory,
)

THREADS_ENV = "FREEVS_THREADS"
CLOUD_PATTERN = "f{frame:04d}.fvcp"
RENDER_STEM_PATTERN = "f{frame:03d}_{camera}"
_STEM_RE = re.compile(r"^f(\d+)_(.+)$")


@dataclass
class PipelineConfig:
    """Defaults shared by every subcommand; a JSON config file may override."""

    radius: int = 2
    window: int = 4
    probability: float = 0.5
    splat_radius: int = 0
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    backend: str = "pull_push"
    seed: int = 0


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigurationError(f"config file not found: {cfg_path}")
    doc = json.loads(cfg_path.read_text(encoding="utf-8"))
    for key in ("scene", "out", "pose_scene", "colored"):
        if key in doc and doc[key] is not None:
            doc[key] = str((cfg_path.parent / doc[key]).resolve())
    return doc


def _resolve(args, name: str, config: dict, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _threads(args, config: dict) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    if os.environ.get(THREADS_ENV):
        return max(1, int(os.environ[THREADS_ENV]))
    if "threads" in config:
        return max(1, int(config["threads"]))
    return 1


def _run_jobs(fn, jobs, threads: int) -> list:
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


def _parse_frames(spec: str, n_frames: int) -> list[int]:
    if spec == "all":
        return list(range(n_frames))
    frames = [int(tok) for tok in spec.split(",") if tok]
    for f in frames:
        if not 0 <= f < n_frames:
            raise ConfigurationError(f"frame {f} out of range 0..{n_frames - 1}")
    return frames


def _load_colored_dir(path: Path, frames: list[int]) -> dict:
    clouds = {}
    for f in frames:
        p = path / CLOUD_PATTERN.format(frame=f)
        if not p.is_file():
            raise SceneLoadError(f"colored cloud not found: {p}")
        clouds[f] = read_colored_points(p, frame_index=f)
    return clouds


def _colorize_frames(scene: SceneSequence, frames: list[int], occlusion: bool, threads: int) -> dict:
    results = _run_jobs(lambda f: colorize_frame(scene, f, occlusion), frames, threads)
    return dict(zip(frames, results))


# --- subcommands -----------------------------------------------------------


def cmd_colorize(args, config: dict) -> int:
    scene = load_scene(args.scene)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = _parse_frames(args.frames, len(scene))
    occlusion = not args.no_occlusion_check
    threads = _threads(args, config)

    def job(f: int) -> None:
        cloud = colorize_frame(scene, f, occlusion)
        write_colored_points(out / CLOUD_PATTERN.format(frame=f), cloud)

    _run_jobs(job, frames, threads)
    return 0


def cmd_accumulate(args, config: dict) -> int:
    scene = load_scene(args.scene)
    radius = _resolve(args, "radius", config, PipelineConfig.radius)
    cfg = AccumulationConfig(radius=radius, voxel_downsample=args.voxel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    centers = _parse_frames(args.frames, len(scene))
    colored_dir = Path(args.colored)
    threads = _threads(args, config)

    def job(center: int) -> None:
        lo = max(0, center - cfg.radius)
        hi = min(len(scene) - 1, center + cfg.radius)
        clouds = _load_colored_dir(colored_dir, list(range(lo, hi + 1)))
        merged = accumulate(scene, clouds, center, cfg)
        write_colored_points(out / f"f{center:04d}_r{cfg.radius}.fvcp", merged)

    _run_jobs(job, centers, threads)
    return 0


def cmd_render(args, config: dict) -> int:
    scene = load_scene(args.scene)
    pose_scene = load_scene(args.pose_scene) if args.pose_scene else scene
    if len(pose_scene) != len(scene):
        raise ConfigurationError("pose scene and observation scene frame counts differ")
    radius = _resolve(args, "radius", config, PipelineConfig.radius)
    splat = _resolve(args, "splat_radius", config, PipelineConfig.splat_radius)
    rc = RenderConfig(splat_radius=splat)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = _parse_frames(args.frames, len(scene))
    cameras = list(scene.camera_names) if args.camera == "all" else [args.camera]
    for cam in cameras:
        if cam not in scene.camera_names:
            raise ConfigurationError(f"unknown camera {cam!r}; scene has {list(scene.camera_names)}")
    threads = _threads(args, config)

    if args.accumulated:
        accum_dir = Path(args.accumulated)
        merged = {}
        for f in frames:
            p = accum_dir / f"f{f:04d}_r{radius}.fvcp"
            if not p.is_file():
                raise SceneLoadError(f"accumulated cloud not found: {p}")
            merged[f] = read_colored_points(p, frame_index=f)
    else:
        needed = sorted(
            {f for frame in frames for f in range(max(0, frame - radius), min(len(scene) - 1, frame + radius) + 1)}
        )
        if args.colored:
            colored = _load_colored_dir(Path(args.colored), needed)
        else:
            colored = _colorize_frames(scene, needed, True, threads)
        acc_cfg = AccumulationConfig(radius=radius)
        merged = {f: accumulate(scene, colored, f, acc_cfg) for f in frames}

    def job(fc: tuple[int, str]) -> None:
        frame, cam = fc
        view = pose_scene.frames[frame].cameras[cam].view
        pseudo = render_pseudo_image(merged[frame], view, rc)
        save_pseudo_image(pseudo, out / RENDER_STEM_PATTERN.format(frame=frame, camera=cam))

    _run_jobs(job, [(f, c) for f in frames for c in cameras], threads)
    return 0


def cmd_shift(args, config: dict) -> int:
    scene = load_scene(args.scene)
    if args.offset is not None:
        vec = tuple(float(v) for v in args.offset.split(","))
        if len(vec) != 3:
            raise ConfigurationError("--offset needs three comma-separated numbers")
        shifted = shift_trajectory(scene, offset_xyz=vec)
    else:
        shifted = shift_trajectory(scene, lateral_offset=args.lateral)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scene_manifest(shifted, out)
    return 0


def cmd_split(args, config: dict) -> int:
    scene = load_scene(args.scene)
    kind = args.kind.replace("-", "_")
    test_cameras = args.test_cameras.split(",") if args.test_cameras else None
    if kind == SPLIT_NOVEL_CAMERA and not test_cameras:
        raise ConfigurationError("novel-camera split requires --test-cameras")
    split = make_split(scene, kind, test_cameras)
    params = {"test_cameras": test_cameras} if kind == SPLIT_NOVEL_CAMERA else {}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_split(split, out, params)
    return 0


def cmd_pairs(args, config: dict) -> int:
    scene = load_scene(args.scene)
    radius = _resolve(args, "radius", config, PipelineConfig.radius)
    window = _resolve(args, "window", config, PipelineConfig.window)
    probability = _resolve(args, "probability", config, PipelineConfig.probability)
    splat = _resolve(args, "splat_radius", config, PipelineConfig.splat_radius)
    seed = _resolve(args, "seed", config, PipelineConfig.seed)
    sim = SimulationConfig(window=window, enable_probability=probability, sequence_length=args.length)
    acc = AccumulationConfig(radius=radius)
    rc = RenderConfig(splat_radius=splat)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    starts = [int(tok) for tok in args.starts.split(",") if tok]
    threads = _threads(args, config)

    plans = []
    for p, start in enumerate(starts):
        offset = sample_offset(sim, seed + p)
        plans.append((p, start, offset))

    lo = min(min(s, s + off) for _, s, off in plans)
    hi = max(max(s, s + off) + sim.sequence_length - 1 for _, s, off in plans)
    if lo - radius < 0:
        lo_clip = 0
    else:
        lo_clip = lo - radius
    needed = list(range(lo_clip, min(len(scene) - 1, hi + radius) + 1))
    for _, start, offset in plans:
        if start < 0 or start + sim.sequence_length - 1 >= len(scene):
            raise FrameRangeError(
                f"target frames {start}..{start + sim.sequence_length - 1} outside sequence"
            )
        if start + offset < 0 or start + offset + sim.sequence_length - 1 >= len(scene):
            raise FrameRangeError(
                f"observation frames {start + offset}..{start + offset + sim.sequence_length - 1} outside sequence"
            )
    colored = _colorize_frames(scene, needed, True, threads)

    records = []

    def job(plan: tuple[int, int, int]) -> dict:
        p, start, offset = plan
        pair = build_training_pair(scene, colored, start, offset, sim, acc, rc)
        pseudo_stems = []
        target_paths = []
        for i, t in enumerate(range(start, start + sim.sequence_length)):
            row_stems = []
            row_targets = []
            for j, cam in enumerate(scene.camera_names):
                stem = out / f"pair{p:03d}_f{t:03d}_{cam}"
                save_pseudo_image(pair.pseudo_sequence[i][j], stem)
                row_stems.append(stem.name)
                row_targets.append(str(pair.target_image_paths[i][j]))
            pseudo_stems.append(row_stems)
            target_paths.append(row_targets)
        return {
            "pair": p,
            "center_frame": pair.center_frame,
            "offset": pair.offset,
            "cameras": list(scene.camera_names),
            "pseudo_stems": pseudo_stems,
            "target_images": target_paths,
        }

    records = _run_jobs(job, plans, threads)
    manifest = {"pairs": sorted(records, key=lambda r: r["pair"])}
    (out / "pairs.json").write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    return 0


def cmd_complete(args, config: dict) -> int:
    backend_id = _resolve(args, "backend", config, PipelineConfig.backend)
    backend = get_backend(backend_id)
    in_dir = Path(args.in_dir)
    out = Path(args.out) if args.out else in_dir
    out.mkdir(parents=True, exist_ok=True)
    stems = sorted(p.name[: -len(".rgb.png")] for p in in_dir.glob("*.rgb.png"))
    if not stems:
        raise SceneLoadError(f"no *.rgb.png inputs under {in_dir}")
    threads = _threads(args, config)

    if isinstance(backend, SubprocessBackend):
        outputs = backend.complete_stems([in_dir / s for s in stems])
        for stem, produced in zip(stems, outputs):
            target = out / f"{stem}.out.png"
            if produced.resolve() != target.resolve():
                target.write_bytes(produced.read_bytes())
        return 0

    def job(stem: str) -> None:
        pseudo = load_pseudo_image(in_dir / stem)
        dense = pull_push_complete(pseudo)
        if not np.array_equal(dense[pseudo.valid], pseudo.rgb[pseudo.valid]):
            raise BackendError(f"backend {backend_id!r} modified valid pixels on {stem}")
        Image.fromarray(dense, mode="RGB").save(out / f"{stem}.out.png")

    _run_jobs(job, stems, threads)
    return 0


def cmd_eval(args, config: dict) -> int:
    scene = load_scene(args.scene)
    completed = Path(args.completed)
    outs = sorted(completed.glob("*.out.png"))
    if not outs:
        raise SceneLoadError(f"no *.out.png files under {completed}")
    threads = _threads(args, config)

    views = []
    for path in outs:
        m = _STEM_RE.match(path.name[: -len(".out.png")])
        if not m:
            continue
        frame, camera = int(m.group(1)), m.group(2)
        if frame >= len(scene) or camera not in scene.camera_names:
            raise ConfigurationError(f"{path.name}: no matching view in scene")
        views.append((frame, camera, path))

    def job(view: tuple[int, str, Path]) -> tuple[int, str, float, float]:
        frame, camera, path = view
        produced = np.asarray(Image.open(path).convert("RGB"))
        recorded = np.asarray(
            Image.open(scene.frames[frame].cameras[camera].image_path).convert("RGB")
        )
        if produced.shape != recorded.shape:
            raise ShapeError(
                f"{path.name}: produced {produced.shape} vs recorded {recorded.shape}"
            )
        return frame, camera, metrics.psnr(produced, recorded), metrics.ssim(produced, recorded)

    report = metrics.MetricReport()
    for frame, camera, p, s in _run_jobs(job, views, threads):
        report.add(frame, camera, p, s)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(out)
    return 0


# --- parser ----------------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser, scene: bool = True) -> None:
    if scene:
        sp.add_argument("--scene", required=True, help="scene manifest path")
    sp.add_argument("--config", help="JSON config file with pipeline defaults")
    sp.add_argument("--threads", type=int, default=None, help=f"worker threads (env {THREADS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudoview",
        description="Sparse pseudo-image synthesis engine for driving scenes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("colorize", help="color LiDAR sweeps from camera images")
    _add_common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--frames", default="all", help="'all' or comma-separated indices")
    sp.add_argument("--no-occlusion-check", action="store_true")
    sp.set_defaults(func=cmd_colorize)

    sp = sub.add_parser("accumulate", help="merge colored clouds over a window")
    _add_common(sp)
    sp.add_argument("--colored", required=True, help="directory of f####.fvcp clouds")
    sp.add_argument("--out", required=True)
    sp.add_argument("--frames", default="all", help="center frames: 'all' or comma-separated")
    sp.add_argument("--radius", type=int, default=None)
    sp.add_argument("--voxel", type=float, default=None, help="voxel downsample edge (m)")
    sp.set_defaults(func=cmd_accumulate)

    sp = sub.add_parser("render", help="render pseudo-images at camera poses")
    _add_common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--pose-scene", default=None, help="manifest supplying target poses")
    sp.add_argument("--frame", dest="frames", default="all", help="'all' or comma-separated indices")
    sp.add_argument("--camera", default="all")
    sp.add_argument("--colored", default=None, help="reuse colored clouds from this directory")
    sp.add_argument("--accumulated", default=None, help="reuse accumulated f####_r#.fvcp clouds")
    sp.add_argument("--radius", type=int, default=None, help="accumulation radius")
    sp.add_argument("--splat-radius", dest="splat_radius", type=int, default=None)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("shift", help="laterally shift the ego trajectory")
    _add_common(sp)
    sp.add_argument("--lateral", type=float, default=0.0, help="ego-frame y offset (m)")
    sp.add_argument("--offset", default=None, help="general ego-frame offset 'x,y,z' (m)")
    sp.add_argument("--out", required=True, help="output manifest path")
    sp.set_defaults(func=cmd_shift)

    sp = sub.add_parser("split", help="write a benchmark view split")
    _add_common(sp)
    sp.add_argument("--kind", required=True, choices=["novel-frame", "novel-camera"])
    sp.add_argument("--test-cameras", default=None, help="comma-separated camera names")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("pairs", help="export training pairs with simulated offsets")
    _add_common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--starts", required=True, help="comma-separated target start frames")
    sp.add_argument("--length", type=int, default=SimulationConfig.sequence_length)
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--probability", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--radius", type=int, default=None)
    sp.add_argument("--splat-radius", dest="splat_radius", type=int, default=None)
    sp.set_defaults(func=cmd_pairs)

    sp = sub.add_parser("complete", help="densify rendered pseudo-images")
    _add_common(sp, scene=False)
    sp.add_argument("--in", dest="in_dir", required=True, help="directory of <stem>.rgb/mask.png")
    sp.add_argument("--backend", default=None, help="backend id or 'cmd:<command line>'")
    sp.add_argument("--out", default=None, help="output directory (default: input dir)")
    sp.set_defaults(func=cmd_complete)

    sp = sub.add_parser("eval", help="score completed images against recordings")
    _add_common(sp)
    sp.add_argument("--completed", required=True, help="directory of <stem>.out.png")
    sp.add_argument("--out", required=True, help="CSV report path")
    sp.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        config = _load_config(getattr(args, "config", None))
        return args.func(args, config)
    except (ConfigurationError, FrameRangeError) as e:
        print(f"pseudoview: {e}", file=sys.stderr)
        return 2
    except (SceneLoadError, SceneValidationError, FormatError, BackendError, ShapeError, OSError) as e:
        print(f"pseudoview: {e}", file=sys.stderr)
        return 1
    except PseudoViewError as e:
        print(f"pseudoview: {e}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
