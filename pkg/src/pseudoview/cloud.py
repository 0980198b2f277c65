"""Colored point clouds and the two little-endian binary point formats.

Raw sweep file (magic ``FVPC``): u32 count then count records of
4 float32 ``(x, y, z, intensity)`` in the ego frame of the owning frame.

Colored cloud file (magic ``FVCP``): u32 count then count 20-byte records
of 3 float32 world position, 3 u8 RGB, 1 signed byte source-frame offset
relative to the cloud's origin frame, and 4 zero pad bytes. The origin
frame index itself is not stored; readers supply it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .geometry import WorldPoint

RAW_MAGIC = b"FVPC"
COLORED_MAGIC = b"FVCP"

_RAW_DTYPE = np.dtype("<f4")
_COLORED_DTYPE = np.dtype(
    [
        ("pos", "<f4", (3,)),
        ("rgb", "u1", (3,)),
        ("off", "i1"),
        ("pad", "u1", (4,)),
    ]
)
assert _COLORED_DTYPE.itemsize == 20


@dataclass
class ColoredPointCloud:
    """World-frame points with RGB color and per-point source frame.

    ``positions`` are float64 in memory for downstream pose math; the disk
    format quantizes them to float32.
    """

    positions: np.ndarray  # (N, 3) float64
    colors: np.ndarray  # (N, 3) uint8
    source_frames: np.ndarray  # (N,) int32
    frame_index: int

    def __post_init__(self) -> None:
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.colors = np.ascontiguousarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        self.source_frames = np.ascontiguousarray(self.source_frames, dtype=np.int32).reshape(-1)
        n = len(self.positions)
        if len(self.colors) != n or len(self.source_frames) != n:
            raise ValueError("positions, colors and source_frames must have equal length")

    @staticmethod
    def empty(frame_index: int) -> "ColoredPointCloud":
        return ColoredPointCloud(
            np.empty((0, 3)), np.empty((0, 3), np.uint8), np.empty(0, np.int32), frame_index
        )

    def __len__(self) -> int:
        return len(self.positions)

    def point(self, i: int) -> WorldPoint:
        return WorldPoint(
            self.positions[i].copy(),
            tuple(int(c) for c in self.colors[i]),
            int(self.source_frames[i]),
        )


def concat_clouds(parts: list[ColoredPointCloud], frame_index: int) -> ColoredPointCloud:
    """Concatenate clouds preserving each part's internal point order."""
    if not parts:
        return ColoredPointCloud.empty(frame_index)
    return ColoredPointCloud(
        np.concatenate([p.positions for p in parts]),
        np.concatenate([p.colors for p in parts]),
        np.concatenate([p.source_frames for p in parts]),
        frame_index,
    )


def _read_header(data: bytes, magic: bytes, path: Path) -> int:
    if len(data) < 8:
        raise FormatError(f"{path}: file shorter than the 8-byte header")
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    return int(np.frombuffer(data[4:8], dtype="<u4")[0])


def write_raw_points(path: str | Path, points: np.ndarray) -> None:
    """Write an (N, 4) float32 array of (x, y, z, intensity) ego-frame points."""
    pts = np.ascontiguousarray(points, dtype=np.float32).reshape(-1, 4)
    with open(path, "wb") as f:
        f.write(RAW_MAGIC)
        f.write(np.uint32(len(pts)).tobytes())
        f.write(pts.astype("<f4").tobytes())


def read_raw_points(path: str | Path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    count = _read_header(data, RAW_MAGIC, path)
    expected = 16 * count
    payload = data[8:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} for {count} points"
        )
    return np.frombuffer(payload, dtype=_RAW_DTYPE).reshape(count, 4).copy()


def write_colored_points(path: str | Path, cloud: ColoredPointCloud) -> None:
    offsets = cloud.source_frames.astype(np.int64) - cloud.frame_index
    if len(offsets) and (offsets.min() < -128 or offsets.max() > 127):
        raise FormatError("source-frame offsets do not fit in a signed byte")
    records = np.zeros(len(cloud), dtype=_COLORED_DTYPE)
    records["pos"] = cloud.positions.astype(np.float32)
    records["rgb"] = cloud.colors
    records["off"] = offsets.astype(np.int8)
    with open(path, "wb") as f:
        f.write(COLORED_MAGIC)
        f.write(np.uint32(len(cloud)).tobytes())
        f.write(records.tobytes())


def read_colored_points(path: str | Path, frame_index: int = 0) -> ColoredPointCloud:
    """Read a colored cloud, rebasing stored frame offsets onto frame_index."""
    path = Path(path)
    data = path.read_bytes()
    count = _read_header(data, COLORED_MAGIC, path)
    expected = _COLORED_DTYPE.itemsize * count
    payload = data[8:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} for {count} points"
        )
    records = np.frombuffer(payload, dtype=_COLORED_DTYPE)
    return ColoredPointCloud(
        records["pos"].astype(np.float64),
        records["rgb"].copy(),
        records["off"].astype(np.int32) + frame_index,
        frame_index,
    )
