"""Load training pairs exported by the view-synthesis engine.

The engine's ``pairs`` command writes a directory of pseudo-image triples
(``<stem>.rgb.png`` / ``.mask.png`` / ``.depth.png``) plus ``pairs.json``
listing, per pair, the pseudo stems and the recorded target image paths.
This module flattens that into per-view (condition, target) tensors.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image


def to_unit_range(img: np.ndarray) -> torch.Tensor:
    """uint8 HxWxC -> float32 CxHxW in [-1, 1]."""
    t = torch.from_numpy(np.array(img, copy=True)).float().permute(2, 0, 1)
    return t / 127.5 - 1.0


def from_unit_range(t: torch.Tensor) -> np.ndarray:
    """float32 CxHxW in [-1, 1] -> uint8 HxWxC."""
    arr = ((t.clamp(-1.0, 1.0) + 1.0) * 127.5).round().byte()
    return arr.permute(1, 2, 0).cpu().numpy()


def load_condition(stem: Path) -> torch.Tensor:
    """Sparse-view condition: RGB in [-1, 1] plus a {0, 1} validity channel."""
    rgb = np.asarray(Image.open(str(stem) + ".rgb.png").convert("RGB"))
    mask = np.asarray(Image.open(str(stem) + ".mask.png").convert("L")) >= 128
    cond = to_unit_range(rgb)
    return torch.cat([cond, torch.from_numpy(mask).float()[None]], dim=0)


def load_target(path: Path) -> torch.Tensor:
    return to_unit_range(np.asarray(Image.open(path).convert("RGB")))


def load_pairs_dataset(pairs_dir: str | Path) -> list[tuple[torch.Tensor, torch.Tensor]]:
    pairs_dir = Path(pairs_dir)
    manifest = pairs_dir / "pairs.json"
    if not manifest.is_file():
        raise FileNotFoundError(f"no pairs.json under {pairs_dir}")
    doc = json.loads(manifest.read_text(encoding="utf-8"))
    samples = []
    for record in doc["pairs"]:
        for stem_row, target_row in zip(record["pseudo_stems"], record["target_images"]):
            for stem, target in zip(stem_row, target_row):
                samples.append((load_condition(pairs_dir / stem), load_target(Path(target))))
    if not samples:
        raise ValueError(f"{manifest} lists no training views")
    return samples
