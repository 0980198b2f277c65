"""Completion-backend entry point for the engine's subprocess protocol.

The engine invokes the backend command with one argument, a JSON manifest
listing frame records with a ``stem`` path; the backend reads
``<stem>.rgb.png`` + ``<stem>.mask.png`` and must write ``<stem>.out.png``.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from PIL import Image

from .data import from_unit_range, load_condition
from .sampling import CFG_SCALE_RECORDED, ETA, SAMPLING_STEPS, sample
from .training import load_checkpoint


def run_backend(
    manifest_path: str | Path,
    checkpoint_path: str | Path,
    steps: int = SAMPLING_STEPS,
    cfg_scale: float = CFG_SCALE_RECORDED,
    eta: float = ETA,
    seed: int = 0,
) -> int:
    manifest_path = Path(manifest_path)
    checkpoint_path = Path(checkpoint_path)
    if not checkpoint_path.is_file():
        print(f"toybridge: checkpoint not found: {checkpoint_path}")
        return 1
    if not manifest_path.is_file():
        print(f"toybridge: input manifest not found: {manifest_path}")
        return 1

    model, sched = load_checkpoint(checkpoint_path)
    doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    gen = torch.Generator().manual_seed(seed)
    for record in doc.get("frames", []):
        stem = Path(record["stem"])
        condition = load_condition(stem)
        out = sample(model, sched, condition, steps=steps, cfg_scale=cfg_scale,
                     eta=eta, generator=gen)
        Image.fromarray(from_unit_range(out[0]), "RGB").save(str(stem) + ".out.png")
    return 0
