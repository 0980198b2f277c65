"""Densify sparse pseudo-images through pluggable completion backends.

The in-repo baseline is a deterministic pull-push fill: a pyramid of exact
integer color sums over valid pixels (pull), then hole filling from parent
levels with a single final half-up rounding (push). Generative backends
attach out of process through a file-based protocol and are never linked
in.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from PIL import Image

from .errors import BackendError, ConfigurationError
from .render import PseudoImage, save_pseudo_image

PULL_PUSH_ID = "pull_push"


def pull_push_complete(p: PseudoImage) -> np.ndarray:
    """Fill invalid pixels by multiscale averaging; valid pixels pass through.

    Fully invalid input fills with black. Output is uint8 with the exact
    input values wherever valid.
    """
    sums = p.rgb.astype(np.uint64)
    weights = p.valid.astype(np.uint64)
    sums = sums * weights[:, :, None]

    # Pull: 2x2 block sums of color totals and valid counts per level.
    levels = [(sums, weights)]
    while levels[-1][0].shape[0] > 1 or levels[-1][0].shape[1] > 1:
        s, c = levels[-1]
        h, w = c.shape
        ph, pw = (h + 1) // 2 * 2, (w + 1) // 2 * 2
        if (ph, pw) != (h, w):
            s = np.pad(s, ((0, ph - h), (0, pw - w), (0, 0)))
            c = np.pad(c, ((0, ph - h), (0, pw - w)))
        s = s.reshape(ph // 2, 2, pw // 2, 2, 3).sum(axis=(1, 3))
        c = c.reshape(ph // 2, 2, pw // 2, 2).sum(axis=(1, 3))
        levels.append((s, c))

    # Push: holes adopt their parent's (sum, count) pair top-down.
    top_s, top_c = levels[-1]
    filled_s, filled_c = top_s.copy(), top_c.copy()
    for s, c in reversed(levels[:-1]):
        h, w = c.shape
        parent_s = filled_s.repeat(2, axis=0).repeat(2, axis=1)[:h, :w]
        parent_c = filled_c.repeat(2, axis=0).repeat(2, axis=1)[:h, :w]
        hole = c == 0
        filled_s = np.where(hole[:, :, None], parent_s, s)
        filled_c = np.where(hole, parent_c, c)

    out = np.zeros_like(filled_s, dtype=np.uint8)
    nz = filled_c > 0
    k = filled_c[nz][:, None]
    out[nz] = (2 * filled_s[nz] + k) // (2 * k)  # single half-up rounding
    return out


class PullPushBackend:
    identifier = PULL_PUSH_ID
    in_repo = True
    concurrent_safe = True

    def complete(self, pseudos: Sequence[PseudoImage]) -> list[np.ndarray]:
        return [pull_push_complete(p) for p in pseudos]


class SubprocessBackend:
    """Runs an external command following the file-based completion protocol.

    The engine writes ``<stem>.rgb.png``, ``<stem>.mask.png`` and
    ``<stem>.depth.png`` per frame, invokes the command with one extra
    argument (the input-manifest path), and reads ``<stem>.out.png`` back.
    A nonzero exit status or a missing output is a backend error.
    """

    in_repo = False
    concurrent_safe = False

    def __init__(self, command: Sequence[str], identifier: str | None = None):
        if not command:
            raise ConfigurationError("subprocess backend needs a command")
        self.command = list(command)
        self.identifier = identifier or f"cmd:{' '.join(command)}"

    def complete_stems(self, stems: Sequence[Path]) -> list[Path]:
        manifest = {
            "frames": [
                {
                    "stem": str(s),
                    "rgb": str(s) + ".rgb.png",
                    "mask": str(s) + ".mask.png",
                    "depth": str(s) + ".depth.png",
                }
                for s in stems
            ]
        }
        if not stems:
            return []
        manifest_path = Path(str(stems[0]) + ".backend.json")
        manifest_path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")
        proc = subprocess.run(self.command + [str(manifest_path)])
        if proc.returncode != 0:
            raise BackendError(
                f"backend {self.identifier!r} exited with status {proc.returncode}"
            )
        outs = []
        for s in stems:
            out = Path(str(s) + ".out.png")
            if not out.is_file():
                raise BackendError(f"backend {self.identifier!r} wrote no output for {s}")
            outs.append(out)
        return outs

    def complete(self, pseudos: Sequence[PseudoImage]) -> list[np.ndarray]:
        with tempfile.TemporaryDirectory(prefix="pseudoview_backend_") as td:
            stems = []
            for i, p in enumerate(pseudos):
                stem = Path(td) / f"frame{i:04d}"
                save_pseudo_image(p, stem)
                stems.append(stem)
            outs = self.complete_stems(stems)
            return [np.asarray(Image.open(o).convert("RGB")).copy() for o in outs]


_REGISTRY: dict[str, Callable[[], object]] = {PULL_PUSH_ID: PullPushBackend}


def register_backend(identifier: str, factory: Callable[[], object]) -> None:
    _REGISTRY[identifier] = factory


def get_backend(identifier: str):
    """Resolve a backend id; ``cmd:<command line>`` builds a subprocess backend."""
    if identifier.startswith("cmd:"):
        import shlex

        return SubprocessBackend(shlex.split(identifier[4:]), identifier)
    if identifier not in _REGISTRY:
        raise ConfigurationError(
            f"unknown backend {identifier!r}; registered: {sorted(_REGISTRY)}"
        )
    return _REGISTRY[identifier]()


def complete_sequence(backend, pseudos: Sequence[PseudoImage]) -> list[np.ndarray]:
    """Apply a backend per frame, preserving order.

    For in-repo backends the valid-pixel preservation contract is asserted
    around the call; external backends are exempt.
    """
    outputs = backend.complete(pseudos)
    if len(outputs) != len(pseudos):
        raise BackendError(
            f"backend {backend.identifier!r} returned {len(outputs)} frames "
            f"for {len(pseudos)} inputs"
        )
    for p, out in zip(pseudos, outputs):
        if out.shape != p.rgb.shape:
            raise BackendError(
                f"backend {backend.identifier!r} changed frame shape "
                f"{p.rgb.shape} -> {out.shape}"
            )
        if getattr(backend, "in_repo", False) and not np.array_equal(
            out[p.valid], p.rgb[p.valid]
        ):
            raise BackendError(
                f"backend {backend.identifier!r} modified valid pixels"
            )
    return outputs
