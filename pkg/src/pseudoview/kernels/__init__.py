"""Z-buffer scatter kernel with compiled and pure-numpy implementations.

The compiled extension is picked at import time when available; setting
``PSEUDOVIEW_FORCE_FALLBACK=1`` forces the numpy path. Both produce
byte-identical buffers, so the choice only affects speed.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback

try:
    from . import _zbuffer as _compiled
except ImportError:  # source checkout without a built extension
    _compiled = None

if _compiled is not None and not os.environ.get("PSEUDOVIEW_FORCE_FALLBACK"):
    _impl = _compiled
    BACKEND = "compiled"
else:
    _impl = fallback
    BACKEND = "numpy"

HAVE_COMPILED = _compiled is not None


def zbuffer_scatter(px, py, depth, colors, source_frames, splat_radius, height, width):
    """Scatter points into rgb/valid/depth rasters with z-buffer win rules.

    Inputs are per-point center pixels (already inside the raster), float32
    depths, uint8 colors, and int32 source-frame tags; the point's row is
    its tie-break index. Returns (rgb HxWx3 uint8, valid HxW bool,
    depth HxW float32 with +inf where invalid).
    """
    return _impl.zbuffer_scatter(
        np.ascontiguousarray(px, dtype=np.int64),
        np.ascontiguousarray(py, dtype=np.int64),
        np.ascontiguousarray(depth, dtype=np.float32),
        np.ascontiguousarray(colors, dtype=np.uint8).reshape(-1, 3),
        np.ascontiguousarray(source_frames, dtype=np.int32),
        int(splat_radius),
        int(height),
        int(width),
    )
