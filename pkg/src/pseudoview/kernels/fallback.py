"""Pure-numpy z-buffer scatter, the portable fallback for the compiled kernel.

Winner rule per pixel: smallest depth, exact float32 depth ties broken by
the smallest (source_frame, point row) pair. One vectorized tournament pass
runs per splat offset so memory stays at O(points).
"""

from __future__ import annotations

import numpy as np

_INT64_MAX = np.iinfo(np.int64).max


def zbuffer_scatter(px, py, depth, colors, source_frames, splat_radius, height, width):
    n = len(px)
    npix = height * width
    win_depth = np.full(npix, np.inf, dtype=np.float32)
    win_sf = np.full(npix, _INT64_MAX, dtype=np.int64)
    win_idx = np.full(npix, -1, dtype=np.int64)

    idx = np.arange(n, dtype=np.int64)
    sf = source_frames.astype(np.int64)
    r = int(splat_radius)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            qx = px + dx
            qy = py + dy
            if r > 0:
                inside = (qx >= 0) & (qx < width) & (qy >= 0) & (qy < height)
                pid = qy[inside] * width + qx[inside]
                d, s, i = depth[inside], sf[inside], idx[inside]
            else:
                pid = qy * width + qx
                d, s, i = depth, sf, idx
            if len(pid) == 0:
                continue
            # Best candidate per pixel within this pass.
            order = np.lexsort((i, s, d, pid))
            pid_sorted = pid[order]
            firsts = np.nonzero(np.r_[True, pid_sorted[1:] != pid_sorted[:-1]])[0]
            w = order[firsts]
            p_u = pid_sorted[firsts]
            d_u, s_u, i_u = d[w], s[w], i[w]
            cur_d, cur_s, cur_i = win_depth[p_u], win_sf[p_u], win_idx[p_u]
            better = (d_u < cur_d) | (
                (d_u == cur_d) & ((s_u < cur_s) | ((s_u == cur_s) & (i_u < cur_i)))
            )
            upd = p_u[better]
            win_depth[upd] = d_u[better]
            win_sf[upd] = s_u[better]
            win_idx[upd] = i_u[better]

    hit = win_idx >= 0
    rgb = np.zeros((npix, 3), dtype=np.uint8)
    rgb[hit] = colors[win_idx[hit]]
    out_depth = np.full(npix, np.inf, dtype=np.float32)
    out_depth[hit] = depth[win_idx[hit]]
    return (
        rgb.reshape(height, width, 3),
        hit.reshape(height, width),
        out_depth.reshape(height, width),
    )
