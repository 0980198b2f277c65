# cython: boundscheck=False, wraparound=False, nonecheck=False, cdivision=True
"""Sequential z-buffer scatter, the compiled hot path.

Same contract as kernels.fallback.zbuffer_scatter: smallest depth wins a
pixel, exact float32 ties fall to the smallest (source_frame, row) pair.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def zbuffer_scatter(
    cnp.int64_t[::1] px,
    cnp.int64_t[::1] py,
    cnp.float32_t[::1] depth,
    const cnp.uint8_t[:, ::1] colors,
    cnp.int32_t[::1] source_frames,
    int splat_radius,
    int height,
    int width,
):
    cdef Py_ssize_t n = px.shape[0]
    rgb_arr = np.zeros((height, width, 3), dtype=np.uint8)
    valid_arr = np.zeros((height, width), dtype=np.uint8)
    depth_arr = np.full((height, width), np.inf, dtype=np.float32)
    sf_arr = np.full((height, width), np.iinfo(np.int64).max, dtype=np.int64)
    idx_arr = np.full((height, width), -1, dtype=np.int64)

    cdef cnp.uint8_t[:, :, ::1] rgb = rgb_arr
    cdef cnp.uint8_t[:, ::1] valid = valid_arr
    cdef cnp.float32_t[:, ::1] zbuf = depth_arr
    cdef cnp.int64_t[:, ::1] sfbuf = sf_arr
    cdef cnp.int64_t[:, ::1] idxbuf = idx_arr

    cdef Py_ssize_t i
    cdef long long x, y, qx, qy, x0, x1, y0, y1, sf
    cdef float d
    cdef int r = splat_radius
    cdef bint wins

    for i in range(n):
        x = px[i]
        y = py[i]
        d = depth[i]
        sf = source_frames[i]
        x0 = x - r if x - r >= 0 else 0
        x1 = x + r if x + r < width else width - 1
        y0 = y - r if y - r >= 0 else 0
        y1 = y + r if y + r < height else height - 1
        for qy in range(y0, y1 + 1):
            for qx in range(x0, x1 + 1):
                wins = d < zbuf[qy, qx]
                if not wins and d == zbuf[qy, qx]:
                    if sf < sfbuf[qy, qx]:
                        wins = True
                    elif sf == sfbuf[qy, qx] and i < idxbuf[qy, qx]:
                        wins = True
                if wins:
                    zbuf[qy, qx] = d
                    sfbuf[qy, qx] = sf
                    idxbuf[qy, qx] = i
                    rgb[qy, qx, 0] = colors[i, 0]
                    rgb[qy, qx, 1] = colors[i, 1]
                    rgb[qy, qx, 2] = colors[i, 2]
                    valid[qy, qx] = 1

    return rgb_arr, valid_arr.view(np.bool_), depth_arr
