"""Pure numpy versions of the distance scans in ``_kernels.pyx``.

Squared distances are accumulated one coordinate at a time so the floating
point result matches the compiled kernels exactly.
"""

import numpy as np

_CHUNK = 1 << 20  # max entries of a (rows x sites) block held at once


def prepare(H):
    arr = np.ascontiguousarray(H, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("sites must be a 2-D array")
    if arr.shape[0] == 0:
        raise ValueError("empty point set")
    return arr


def _row_block(P, H):
    rows = max(1, _CHUNK // max(1, H.shape[0]))
    for start in range(0, P.shape[0], rows):
        yield start, P[start:start + rows]


def _sq_dist_matrix(P, H):
    acc = np.subtract.outer(P[:, 0], H[:, 0])
    acc *= acc
    for k in range(1, P.shape[1]):
        diff = np.subtract.outer(P[:, k], H[:, k])
        diff *= diff
        acc += diff
    return acc


def _used(H, count):
    if count >= 0:
        H = H[:count]
    if H.shape[0] == 0:
        raise ValueError("empty point set")
    return H


def min_sq_dist(p, H, count=-1):
    H = _used(H, count)
    d2, arg = min_sq_dists(p[None, :], H)
    return float(d2[0]), int(arg[0])


def min_sq_dists(P, H, count=-1):
    H = _used(H, count)
    out = np.empty(P.shape[0])
    arg = np.empty(P.shape[0], dtype=np.intp)
    for start, block in _row_block(P, H):
        d2 = _sq_dist_matrix(block, H)
        idx = np.argmin(d2, axis=1)
        arg[start:start + len(block)] = idx
        out[start:start + len(block)] = d2[np.arange(len(block)), idx]
    return out, arg


def first_clear(P, H, r2, count=-1):
    H = _used(H, count)
    for start, block in _row_block(P, H):
        d2 = _sq_dist_matrix(block, H).min(axis=1)
        clear = np.flatnonzero(d2 > r2)
        if clear.size:
            i = int(clear[0])
            return start + i, float(d2[i])
    return -1, -1.0
