# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance scans.

Sites are transposed to coordinate-major order and scanned in register
tiles of 4 query points x 8 sites using gcc/clang vector types. Each
squared distance is still accumulated coordinate by coordinate in index
order (``d0*d0 + d1*d1 + ...``, no FMA), so results are bit-identical to
``_kernels_py``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #include <math.h>
    #include <stddef.h>
    #include <string.h>

    #define RM_ROWS 4
    #define RM_LANES 8

    /* gcc/clang vector extension; without AVX it lowers to SSE2 pairs */
    typedef double rm_v4 __attribute__((vector_size(32)));
    #define RM_LOAD(v, ptr) memcpy(&(v), (ptr), sizeof(rm_v4))
    #define RM_FIRST(a, c, h) do { rm_v4 d_ = (c) - (h); a = d_ * d_; } while (0)
    #define RM_NEXT(a, c, h) do { rm_v4 d_ = (c) - (h); a = a + d_ * d_; } while (0)

    /* Nearest site for RM_ROWS query points against the first m columns
       of a coordinate-major (n, stride) site array, 8 sites per step.
       stride must be a multiple of 8 covering m rounded up; lanes past m
       are read but never chosen (padding is NaN, which never compares
       below anything).
       Accumulators stay in registers across the coordinate loop. With
       early set, returns once every row is within sqrt(stop) of a site. */
    /* an AVX2 clone, picked at load time, roughly halves scan time; FMA
       is a separate target, so contraction stays off either way */
    #if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
    __attribute__((target_clones("avx2", "default")))
    #endif
    static void
    rm_nearest_tile(const double *const *rows, const double *Ht, ptrdiff_t stride,
                    ptrdiff_t m, ptrdiff_t n, int early, double stop,
                    double *best, ptrdiff_t *arg)
    {
        const double *p0 = rows[0], *p1 = rows[1], *p2 = rows[2], *p3 = rows[3];
        double b[RM_ROWS] = {INFINITY, INFINITY, INFINITY, INFINITY};
        ptrdiff_t g[RM_ROWS] = {-1, -1, -1, -1};
        ptrdiff_t j = 0, k;
        int r, u;
        for (; j < m; j += RM_LANES) {
            const ptrdiff_t lanes = m - j < RM_LANES ? m - j : RM_LANES;
            rm_v4 h0, h1, a00, a01, a10, a11, a20, a21, a30, a31;
            RM_LOAD(h0, Ht + j);
            RM_LOAD(h1, Ht + j + 4);
            RM_FIRST(a00, p0[0], h0); RM_FIRST(a01, p0[0], h1);
            RM_FIRST(a10, p1[0], h0); RM_FIRST(a11, p1[0], h1);
            RM_FIRST(a20, p2[0], h0); RM_FIRST(a21, p2[0], h1);
            RM_FIRST(a30, p3[0], h0); RM_FIRST(a31, p3[0], h1);
            for (k = 1; k < n; k++) {
                const double *row = Ht + k * stride + j;
                const double c0 = p0[k], c1 = p1[k], c2 = p2[k], c3 = p3[k];
                RM_LOAD(h0, row);
                RM_LOAD(h1, row + 4);
                RM_NEXT(a00, c0, h0); RM_NEXT(a01, c0, h1);
                RM_NEXT(a10, c1, h0); RM_NEXT(a11, c1, h1);
                RM_NEXT(a20, c2, h0); RM_NEXT(a21, c2, h1);
                RM_NEXT(a30, c3, h0); RM_NEXT(a31, c3, h1);
            }
            /* lanes in site order with strict <: ties keep the lowest index */
            rm_v4 lo[RM_ROWS][2] = {{a00, a01}, {a10, a11}, {a20, a21}, {a30, a31}};
            for (r = 0; r < RM_ROWS; r++)
                for (u = 0; u < lanes; u++) {
                    double x = lo[r][u >> 2][u & 3];
                    if (x < b[r]) { b[r] = x; g[r] = j + u; }
                }
            if (early && b[0] <= stop && b[1] <= stop && b[2] <= stop && b[3] <= stop)
                break;
        }
        for (r = 0; r < RM_ROWS; r++) { best[r] = b[r]; arg[r] = g[r]; }
    }

    """
    int RM_ROWS
    void rm_nearest_tile(const double** rows, const double* Ht, Py_ssize_t stride,
                         Py_ssize_t m, Py_ssize_t n, int early, double stop,
                         double* best, Py_ssize_t* arg) noexcept nogil


cdef inline void _tile_rows(const double* P, Py_ssize_t n, Py_ssize_t i,
                            Py_ssize_t q, const double** rows) noexcept nogil:
    cdef Py_ssize_t r, src
    for r in range(RM_ROWS):
        src = i + r if i + r < q else q - 1
        rows[r] = P + src * n


def prepare(H):
    """Coordinate-major copy of the ``(m, n)`` sites, padded with NaN sites
    to a multiple of 8. All scans take this layout."""
    arr = np.asarray(H, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("sites must be a 2-D array")
    m = arr.shape[0]
    if m == 0:
        raise ValueError("empty point set")
    Ht = np.full((arr.shape[1], -(-m // 8) * 8), np.nan)
    Ht[:, :m] = arr.T
    return Ht


cdef _prepared(Ht):
    if not isinstance(Ht, np.ndarray) or Ht.ndim != 2 or Ht.shape[1] % 8:
        raise ValueError("sites must come from prepare()")
    return Ht


cdef Py_ssize_t _columns(const double[:, ::1] Ht, Py_ssize_t count) except -1:
    # number of leading sites to scan
    if count < 0:
        return Ht.shape[1]
    if count == 0:
        raise ValueError("empty point set")
    if count > Ht.shape[1]:
        raise ValueError("count exceeds the prepared sites")
    return count


def min_sq_dist(const double[::1] p, Ht, Py_ssize_t count=-1):
    """Return ``(d2, index)`` of the nearest site to ``p``."""
    d2, arg = min_sq_dists(np.asarray(p).reshape(1, -1), Ht, count)
    return float(d2[0]), int(arg[0])


def min_sq_dists(const double[:, ::1] P, Ht_arr, Py_ssize_t count=-1):
    """Row-wise nearest squared distance and site index for ``P``."""
    cdef double[:, ::1] Ht = _prepared(Ht_arr)
    cdef Py_ssize_t n = Ht.shape[0]
    cdef Py_ssize_t m = _columns(Ht, count)
    cdef Py_ssize_t q = P.shape[0]
    out = np.empty(q, dtype=np.float64)
    arg = np.empty(q, dtype=np.intp)
    cdef double[::1] out_v = out
    cdef Py_ssize_t[::1] arg_v = arg
    cdef const double* rows[4]
    cdef double best[4]
    cdef Py_ssize_t idx[4]
    cdef Py_ssize_t i, r
    if q == 0:
        return out, arg
    if P.shape[1] != n:
        raise ValueError("dimension mismatch")
    with nogil:
        i = 0
        while i < q:
            _tile_rows(&P[0, 0], n, i, q, rows)
            rm_nearest_tile(rows, &Ht[0, 0], Ht.shape[1], m, n, 0, 0.0, best, idx)
            for r in range(RM_ROWS):
                if i + r < q:
                    out_v[i + r] = best[r]
                    arg_v[i + r] = idx[r]
            i += RM_ROWS
    return out, arg


def first_clear(const double[:, ::1] P, Ht_arr, double r2, Py_ssize_t count=-1):
    """Index of the first row of ``P`` whose nearest site is
    strictly farther than ``sqrt(r2)``, with that squared distance.

    Returns ``(-1, -1.0)`` when no row qualifies.
    """
    cdef double[:, ::1] Ht = _prepared(Ht_arr)
    cdef Py_ssize_t n = Ht.shape[0]
    cdef Py_ssize_t m = _columns(Ht, count)
    cdef Py_ssize_t q = P.shape[0]
    cdef const double* rows[4]
    cdef double best[4]
    cdef Py_ssize_t idx[4]
    cdef Py_ssize_t i, r
    cdef double hit_d2 = -1.0
    cdef Py_ssize_t hit = -1
    if q and P.shape[1] != n:
        raise ValueError("dimension mismatch")
    with nogil:
        i = 0
        while i < q and hit < 0:
            _tile_rows(&P[0, 0], n, i, q, rows)
            # early exit leaves best[r] as an upper bound, still <= r2
            rm_nearest_tile(rows, &Ht[0, 0], Ht.shape[1], m, n, 1, r2, best, idx)
            for r in range(RM_ROWS):
                if i + r < q and best[r] > r2:
                    hit = i + r
                    hit_d2 = best[r]
                    break
            i += RM_ROWS
    return hit, hit_d2
