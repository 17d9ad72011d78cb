"""Distance-scan kernels with a compiled fast path.

The Cython extension is used when it was built; otherwise (or when
``ROBUSTMIN_PURE_PYTHON=1`` is set) the numpy fallback is loaded. Both
produce bit-identical results, so the choice never changes a search.

Site sets are passed either as ``(m, n)`` arrays, as :class:`Sites`
(which caches the backend's preferred layout for repeated scans) or as a
:class:`SiteBuffer` that grows in place.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("ROBUSTMIN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not compiled
        _impl = _kernels_py
        BACKEND = "python"


def as_points(a, dim=None):
    """Return ``a`` as a C-contiguous ``(m, dim)`` float64 array."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim if dim is not None else arr.shape[0])
    return arr


class Sites:
    """A fixed site set laid out once for the active backend."""

    def __init__(self, points):
        self.points = as_points(points)
        self._backend = None
        self._data = None

    def __len__(self):
        return self.points.shape[0]

    def data(self):
        if self._backend is not _impl:
            self._data = _impl.prepare(self.points)
            self._backend = _impl
        return self._data, -1


class SiteBuffer:
    """Append-only site set whose prepared layout is extended in place,
    for site sets that only ever grow (scans see sites in append order)."""

    def __init__(self, dim, capacity=256):
        self.dim = int(dim)
        self._rows = np.empty((max(8, capacity), self.dim))
        self._m = 0
        self._cols = None  # coordinate-major, NaN padded (compiled backend)

    def __len__(self):
        return self._m

    @property
    def points(self):
        return self._rows[: self._m]

    def extend(self, points):
        pts = as_points(points, self.dim)
        k = len(pts)
        if not k:
            return
        end = self._m + k
        if end > len(self._rows):
            cap = max(end, 2 * len(self._rows))
            rows = np.empty((cap, self.dim))
            rows[: self._m] = self._rows[: self._m]
            self._rows = rows
            self._cols = None
        self._rows[self._m:end] = pts
        if self._cols is not None:
            self._cols[:, self._m:end] = pts.T
        self._m = end

    def data(self):
        if self._m == 0:
            raise ValueError("empty point set")
        if _impl is _kernels_py:
            return self._rows, self._m
        if self._cols is None:
            cap = -(-len(self._rows) // 8) * 8
            self._cols = np.full((self.dim, cap), np.nan)
            self._cols[:, : self._m] = self._rows[: self._m].T
        return self._cols, self._m


def _sites(H):
    if isinstance(H, (Sites, SiteBuffer)):
        return H.data()
    return _impl.prepare(H), -1


def min_sq_dist(p, H):
    """Squared distance from ``p`` to its nearest site and that site's
    index (lowest index on ties)."""
    data, count = _sites(H)
    return _impl.min_sq_dist(np.ascontiguousarray(p, dtype=np.float64), data, count)


def min_sq_dists(P, H):
    """Vectorised :func:`min_sq_dist` over the rows of ``P``."""
    data, count = _sites(H)
    return _impl.min_sq_dists(np.ascontiguousarray(P, dtype=np.float64), data, count)


def first_clear(P, H, r2):
    """First row of ``P`` with every site strictly farther than
    ``sqrt(r2)``; ``(-1, -1.0)`` if none."""
    data, count = _sites(H)
    return _impl.first_clear(np.ascontiguousarray(P, dtype=np.float64), data, float(r2), count)


def use_backend(name):
    """Switch backends at runtime (benchmarks and equivalence tests)."""
    global _impl, BACKEND
    if name == "python":
        _impl = _kernels_py
    elif name == "cython":
        from . import _kernels
        _impl = _kernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
