"""Exact largest empty circle in a 2-D box via the Voronoi diagram.

The diagram is taken as the dual of an incremental Delaunay triangulation
(Bowyer-Watson with ghost triangles for the hull). Orientation and in-circle
signs use a floating-point filter with an exact rational fallback, so
cocircular and collinear inputs are handled without perturbation.

Candidate centres for the empty circle are: Voronoi vertices inside the box,
out-of-box vertices clamped to the box, intersections of Voronoi edges with
the box boundary, and the four corners. The best one is exact for the
max-min distance problem restricted to the box.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .core import HighCostSet, Problem, RngStream
from .leh import LehPlacement

GHOST = -1
DUPLICATE_TOL = 1e-12

_EPS = 2.0**-53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


class DegenerateInput(ValueError):
    """Fewer than three distinct sites, or all sites collinear."""


def _sign(x) -> int:
    return (float(x) > 0) - (float(x) < 0)


def orient2d(a, b, c) -> int:
    """+1 if ``a, b, c`` turn counter-clockwise, -1 if clockwise, 0 if
    collinear (exact)."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    bound = _CCW_BOUND * (abs(detleft) + abs(detright))
    if det > bound or -det > bound:
        return _sign(det)
    ax, ay, bx, by, cx, cy = map(Fraction, (a[0], a[1], b[0], b[1], c[0], c[1]))
    return _sign((ax - cx) * (by - cy) - (ay - cy) * (bx - cx))


def incircle(a, b, c, d) -> int:
    """+1 if ``d`` lies strictly inside the circle through the
    counter-clockwise triangle ``a, b, c``; 0 if on it (exact)."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    bc, cb = bdx * cdy, cdx * bdy
    ca, ac = cdx * ady, adx * cdy
    ab, ba = adx * bdy, bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = alift * (bc - cb) + blift * (ca - ac) + clift * (ab - ba)
    permanent = (
        (abs(bc) + abs(cb)) * alift + (abs(ca) + abs(ac)) * blift + (abs(ab) + abs(ba)) * clift
    )
    bound = _ICC_BOUND * permanent
    if det > bound or -det > bound:
        return _sign(det)
    F = Fraction
    adx, ady = F(a[0]) - F(d[0]), F(a[1]) - F(d[1])
    bdx, bdy = F(b[0]) - F(d[0]), F(b[1]) - F(d[1])
    cdx, cdy = F(c[0]) - F(d[0]), F(c[1]) - F(d[1])
    exact = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    return _sign(exact)


def _canon(t):
    a, b, c = t
    if a <= b and a <= c:
        return t
    if b <= a and b <= c:
        return (b, c, a)
    return (c, a, b)


class DelaunayTriangulation:
    """Incremental Delaunay triangulation of points in the plane.

    Triangles are counter-clockwise vertex triples; ghost triangles carry
    the vertex ``GHOST`` and close the convex hull. ``apex[(u, v)]`` is the
    third vertex of the triangle owning directed edge ``u -> v``.
    """

    def __init__(self, points=()):
        self.points: list[tuple[float, float]] = []
        self.apex: dict[tuple[int, int], int] = {}
        self.triangles: set[tuple[int, int, int]] = set()  # canonical, real and ghost
        self.skipped: list[int] = []  # input order indices merged as duplicates
        self._pending: list[int] = []  # collected until a non-collinear triple exists
        self._seen: dict[tuple[float, float], int] = {}
        self._last = None
        self._walk_rng = random.Random(0)
        self._n_inputs = 0
        for p in points:
            self.add(p)

    @property
    def ready(self) -> bool:
        return bool(self.triangles)

    def add(self, p) -> int | None:
        """Insert a point; returns its vertex index, or None if it was merged
        into an existing vertex (or is waiting for a non-degenerate start)."""
        p = (float(p[0]), float(p[1]))
        self._n_inputs += 1
        if p in self._seen:
            self.skipped.append(self._n_inputs - 1)
            return None
        if not self.ready:
            return self._add_pending(p)
        return self._insert(p)

    def _new_vertex(self, p) -> int:
        self.points.append(p)
        idx = len(self.points) - 1
        self._seen[p] = idx
        return idx

    def _add_pending(self, p):
        for q in self._pending:
            if math.dist(self.points[q], p) <= DUPLICATE_TOL:
                self.skipped.append(self._n_inputs - 1)
                return None
        i = self._new_vertex(p)
        self._pending.append(i)
        if len(self._pending) < 3:
            return i
        a, b = self._pending[0], self._pending[1]
        s = orient2d(self.points[a], self.points[b], p)
        if s == 0:
            return i
        if s < 0:
            a, b = b, a
        self._make_triangle(a, b, i)
        for g in ((b, a), (i, b), (a, i)):
            self._make_triangle(g[0], g[1], GHOST)
        self._last = _canon((a, b, i))
        rest = [q for q in self._pending if q not in (a, b, i)]
        self._pending = []
        for q in rest:
            self._insert_existing(q)
        return i

    def _make_triangle(self, a, b, c):
        self.apex[(a, b)] = c
        self.apex[(b, c)] = a
        self.apex[(c, a)] = b
        self.triangles.add(_canon((a, b, c)))

    def _kill_triangle(self, t):
        a, b, c = t
        for e in ((a, b), (b, c), (c, a)):
            self.apex.pop(e, None)
        self.triangles.discard(t)

    def _in_conflict(self, t, p) -> bool:
        a, b, c = t
        pts = self.points
        if a == GHOST:  # canonical ghost (GHOST, u, v): hull edge u -> v, exterior on its left
            u, v = pts[b], pts[c]
            s = orient2d(u, v, p)
            if s != 0:
                return s > 0
            return min(u[0], v[0]) <= p[0] <= max(u[0], v[0]) and \
                min(u[1], v[1]) <= p[1] <= max(u[1], v[1]) and p != u and p != v
        return incircle(pts[a], pts[b], pts[c], p) > 0

    def _locate(self, p):
        pts = self.points
        t = self._last if self._last in self.triangles else next(iter(self.triangles))
        if t[0] == GHOST:  # step inside across its hull edge
            t = _canon((t[2], t[1], self.apex[(t[2], t[1])]))
        for _ in range(4 * len(pts) + 16):
            a, b, c = t
            edges = [(a, b), (b, c), (c, a)]
            start = self._walk_rng.randrange(3)
            for k in range(3):
                u, v = edges[(start + k) % 3]
                if orient2d(pts[u], pts[v], p) < 0:
                    w = self.apex[(v, u)]
                    t = _canon((v, u, w))
                    if w == GHOST:
                        return t
                    break
            else:
                return t
        # walk failed to settle (cannot happen with exact predicates); scan instead
        for t in self.triangles:
            if self._in_conflict(t, p):
                return t
        raise RuntimeError("point location failed")

    def _insert(self, p):
        t0 = self._locate(p)
        if t0[0] != GHOST:
            for v in t0:
                if math.dist(self.points[v], p) <= DUPLICATE_TOL:
                    self.skipped.append(self._n_inputs - 1)
                    return None
        else:
            for v in t0[1:]:
                if math.dist(self.points[v], p) <= DUPLICATE_TOL:
                    self.skipped.append(self._n_inputs - 1)
                    return None
        i = self._new_vertex(p)
        self._cavity_insert(i, t0)
        return i

    def _insert_existing(self, i):
        p = self.points[i]
        t0 = self._locate(p)
        self._cavity_insert(i, t0)

    def _cavity_insert(self, i, t0):
        p = self.points[i]
        cavity = {t0}
        stack = [t0]
        boundary = []
        while stack:
            t = stack.pop()
            a, b, c = t
            for u, v in ((a, b), (b, c), (c, a)):
                w = self.apex[(v, u)]
                nb = _canon((v, u, w))
                if nb in cavity:
                    continue
                if self._in_conflict(nb, p):
                    cavity.add(nb)
                    stack.append(nb)
                else:
                    boundary.append((u, v))
        for t in cavity:
            self._kill_triangle(t)
        for u, v in boundary:
            self._make_triangle(u, v, i)
        created = [_canon((u, v, i)) for u, v in boundary if GHOST not in (u, v)]
        self._last = created[0] if created else None

    def real_triangles(self) -> list[tuple[int, int, int]]:
        return [t for t in self.triangles if t[0] != GHOST]

    def edges(self):
        """Undirected Delaunay edges ``(u, v)`` with ``u < v``, each with
        the apex on its left and right (GHOST for hull sides)."""
        out = []
        for (u, v), w in self.apex.items():
            if u < v and u != GHOST:
                out.append((u, v, w, self.apex[(v, u)]))
        return out


def circumcenters(P: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a, b, c = P[tris[:, 0]], P[tris[:, 1]], P[tris[:, 2]]
    bx, by = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
    cx, cy = c[:, 0] - a[:, 0], c[:, 1] - a[:, 1]
    d = 2.0 * (bx * cy - by * cx)
    b2, c2 = bx * bx + by * by, cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    return np.column_stack([a[:, 0] + ux, a[:, 1] + uy])


@dataclass
class VoronoiEdge:
    start: int  # vertex index
    end: int | None  # vertex index, None for a ray
    direction: np.ndarray | None  # unit direction of a ray
    sites: tuple[int, int]


@dataclass
class VoronoiDiagram:
    sites: np.ndarray
    vertices: np.ndarray
    edges: list[VoronoiEdge]


def build_voronoi(sites, merge_tol: float = 1e-9) -> VoronoiDiagram:
    """Voronoi diagram of 2-D ``sites`` as the Delaunay dual.

    Circumcentres of cocircular triangles closer than ``merge_tol`` (scaled
    by the site spread) are merged into one vertex. Raises
    :class:`DegenerateInput` for fewer than three distinct or only
    collinear sites.
    """
    S = kernels.as_points(sites, 2)
    dt = DelaunayTriangulation(S)
    if not dt.ready:
        raise DegenerateInput("need three non-collinear distinct sites")
    P = np.array(dt.points)
    tris = sorted(dt.real_triangles())
    tri_index = {t: k for k, t in enumerate(tris)}
    cc = circumcenters(P, np.array(tris))

    scale = max(1.0, float(np.ptp(P, axis=0).max()))
    parent = list(range(len(tris)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    raw_edges = dt.edges()
    for u, v, wl, wr in raw_edges:
        if GHOST in (wl, wr):
            continue
        i, j = tri_index[_canon((u, v, wl))], tri_index[_canon((v, u, wr))]
        if np.linalg.norm(cc[i] - cc[j]) <= merge_tol * scale:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

    roots = sorted({find(k) for k in range(len(tris))})
    vid = {r: n for n, r in enumerate(roots)}
    vertex_of = [vid[find(k)] for k in range(len(tris))]
    vertices = np.array([cc[r] for r in roots])
    # vertex indices refer to the triangulation's (deduplicated) point order
    edges = []
    for u, v, wl, wr in sorted(raw_edges):
        if wl == GHOST or wr == GHOST:
            inner = _canon((u, v, wl)) if wr == GHOST else _canon((v, u, wr))
            a, b = (P[u], P[v]) if wr == GHOST else (P[v], P[u])
            # hull edge a -> b has the interior on its left; the ray points right
            d = np.array([b[1] - a[1], -(b[0] - a[0])])
            edges.append(VoronoiEdge(vertex_of[tri_index[inner]], None,
                                     d / np.linalg.norm(d), (u, v)))
        else:
            s = vertex_of[tri_index[_canon((u, v, wl))]]
            e = vertex_of[tri_index[_canon((v, u, wr))]]
            if s != e:
                edges.append(VoronoiEdge(s, e, None, (u, v)))
    return VoronoiDiagram(sites=P, vertices=vertices, edges=edges)


def _box_crossings(S, D, tmax, lower, upper):
    """Points where segments ``S + t D`` (0 <= t <= tmax) cross the box
    boundary, with the row index of the segment they came from."""
    pts, rows = [], []
    with np.errstate(divide="ignore", invalid="ignore"):
        for axis in (0, 1):
            other = 1 - axis
            for bound in (lower[axis], upper[axis]):
                t = (bound - S[:, axis]) / D[:, axis]
                y = S[:, other] + t * D[:, other]
                ok = (D[:, axis] != 0) & (t >= 0) & (t <= tmax) & \
                    (y >= lower[other]) & (y <= upper[other])
                idx = np.flatnonzero(ok)
                q = np.empty((len(idx), 2))
                q[:, axis] = bound
                q[:, other] = y[idx]
                pts.append(q)
                rows.append(idx)
    return np.vstack(pts), np.concatenate(rows)


def _corners(problem: Problem) -> np.ndarray:
    lo, hi = problem.lower, problem.upper
    return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]])


def _best_of(cands: np.ndarray, radii: np.ndarray, H, problem: Problem):
    k = int(np.argmax(radii))
    center = problem.clip(cands[k])
    d2, _ = kernels.min_sq_dist(center, H)
    r = math.sqrt(d2)
    return LehPlacement(center=center, radius=r, found=r > problem.gamma)


def _degenerate_placement(H: np.ndarray, problem: Problem) -> LehPlacement:
    """Fewer than three usable sites, or all collinear: the Voronoi edges are
    parallel bisectors between neighbours along the line."""
    cands = [_corners(problem)]
    uniq = np.unique(H, axis=0)
    if len(uniq) >= 2:
        axis = uniq[-1] - uniq[0]
        order = np.argsort(uniq @ axis, kind="stable")
        line = uniq[order]
        a, b = line[:-1], line[1:]
        mid = 0.5 * (a + b)
        d = b - a
        normal = np.column_stack([-d[:, 1], d[:, 0]])
        for sgn in (1.0, -1.0):
            q, _ = _box_crossings(mid, sgn * normal, np.inf, problem.lower, problem.upper)
            cands.append(q)
    C = np.ascontiguousarray(np.vstack(cands))
    radii = np.sqrt(kernels.min_sq_dists(C, H)[0])
    return _best_of(C, radii, H, problem)


def _placement(dt: DelaunayTriangulation, H: np.ndarray, problem: Problem,
               edge_crossings: bool = True) -> LehPlacement:
    if not dt.ready:
        return _degenerate_placement(H, problem)
    sites = kernels.Sites(H)
    lo, hi = problem.lower, problem.upper
    P = np.asarray(dt.points)
    tris = np.array(dt.real_triangles())
    cc = circumcenters(P, tris)
    radius = np.hypot(cc[:, 0] - P[tris[:, 0], 0], cc[:, 1] - P[tris[:, 0], 1])
    finite = np.isfinite(cc).all(axis=1)  # float underflow on near-flat triangles
    inside = finite & np.all((cc >= lo) & (cc <= hi), axis=1)

    cand = [cc[inside]]
    rad = [radius[inside]]

    outside = cc[finite & ~inside]
    if len(outside):
        clamped = np.ascontiguousarray(problem.clip(outside))
        cand.append(clamped)
        rad.append(np.sqrt(kernels.min_sq_dists(clamped, sites)[0]))

    if edge_crossings:
        tri_row = {_canon(tuple(t)): k for k, t in enumerate(tris.tolist())}
        starts, dirs, tmax, site = [], [], [], []
        for u, v, wl, wr in dt.edges():
            if wl != GHOST and wr != GHOST:
                s = cc[tri_row[_canon((u, v, wl))]]
                e = cc[tri_row[_canon((v, u, wr))]]
                starts.append(s)
                dirs.append(e - s)
                tmax.append(1.0)
            else:
                inner = _canon((u, v, wl)) if wr == GHOST else _canon((v, u, wr))
                a, b = (P[u], P[v]) if wr == GHOST else (P[v], P[u])
                starts.append(cc[tri_row[inner]])
                dirs.append(np.array([b[1] - a[1], a[0] - b[0]]))
                tmax.append(np.inf)
            site.append(u)
        if starts:
            q, rows = _box_crossings(np.array(starts), np.array(dirs), np.array(tmax), lo, hi)
            if len(q):
                owner = P[np.array(site)[rows]]
                cand.append(q)
                rad.append(np.hypot(q[:, 0] - owner[:, 0], q[:, 1] - owner[:, 1]))

    corners = _corners(problem)
    cand.append(corners)
    rad.append(np.sqrt(kernels.min_sq_dists(corners, sites)[0]))
    return _best_of(np.vstack(cand), np.concatenate(rad), sites, problem)


def vor_leh(hcps, problem: Problem, rng: RngStream | None = None,
            edge_crossings: bool = True) -> LehPlacement:
    """Largest empty circle centred in the box, among Voronoi-derived
    candidates. ``rng`` is unused (the method is deterministic)."""
    if problem.dim != 2:
        raise ValueError("the Voronoi calculator is 2-D only")
    H = kernels.as_points(hcps, 2)
    if len(H) == 0:
        raise ValueError("vor_leh needs at least one high cost point")
    return _placement(DelaunayTriangulation(H), H, problem, edge_crossings)


class VoronoiCalculator:
    """Stateful Voronoi calculator for one search.

    The high cost set only grows while the threshold falls, so the
    triangulation is extended with the new members instead of rebuilt.
    """

    name = "vor"

    def __init__(self, edge_crossings: bool = True):
        self.edge_crossings = bool(edge_crossings)
        self._dt = None
        self._ledger = None
        self._inserted: set[int] = set()

    def __call__(self, hcs: HighCostSet, problem: Problem, rng: RngStream) -> LehPlacement:
        if problem.dim != 2:
            raise ValueError("the Voronoi calculator is 2-D only")
        if len(hcs) == 0:
            raise ValueError("vor_leh needs at least one high cost point")
        members = hcs.members.tolist()
        if self._dt is None or hcs.ledger is not self._ledger or \
                not self._inserted.issubset(members):
            self._dt = DelaunayTriangulation()
            self._ledger = hcs.ledger
            self._inserted = set()
        history = hcs.ledger.history
        for m in members:
            if m not in self._inserted:
                self._dt.add(history[m])
                self._inserted.add(m)
        return _placement(self._dt, hcs.points, problem, self.edge_crossings)
