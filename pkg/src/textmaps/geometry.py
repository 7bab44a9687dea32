"""Polygon, raster, and point-set primitives.

All coordinates are float64 image pixels with x growing right and y growing
down.  Binary masks are plain ``(height, width)`` boolean numpy arrays; the
pixel at row ``i``, column ``j`` covers the unit square centred on
``(j + 0.5, i + 0.5)``, and containment tests always use that centre point
with the even-odd rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import shapely.geometry as _sgeom
from scipy.spatial import ConvexHull, Delaunay, QhullError, cKDTree

from .errors import DegenerateGeometryError, ParameterError

log = logging.getLogger(__name__)

# Vertices closer than this (or closer than this to the line through their
# neighbours) are merged away during normalization.
VERTEX_TOLERANCE = 1e-6

# Sagitta allowed when round buffer joins are flattened into segments, px.
ARC_TOLERANCE = 0.25


class Polygon:
    """A simple closed contour with at least three float64 vertices.

    Construction normalizes the ring: duplicate and collinear vertices are
    stripped (tolerance 1e-6 px), orientation is forced counter-clockwise
    (positive shoelace sum), and contours without usable area are rejected
    with :class:`DegenerateGeometryError`.  Instances are immutable.
    """

    __slots__ = ("_vertices",)

    def __init__(self, vertices):
        pts = np.asarray(vertices, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise DegenerateGeometryError(
                f"polygon needs an (n, 2) vertex array with n >= 3, got shape {pts.shape}"
            )
        if not np.isfinite(pts).all():
            raise DegenerateGeometryError("polygon vertices must be finite")
        pts = _strip_redundant_vertices(pts)
        if pts.shape[0] < 3:
            raise DegenerateGeometryError("fewer than 3 distinct vertices after cleanup")
        area2 = _signed_area2(pts)
        if abs(area2) < 2.0 * VERTEX_TOLERANCE:
            raise DegenerateGeometryError("polygon area is numerically zero")
        if area2 < 0:
            pts = pts[::-1].copy()
        pts.setflags(write=False)
        self._vertices = pts

    @property
    def vertices(self) -> np.ndarray:
        """Read-only (n, 2) float64 vertex array, counter-clockwise."""
        return self._vertices

    def __len__(self):
        return self._vertices.shape[0]

    @property
    def area(self) -> float:
        return 0.5 * _signed_area2(self._vertices)

    @property
    def perimeter(self) -> float:
        edges = np.roll(self._vertices, -1, axis=0) - self._vertices
        return float(np.hypot(edges[:, 0], edges[:, 1]).sum())

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(self._vertices + np.array([dx, dy]))

    def scaled(self, factor: float) -> "Polygon":
        return Polygon(self._vertices * float(factor))

    def to_shapely(self) -> _sgeom.Polygon:
        return _sgeom.Polygon(self._vertices)

    def __repr__(self):
        return f"Polygon({self._vertices.shape[0]} vertices, area={self.area:.2f})"


@dataclass(frozen=True)
class MultiPolygon:
    """Zero or more disjoint polygons, e.g. the output of an inward offset."""

    parts: tuple = field(default_factory=tuple)

    @property
    def is_empty(self) -> bool:
        return len(self.parts) == 0

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    @property
    def area(self) -> float:
        return sum(p.area for p in self.parts)


def _signed_area2(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _strip_redundant_vertices(pts: np.ndarray, tol: float = VERTEX_TOLERANCE) -> np.ndarray:
    # Drop an explicit closing vertex before the cyclic passes.
    if pts.shape[0] > 1 and np.hypot(*(pts[0] - pts[-1])) <= tol:
        pts = pts[:-1]
    changed = True
    while changed and pts.shape[0] >= 3:
        changed = False
        nxt = np.roll(pts, -1, axis=0)
        keep = np.hypot(*(nxt - pts).T) > tol
        if not keep.all():
            pts = pts[keep]
            changed = True
            continue
        prv = np.roll(pts, 1, axis=0)
        nxt = np.roll(pts, -1, axis=0)
        chord = nxt - prv
        chord_len = np.hypot(chord[:, 0], chord[:, 1])
        # Perpendicular distance of each vertex from the line through its
        # neighbours; zero-length chords (spikes) also count as redundant.
        cross = chord[:, 0] * (pts[:, 1] - prv[:, 1]) - chord[:, 1] * (pts[:, 0] - prv[:, 0])
        dist = np.where(chord_len > 0, np.abs(cross) / np.maximum(chord_len, 1e-300), 0.0)
        redundant = dist <= tol
        if redundant.any():
            # Remove one vertex per pass to keep neighbour geometry coherent.
            pts = np.delete(pts, int(np.argmax(redundant)), axis=0)
            changed = True
    return pts


def polygon_area(p: Polygon) -> float:
    """Shoelace area in px^2; strictly positive for any constructed Polygon."""
    return p.area


def polygon_perimeter(p: Polygon) -> float:
    """Total edge length in px, closing edge included."""
    return p.perimeter


def shrink_offset(p: Polygon, alpha: float) -> float:
    """Inward offset distance realizing shrink ratio ``alpha``.

    ``d = area * (1 - alpha^2) / perimeter``; zero exactly when alpha is 1.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"shrink ratio alpha must be in (0, 1], got {alpha}")
    return p.area * (1.0 - alpha * alpha) / p.perimeter


def expand_offset(p: Polygon, beta: float) -> float:
    """Outward offset distance realizing expansion ratio ``beta``.

    Sign-symmetric analogue of :func:`shrink_offset`:
    ``d = area * (beta^2 - 1) / perimeter``.
    """
    if beta < 1.0:
        raise ParameterError(f"expansion ratio beta must be >= 1, got {beta}")
    return p.area * (beta * beta - 1.0) / p.perimeter


def _round_join_segments(radius: float, tol: float = ARC_TOLERANCE) -> int:
    # Segments per quarter circle so the sagitta stays below `tol`.
    if radius <= tol:
        return 4
    step = 2.0 * math.acos(1.0 - tol / radius)
    return max(4, int(math.ceil(0.5 * math.pi / step)))


def offset_polygon(p: Polygon, delta: float) -> MultiPolygon:
    """Offset a polygon by ``delta`` px (negative = inward, positive = outward).

    Uses round joins flattened to ARC_TOLERANCE.  An inward offset past the
    inradius yields an empty MultiPolygon; a concave contour may split into
    several parts.  ``delta == 0`` returns the input unchanged.
    """
    if delta == 0.0:
        return MultiPolygon((p,))
    buffered = p.to_shapely().buffer(
        float(delta),
        quad_segs=_round_join_segments(abs(delta)),
        join_style="round",
    )
    parts = []
    if buffered.geom_type == "Polygon":
        geoms = [buffered]
    elif buffered.geom_type == "MultiPolygon":
        geoms = list(buffered.geoms)
    else:
        geoms = []
    for geom in geoms:
        if geom.is_empty or geom.area <= VERTEX_TOLERANCE:
            continue
        try:
            parts.append(Polygon(np.asarray(geom.exterior.coords)[:-1]))
        except DegenerateGeometryError:
            continue
    return MultiPolygon(tuple(parts))


def _evenodd_inside(verts: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Even-odd containment of a grid: xs (w,), ys (h,) -> (h, w) bool."""
    inside = np.zeros((ys.size, xs.size), dtype=bool)
    x0, y0 = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    X = xs[None, :]
    Y = ys[:, None]
    for k in range(verts.shape[0]):
        if y0[k] == y1[k]:
            continue
        crosses = (y0[k] > Y) != (y1[k] > Y)
        x_at = x0[k] + (Y - y0[k]) * (x1[k] - x0[k]) / (y1[k] - y0[k])
        inside ^= crosses & (X < x_at)
    return inside


def rasterize(shape, width: int, height: int) -> np.ndarray:
    """Rasterize a Polygon or MultiPolygon onto a (height, width) bool mask.

    A pixel is set iff its centre lies inside some part under the even-odd
    rule; geometry outside the image is silently clipped.
    """
    if width <= 0 or height <= 0:
        raise ParameterError(f"mask dimensions must be positive, got {width}x{height}")
    mask = np.zeros((height, width), dtype=bool)
    parts = shape.parts if isinstance(shape, MultiPolygon) else (shape,)
    for part in parts:
        verts = part.vertices
        j0 = max(int(math.floor(verts[:, 0].min() - 0.5)), 0)
        j1 = min(int(math.ceil(verts[:, 0].max() + 0.5)), width)
        i0 = max(int(math.floor(verts[:, 1].min() - 0.5)), 0)
        i1 = min(int(math.ceil(verts[:, 1].max() + 0.5)), height)
        if j0 >= j1 or i0 >= i1:
            continue
        xs = np.arange(j0, j1, dtype=np.float64) + 0.5
        ys = np.arange(i0, i1, dtype=np.float64) + 0.5
        mask[i0:i1, j0:j1] |= _evenodd_inside(verts, xs, ys)
    return mask


def nearest_boundary_points(p: Polygon, queries: np.ndarray):
    """Closest boundary point for each query.

    Args:
        p: polygon whose boundary (edges included) is searched.
        queries: (n, 2) float array of points.

    Returns:
        (projections (n, 2), distances (n,)) with exact segment projections.
    """
    q = np.asarray(queries, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    a = p.vertices
    b = np.roll(a, -1, axis=0)
    ab = b - a
    ab_len2 = np.maximum((ab * ab).sum(axis=1), 1e-300)
    # (n, e) parameter of the perpendicular foot, clamped to the segment.
    diff = q[:, None, :] - a[None, :, :]
    t = np.clip((diff * ab[None, :, :]).sum(axis=2) / ab_len2[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d2 = ((q[:, None, :] - proj) ** 2).sum(axis=2)
    best = np.argmin(d2, axis=1)
    rows = np.arange(q.shape[0])
    nearest = proj[rows, best]
    dist = np.sqrt(d2[rows, best])
    if single:
        return nearest[0], float(dist[0])
    return nearest, dist


def nearest_boundary_point(p: Polygon, q) -> tuple:
    """Closest point on the polygon boundary to ``q`` and its distance."""
    pt, dist = nearest_boundary_points(p, np.asarray(q, dtype=np.float64))
    return (float(pt[0]), float(pt[1])), dist


def _as_valid_shapely(p: Polygon) -> _sgeom.Polygon:
    sp = p.to_shapely()
    if not sp.is_valid:
        sp = sp.buffer(0)
    return sp


def polygon_iou(a: Polygon, b: Polygon) -> float:
    """Intersection over union of two polygons via exact clipping."""
    sa = _as_valid_shapely(a)
    sb = _as_valid_shapely(b)
    inter = sa.intersection(sb).area
    union = sa.area + sb.area - inter
    if union <= 0.0:
        return 0.0
    return float(inter / union)


def _unique_points(points: np.ndarray) -> np.ndarray:
    """Distinct points, merging clusters tighter than the vertex tolerance.

    Single-precision label storage leaves rounding twins a few 1e-8 apart;
    left in place they form degenerate micro-triangles in the Delaunay step,
    so each tolerance cluster is reduced to its lexicographically smallest
    member.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateGeometryError(f"expected an (n, 2) point array, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise DegenerateGeometryError("points must be finite")
    pts = np.unique(pts, axis=0)
    if pts.shape[0] < 2:
        return pts
    pairs = cKDTree(pts).query_pairs(VERTEX_TOLERANCE, output_type="ndarray")
    if pairs.size == 0:
        return pts
    parent = np.arange(pts.shape[0])

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            # Rows are sorted, so the smaller index is the smaller point.
            parent[max(ra, rb)] = min(ra, rb)
    keep = np.array([find(i) == i for i in range(pts.shape[0])])
    return pts[keep]


def _delaunay_circumradii(unique_pts: np.ndarray):
    """Delaunay simplices plus circumradius per triangle (inf when degenerate)."""
    tri = Delaunay(unique_pts)
    s = tri.simplices
    pa, pb, pc = unique_pts[s[:, 0]], unique_pts[s[:, 1]], unique_pts[s[:, 2]]
    la = np.hypot(*(pb - pc).T)
    lb = np.hypot(*(pc - pa).T)
    lc = np.hypot(*(pa - pb).T)
    cross = (pb[:, 0] - pa[:, 0]) * (pc[:, 1] - pa[:, 1]) - (pb[:, 1] - pa[:, 1]) * (
        pc[:, 0] - pa[:, 0]
    )
    area2 = np.abs(cross)
    with np.errstate(divide="ignore", invalid="ignore"):
        radii = la * lb * lc / (2.0 * area2)
    radii[area2 == 0.0] = np.inf
    return s, radii


def _split_simple_loops(loop):
    """Split a stitched vertex cycle at repeats so every loop is simple."""
    out = []
    stack = []
    pos = {}
    for v in loop:
        if v in pos:
            start = pos[v]
            cycle = stack[start:]
            if len(cycle) >= 3:
                out.append(cycle)
            for u in stack[start:]:
                pos.pop(u, None)
            del stack[start:]
        pos[v] = len(stack)
        stack.append(v)
    if len(stack) >= 3:
        out.append(stack)
    return out


def _boundary_loops(triangles: np.ndarray):
    """Vertex-index loops bounding a set of triangles (edges used once)."""
    edges = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    boundary = uniq[counts == 1]
    adj = {}
    for u, v in boundary:
        adj.setdefault(int(u), []).append(int(v))
        adj.setdefault(int(v), []).append(int(u))
    for nbrs in adj.values():
        nbrs.sort()
    used = set()
    loops = []
    for u, v in boundary:
        u, v = int(u), int(v)
        key = (u, v)
        if key in used:
            continue
        walk = [u]
        prev, cur = u, v
        used.add(key)
        while cur != u:
            walk.append(cur)
            nxt = None
            for cand in adj[cur]:
                if cand == prev:
                    continue
                ek = (min(cur, cand), max(cur, cand))
                if ek not in used:
                    nxt = cand
                    break
            if nxt is None:
                break
            used.add((min(cur, nxt), max(cur, nxt)))
            prev, cur = cur, nxt
        loops.extend(_split_simple_loops(walk))
    return loops


def _triangle_components(triangles: np.ndarray):
    """Group triangles into edge-connected components (largest first)."""
    n = triangles.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    edge_owner = {}
    for idx in range(n):
        t = triangles[idx]
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (int(min(a, b)), int(max(a, b)))
            other = edge_owner.setdefault(key, idx)
            if other != idx:
                ra, rb = find(idx), find(other)
                if ra != rb:
                    parent[ra] = rb
    groups = {}
    for idx in range(n):
        groups.setdefault(find(idx), []).append(idx)
    comps = [triangles[np.array(ids)] for ids in groups.values()]
    comps.sort(key=lambda tri: -np.unique(tri).size)
    return comps


def _loops_to_polygon(loops, pts: np.ndarray):
    """Outer contour of a triangle component: the largest-area simple loop."""
    best = None
    best_area = 0.0
    for loop in loops:
        try:
            poly = Polygon(pts[np.array(loop)])
        except DegenerateGeometryError:
            continue
        if poly.area > best_area:
            best = poly
            best_area = poly.area
    return best


def _convex_hull_polygon(unique_pts: np.ndarray):
    try:
        hull = ConvexHull(unique_pts)
        return Polygon(unique_pts[hull.vertices])
    except (QhullError, DegenerateGeometryError):
        return None


def alpha_shape(points, radius: float) -> MultiPolygon:
    """Concave hull of a point set.

    Delaunay triangles with circumradius above ``radius`` are discarded and
    the boundary of the survivors is stitched into a polygon.  When several
    disjoint components survive, the one containing the most input points is
    kept (the rest are logged); when no triangle survives, the convex hull is
    returned instead.
    """
    if radius <= 0.0:
        raise ParameterError(f"alpha-shape radius must be positive, got {radius}")
    pts = _unique_points(points)
    if pts.shape[0] < 3:
        raise DegenerateGeometryError("alpha shape needs at least 3 distinct points")
    try:
        simplices, radii = _delaunay_circumradii(pts)
    except QhullError as exc:
        raise DegenerateGeometryError(f"points do not span 2-D: {exc}") from exc
    keep = radii <= radius
    poly = None
    if keep.any():
        comps = _triangle_components(simplices[keep])
        if len(comps) > 1:
            log.debug(
                "alpha_shape: keeping largest of %d components (%d triangles dropped)",
                len(comps),
                sum(c.shape[0] for c in comps[1:]),
            )
        poly = _loops_to_polygon(_boundary_loops(comps[0]), pts)
    if poly is None:
        poly = _convex_hull_polygon(pts)
    if poly is None:
        raise DegenerateGeometryError("points do not span a 2-D region")
    return MultiPolygon((poly,))


def alpha_shape_auto(points, radius_scale: float = 2.0, coverage: float = 0.995):
    """Concave hull with an automatically escalated radius.

    The radius starts at ``radius_scale`` times the median nearest-neighbour
    spacing.  If the largest edge-connected component of the surviving
    triangles does not touch at least ``coverage`` of the distinct input
    points at that radius, the smallest circumradius that does is found by
    binary search.  Exact on-boundary point samples (median spacing near
    zero) therefore escalate until the region between samples fills in,
    while already-solid 2-D clouds keep the base radius.  Returns a Polygon,
    or None when the points do not span a usable region.
    """
    try:
        pts = _unique_points(points)
    except DegenerateGeometryError:
        return None
    if pts.shape[0] < 3:
        return None
    try:
        simplices, radii = _delaunay_circumradii(pts)
    except QhullError:
        return None
    finite = np.unique(radii[np.isfinite(radii)])
    if finite.size == 0:
        return _convex_hull_polygon(pts)
    needed = coverage * pts.shape[0]

    def main_component(radius):
        keep = radii <= radius
        if not keep.any():
            return None
        comp = _triangle_components(simplices[keep])[0]
        return comp if np.unique(comp).size >= needed else None

    tree = cKDTree(pts)
    nn_dist = tree.query(pts, k=2)[0][:, 1]
    base = max(float(radius_scale) * float(np.median(nn_dist)), 1e-9)
    comp = main_component(base)
    if comp is None:
        # Coverage is monotone in the radius, so bisect the sorted
        # circumradii for the smallest value that reconnects the cloud.
        lo, hi = 0, finite.size - 1
        if main_component(finite[hi]) is None:
            return _convex_hull_polygon(pts)
        while lo < hi:
            mid = (lo + hi) // 2
            if main_component(finite[mid]) is None:
                lo = mid + 1
            else:
                hi = mid
        comp = main_component(finite[lo])
    poly = _loops_to_polygon(_boundary_loops(comp), pts)
    if poly is None:
        return _convex_hull_polygon(pts)
    return poly


