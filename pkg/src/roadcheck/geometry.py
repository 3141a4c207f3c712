"""Planar geometry kernel: oriented boxes, convex polygons, distance and
overlap predicates, and forward-projected danger spaces.

All values are immutable and all operations are pure functions, so everything
here is safe to share across threads.  Coordinates live in a local metric
plane; angles are radians, counter-clockwise from the +x axis.

Conventions:
  * polygons are strictly convex, counter-clockwise, >= 3 vertices
  * touching counts as overlapping (closed-set semantics)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

_TWO_PI = 2.0 * math.pi

# Tolerance for the strict-convexity test, scaled by polygon extent.
_CONVEXITY_EPS = 1e-12


class GeometryError(ValueError):
    """Invalid geometric construction or argument."""


def normalize_angle(a: float) -> float:
    """Map an angle to [-pi, pi)."""
    a = math.fmod(a + math.pi, _TWO_PI)
    if a < 0.0:
        a += _TWO_PI
    return a - math.pi


@dataclass(frozen=True)
class Pose2D:
    """Position plus heading; heading is normalised to [-pi, pi)."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)
                and math.isfinite(self.heading)):
            raise GeometryError("pose components must be finite")
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True)
class BoxDims:
    """Vehicle footprint: length along heading, width across it."""

    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0.0 and self.width > 0.0):
            raise GeometryError(
                f"box dimensions must be positive, got {self.length}x{self.width}")


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertex order."""

    vertices: tuple[tuple[float, float], ...]
    _area: float = field(default=0.0, compare=False, repr=False)

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        if n < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {n}")
        scale = max(max(abs(x), abs(y)) for x, y in verts) or 1.0
        eps = _CONVEXITY_EPS * scale * scale
        area2 = 0.0
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            cx, cy = verts[(i + 2) % n]
            cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
            if cross <= eps:
                raise GeometryError(
                    "polygon is not strictly convex in CCW order "
                    f"(cross={cross:g} at vertex {i})")
            area2 += ax * by - bx * ay
        object.__setattr__(self, "_area", 0.5 * area2)

    @classmethod
    def from_points(cls, points) -> "ConvexPolygon":
        """Build from points in either winding order; CW input is reversed."""
        pts = [(float(x), float(y)) for x, y in points]
        if len(pts) >= 3:
            area2 = 0.0
            n = len(pts)
            for i in range(n):
                ax, ay = pts[i]
                bx, by = pts[(i + 1) % n]
                area2 += ax * by - bx * ay
            if area2 < 0.0:
                pts.reverse()
        return cls(tuple(pts))

    @property
    def area(self) -> float:
        return self._area

    def edges(self):
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            yield verts[i], verts[(i + 1) % n]

    def translated(self, dx: float, dy: float) -> "ConvexPolygon":
        return ConvexPolygon(tuple((x + dx, y + dy) for x, y in self.vertices))

    def transformed(self, angle: float, dx: float, dy: float) -> "ConvexPolygon":
        """Rotate about the origin by ``angle`` then translate."""
        c, s = math.cos(angle), math.sin(angle)
        return ConvexPolygon(tuple(
            (c * x - s * y + dx, s * x + c * y + dy) for x, y in self.vertices))


def oriented_box(pose: Pose2D, dims: BoxDims) -> ConvexPolygon:
    """Rectangle centred at the pose, long axis along the heading.

    Vertices come out CCW starting at the front-left corner, so an
    axis-aligned 4x2 box at the origin is (2,1), (-2,1), (-2,-1), (2,-1).
    """
    hl, hw = dims.length / 2.0, dims.width / 2.0
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    local = ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))
    return ConvexPolygon(tuple(
        (pose.x + c * lx - s * ly, pose.y + s * lx + c * ly) for lx, ly in local))


def _project(poly: ConvexPolygon, ax: float, ay: float) -> tuple[float, float]:
    lo = hi = poly.vertices[0][0] * ax + poly.vertices[0][1] * ay
    for x, y in poly.vertices[1:]:
        d = x * ax + y * ay
        if d < lo:
            lo = d
        elif d > hi:
            hi = d
    return lo, hi


def overlaps(a: ConvexPolygon, b: ConvexPolygon) -> bool:
    """Closed-set overlap test via separating axes; touching counts."""
    for poly in (a, b):
        for (x1, y1), (x2, y2) in poly.edges():
            # outward normal of a CCW edge
            ax, ay = y2 - y1, x1 - x2
            alo, ahi = _project(a, ax, ay)
            blo, bhi = _project(b, ax, ay)
            if alo > bhi or blo > ahi:
                return False
    return True


def _support(poly: ConvexPolygon, dx: float, dy: float) -> tuple[float, float]:
    best = poly.vertices[0]
    best_d = best[0] * dx + best[1] * dy
    for v in poly.vertices[1:]:
        d = v[0] * dx + v[1] * dy
        if d > best_d:
            best, best_d = v, d
    return best


def _closest_on_segment(ax, ay, bx, by):
    """Point of segment AB closest to the origin."""
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    if denom <= 0.0:
        return ax, ay
    t = -(ax * abx + ay * aby) / denom
    if t <= 0.0:
        return ax, ay
    if t >= 1.0:
        return bx, by
    return ax + t * abx, ay + t * aby


def _gjk_distance(a: ConvexPolygon, b: ConvexPolygon) -> float:
    """Distance between disjoint convex polygons (GJK on the difference)."""
    def support(dx, dy):
        pa = _support(a, dx, dy)
        pb = _support(b, -dx, -dy)
        return pa[0] - pb[0], pa[1] - pb[1]

    s0 = support(1.0, 0.0)
    s1 = support(-s0[0], -s0[1])
    p, q = s0, s1
    best = math.inf
    for _ in range(200):
        vx, vy = _closest_on_segment(p[0], p[1], q[0], q[1])
        vlen2 = vx * vx + vy * vy
        if vlen2 <= 1e-24:
            return 0.0
        best = min(best, math.sqrt(vlen2))
        w = support(-vx, -vy)
        # no progress toward the origin means v is the true closest point
        if vlen2 - (vx * w[0] + vy * w[1]) <= 1e-12 * vlen2:
            return math.sqrt(vlen2)
        cp = _closest_on_segment(p[0], p[1], w[0], w[1])
        cq = _closest_on_segment(q[0], q[1], w[0], w[1])
        if cp[0] ** 2 + cp[1] ** 2 < cq[0] ** 2 + cq[1] ** 2:
            q = w
        else:
            p = w
    return best


def min_distance(a: ConvexPolygon, b: ConvexPolygon) -> float:
    """Euclidean gap between two polygons; exactly 0.0 when they overlap."""
    if overlaps(a, b):
        return 0.0
    # canonical argument order makes the result exactly symmetric
    if b.vertices < a.vertices:
        a, b = b, a
    return _gjk_distance(a, b)


def _clip_halfplane(points, ax, ay, bx, by):
    """Clip a polygon (point list) to the left side of directed line AB."""
    ex, ey = bx - ax, by - ay
    out = []
    n = len(points)
    for i in range(n):
        px, py = points[i]
        qx, qy = points[(i + 1) % n]
        side_p = ex * (py - ay) - ey * (px - ax)
        side_q = ex * (qy - ay) - ey * (qx - ax)
        if side_p >= 0.0:
            out.append((px, py))
        if (side_p > 0.0 > side_q) or (side_p < 0.0 < side_q):
            t = side_p / (side_p - side_q)
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def overlap_area(a: ConvexPolygon, b: ConvexPolygon) -> float:
    """Area of the intersection (convex clip); 0.0 when disjoint."""
    pts = list(a.vertices)
    for (p, q) in b.edges():
        pts = _clip_halfplane(pts, p[0], p[1], q[0], q[1])
        if len(pts) < 3:
            return 0.0
    area2 = 0.0
    n = len(pts)
    for i in range(n):
        ax_, ay_ = pts[i]
        bx_, by_ = pts[(i + 1) % n]
        area2 += ax_ * by_ - bx_ * ay_
    return max(0.0, 0.5 * area2)


def danger_space(pose: Pose2D, dims: BoxDims, ds_length: float):
    """Rectangle projected forward from the vehicle's front face.

    Length is ``ds_length`` along the heading, width is the vehicle width.
    A zero-length danger space is degenerate and overlap-inert, represented
    as None; callers must treat None as never overlapping anything.
    """
    if ds_length < 0.0:
        raise GeometryError(f"danger space length must be >= 0, got {ds_length}")
    if ds_length == 0.0:
        return None
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    fx = pose.x + c * dims.length / 2.0
    fy = pose.y + s * dims.length / 2.0
    hw = dims.width / 2.0
    local = ((ds_length, hw), (0.0, hw), (0.0, -hw), (ds_length, -hw))
    return ConvexPolygon(tuple(
        (fx + c * lx - s * ly, fy + s * lx + c * ly) for lx, ly in local))


def segment_intersects_polygon(p: tuple[float, float], q: tuple[float, float],
                               poly: ConvexPolygon) -> bool:
    """Closed test: true if segment PQ touches or enters the polygon."""
    if _point_in_polygon(p, poly) or _point_in_polygon(q, poly):
        return True
    for a, b in poly.edges():
        if _segments_intersect(p, q, a, b):
            return True
    return False


def _point_in_polygon(pt, poly: ConvexPolygon) -> bool:
    x, y = pt
    for (ax, ay), (bx, by) in poly.edges():
        if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < 0.0:
            return False
    return True


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    return (min(ax, bx) <= px <= max(ax, bx)
            and min(ay, by) <= py <= max(ay, by))


def _segments_intersect(p, q, a, b) -> bool:
    d1 = _orient(p[0], p[1], q[0], q[1], a[0], a[1])
    d2 = _orient(p[0], p[1], q[0], q[1], b[0], b[1])
    d3 = _orient(a[0], a[1], b[0], b[1], p[0], p[1])
    d4 = _orient(a[0], a[1], b[0], b[1], q[0], q[1])
    if ((d1 > 0) != (d2 > 0) and (d1 != 0 and d2 != 0)
            and (d3 > 0) != (d4 > 0) and (d3 != 0 and d4 != 0)):
        return True
    if d1 == 0 and _on_segment(p[0], p[1], q[0], q[1], a[0], a[1]):
        return True
    if d2 == 0 and _on_segment(p[0], p[1], q[0], q[1], b[0], b[1]):
        return True
    if d3 == 0 and _on_segment(a[0], a[1], b[0], b[1], p[0], p[1]):
        return True
    if d4 == 0 and _on_segment(a[0], a[1], b[0], b[1], q[0], q[1]):
        return True
    return False


def projection_interval(poly: ConvexPolygon, angle: float) -> tuple[float, float]:
    """Project a polygon onto the axis at ``angle``; returns (lo, hi)."""
    return _project(poly, math.cos(angle), math.sin(angle))
