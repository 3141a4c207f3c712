"""Independent brute-force oracles used by the tests.

These deliberately avoid the algorithms used by the package (separating
axes, GJK, polygon clipping): distances come from exhaustive vertex/edge
enumeration, overlap from point membership and segment crossings, areas
from Monte-Carlo sampling.
"""

import math
import random

from roadcheck.geometry import ConvexPolygon


def point_segment_distance(p, a, b):
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / denom))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_in_convex(p, poly: ConvexPolygon) -> bool:
    x, y = p
    for (ax, ay), (bx, by) in poly.edges():
        if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < 0.0:
            return False
    return True


def _segments_cross(p, q, a, b):
    def orient(o, s, t):
        return (s[0] - o[0]) * (t[1] - o[1]) - (s[1] - o[1]) * (t[0] - o[0])

    d1, d2 = orient(p, q, a), orient(p, q, b)
    d3, d4 = orient(a, b, p), orient(a, b, q)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True

    def on_seg(o, s, t):
        return (min(o[0], s[0]) <= t[0] <= max(o[0], s[0])
                and min(o[1], s[1]) <= t[1] <= max(o[1], s[1]))

    for d, seg, pt in ((d1, (p, q), a), (d2, (p, q), b),
                       (d3, (a, b), p), (d4, (a, b), q)):
        if d == 0 and on_seg(seg[0], seg[1], pt):
            return True
    return False


def brute_overlap(a: ConvexPolygon, b: ConvexPolygon) -> bool:
    if any(point_in_convex(v, b) for v in a.vertices):
        return True
    if any(point_in_convex(v, a) for v in b.vertices):
        return True
    for ea in a.edges():
        for eb in b.edges():
            if _segments_cross(ea[0], ea[1], eb[0], eb[1]):
                return True
    return False


def brute_min_distance(a: ConvexPolygon, b: ConvexPolygon) -> float:
    if brute_overlap(a, b):
        return 0.0
    best = math.inf
    for v in a.vertices:
        for p, q in b.edges():
            best = min(best, point_segment_distance(v, p, q))
    for v in b.vertices:
        for p, q in a.edges():
            best = min(best, point_segment_distance(v, p, q))
    return best


def monte_carlo_overlap_area(a: ConvexPolygon, b: ConvexPolygon,
                             samples: int, seed: int = 0) -> float:
    import numpy as np

    xs = [v[0] for v in a.vertices] + [v[0] for v in b.vertices]
    ys = [v[1] for v in a.vertices] + [v[1] for v in b.vertices]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    rng = np.random.default_rng(seed)
    px = rng.uniform(x0, x1, samples)
    py = rng.uniform(y0, y1, samples)
    inside = np.ones(samples, dtype=bool)
    for poly in (a, b):
        for (ax, ay), (bx, by) in poly.edges():
            inside &= (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0.0
    return inside.mean() * (x1 - x0) * (y1 - y0)


def random_convex_polygon(rng: random.Random, centre=(0.0, 0.0),
                          radius=2.0, max_vertices=8) -> ConvexPolygon:
    """Strictly convex polygon from hull of random points; retries until valid."""
    cx, cy = centre
    while True:
        n = rng.randint(3, max_vertices)
        pts = [(cx + rng.uniform(-radius, radius),
                cy + rng.uniform(-radius, radius)) for _ in range(n)]
        hull = _convex_hull(pts)
        if len(hull) < 3:
            continue
        try:
            return ConvexPolygon(tuple(hull))
        except Exception:
            continue


def _convex_hull(points):
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-9:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-9:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]
