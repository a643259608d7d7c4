"""Rotated-box geometry: five-parameter boxes, polygon clipping, skew IoU.

Angle convention: a box (cx, cy, w, h, theta) is the w x h rectangle centered
at (cx, cy), rotated by theta radians; w is the side whose direction makes the
angle theta with the x-axis.  The canonical representative has
theta in [-pi/2, 0); (cx, cy, w, h, theta) and (cx, cy, h, w, theta + pi/2)
denote the same point set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Tolerance for clipping predicates, vertex merging and point-in-polygon tests.
CLIP_EPS = 1e-9

Point = tuple[float, float]


def _check_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name}: non-finite value {v!r}")


@dataclass(frozen=True)
class RotatedBox:
    """Five-parameter oriented rectangle (pixels, radians)."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self) -> None:
        _check_finite("RotatedBox", self.cx, self.cy, self.w, self.h, self.theta)
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"RotatedBox: sides must be positive, got w={self.w}, h={self.h}")

    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class AxisAlignedBox:
    """Axis-aligned rectangle as (xmin, ymin, xmax, ymax)."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        _check_finite("AxisAlignedBox", self.xmin, self.ymin, self.xmax, self.ymax)
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError(f"AxisAlignedBox: empty extent {self}")

    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


@dataclass(frozen=True)
class Quadrilateral:
    """Four-vertex polygon, vertex order as given by the source annotation."""

    vertices: tuple[Point, Point, Point, Point]

    def __post_init__(self) -> None:
        if len(self.vertices) != 4:
            raise ValueError("Quadrilateral needs exactly 4 vertices")
        for x, y in self.vertices:
            _check_finite("Quadrilateral", x, y)


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon with counter-clockwise vertices (possibly empty)."""

    vertices: tuple[Point, ...]

    def area(self) -> float:
        return shoelace_area(self.vertices)


def shoelace_area(vertices: tuple[Point, ...] | list[Point]) -> float:
    """Signed shoelace area; >= 0 for counter-clockwise rings."""
    n = len(vertices)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return 0.5 * acc


def canonicalize(box: RotatedBox) -> RotatedBox:
    """Reduce a box to the canonical representative with theta in [-pi/2, 0).

    A quarter-turn shift of theta swaps the roles of w and h, so the reduction
    is modulo pi with one swap when the residue lands in [0, pi/2).
    """
    t = box.theta - math.pi * math.floor((box.theta + math.pi / 2.0) / math.pi)
    if t >= 0.0:
        return RotatedBox(box.cx, box.cy, box.h, box.w, t - math.pi / 2.0)
    return RotatedBox(box.cx, box.cy, box.w, box.h, t)


def rbox_to_quad(box: RotatedBox) -> Quadrilateral:
    """Corners of the rotated rectangle in counter-clockwise order."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    hw, hh = 0.5 * box.w, 0.5 * box.h
    corners = []
    for dx, dy in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)):
        corners.append((box.cx + dx * c - dy * s, box.cy + dx * s + dy * c))
    return Quadrilateral(tuple(corners))


def _convex_hull(points: list[Point]) -> list[Point]:
    """Andrew's monotone chain; returns counter-clockwise hull without repeats."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o: Point, a: Point, b: Point) -> float:
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def quad_to_rbox(quad: Quadrilateral) -> RotatedBox:
    """Minimum-area enclosing rotated rectangle of the four vertices.

    Rotating calipers over the convex hull: the optimal rectangle has one side
    collinear with a hull edge, so only hull-edge directions are candidates.
    Raises ValueError for degenerate (zero-area) input.
    """
    hull = _convex_hull(list(quad.vertices))
    if len(hull) < 3 or abs(shoelace_area(hull)) < 1e-12:
        raise ValueError("degenerate quadrilateral: zero area")

    best = None
    for i in range(len(hull)):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % len(hull)]
        ex, ey = x1 - x0, y1 - y0
        norm = math.hypot(ex, ey)
        if norm < 1e-12:
            continue
        ux, uy = ex / norm, ey / norm
        # u-axis along the edge, v-axis perpendicular
        us = [px * ux + py * uy for px, py in hull]
        vs = [-px * uy + py * ux for px, py in hull]
        u0, u1 = min(us), max(us)
        v0, v1 = min(vs), max(vs)
        area = (u1 - u0) * (v1 - v0)
        if best is None or area < best[0]:
            best = (area, ux, uy, u0, u1, v0, v1)

    assert best is not None
    _, ux, uy, u0, u1, v0, v1 = best
    cu, cv = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
    cx = cu * ux - cv * uy
    cy = cu * uy + cv * ux
    return canonicalize(RotatedBox(cx, cy, u1 - u0, v1 - v0, math.atan2(uy, ux)))


def convex_intersection(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon:
    """Intersection of two convex counter-clockwise polygons.

    Sutherland-Hodgman clipping of `a` against each edge of `b`; exact for
    convex inputs.  Predicates are boundary-inclusive within CLIP_EPS and
    output vertices closer than CLIP_EPS are merged.
    """
    output = list(a.vertices)
    clip = b.vertices
    if not output or not clip:
        return ConvexPolygon(())

    for k in range(len(clip)):
        if not output:
            break
        e1 = clip[k]
        e2 = clip[(k + 1) % len(clip)]
        edge_x, edge_y = e2[0] - e1[0], e2[1] - e1[1]

        def inside(p: Point) -> bool:
            return edge_x * (p[1] - e1[1]) - edge_y * (p[0] - e1[0]) >= -CLIP_EPS

        def intersect(p: Point, q: Point) -> Point | None:
            dpx, dpy = q[0] - p[0], q[1] - p[1]
            denom = edge_x * dpy - edge_y * dpx
            if denom == 0.0:
                return None
            t = (edge_x * (p[1] - e1[1]) - edge_y * (p[0] - e1[0])) / denom
            return (p[0] - t * dpx, p[1] - t * dpy)

        clipped: list[Point] = []
        s = output[-1]
        s_in = inside(s)
        for e in output:
            e_in = inside(e)
            if e_in:
                if not s_in:
                    x = intersect(s, e)
                    if x is not None:
                        clipped.append(x)
                clipped.append(e)
            elif s_in:
                x = intersect(s, e)
                if x is not None:
                    clipped.append(x)
            s, s_in = e, e_in
        output = clipped

    merged: list[Point] = []
    for p in output:
        if merged and math.hypot(p[0] - merged[-1][0], p[1] - merged[-1][1]) < CLIP_EPS:
            continue
        merged.append(p)
    if len(merged) >= 2 and math.hypot(merged[0][0] - merged[-1][0], merged[0][1] - merged[-1][1]) < CLIP_EPS:
        merged.pop()
    if len(merged) < 3:
        return ConvexPolygon(())
    return ConvexPolygon(tuple(merged))


def skew_iou(a: RotatedBox, b: RotatedBox) -> float:
    """IoU of two rotated rectangles via exact convex clipping.

    Operands are ordered canonically before clipping so the computation is
    bitwise symmetric; areas come from the shoelace formula on both operands
    so identical boxes give exactly 1.0.
    """
    ka = (a.cx, a.cy, a.w, a.h, a.theta)
    kb = (b.cx, b.cy, b.w, b.h, b.theta)
    if kb < ka:
        a, b = b, a
    qa = ConvexPolygon(rbox_to_quad(a).vertices)
    qb = ConvexPolygon(rbox_to_quad(b).vertices)
    inter = max(convex_intersection(qa, qb).area(), 0.0)
    union = qa.area() + qb.area() - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def hbb_of(box: RotatedBox) -> AxisAlignedBox:
    """Tightest axis-aligned bounding box of a rotated rectangle."""
    corners = rbox_to_quad(box).vertices
    xs = [x for x, _ in corners]
    ys = [y for _, y in corners]
    return AxisAlignedBox(min(xs), min(ys), max(xs), max(ys))


def aabb_iou(a: AxisAlignedBox, b: AxisAlignedBox) -> float:
    """Standard rectangle-overlap IoU."""
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area() + b.area() - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def point_in_convex_polygon(x: float, y: float, vertices: tuple[Point, ...]) -> bool:
    """Boundary-inclusive containment test for a counter-clockwise polygon."""
    n = len(vertices)
    if n < 3:
        return False
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) < -CLIP_EPS:
            return False
    return True
