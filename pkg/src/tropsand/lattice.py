"""Exact integer geometry: lattice polygons, dilated site sets, perturbation configs.

All polygon predicates use integer cross products; plane points are kept as
exact `Fraction`s so that rounding and interiority tests never suffer float
drift.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# Scaled coordinates must stay within a signed 32-bit budget; heights and
# odometers get wider integers in the engine.
COORD_LIMIT = 2**31

# Floats this close to an integer are snapped before flooring, so that
# N * (1/3)-style representation drift cannot shift a rounded site by one.
FLOAT_SNAP = 2.0**-40


class GeometryError(ValueError):
    """Base class for lattice geometry failures."""


class NonConvex(GeometryError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"polygon is not convex at vertex {index}")


class DegenerateArea(GeometryError):
    def __init__(self, index=0):
        self.index = index
        super().__init__("polygon has zero area")


class CollinearVertexChain(GeometryError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"vertex {index} is not a corner (collinear chain)")


class ZeroVector(GeometryError):
    pass


class NotASite(GeometryError):
    pass


class ScaleOverflow(GeometryError):
    pass


class PointOutsideDomain(GeometryError):
    pass


def primitive_vector(v):
    """Divide an integer vector by the gcd of its coordinates.

    The result is parallel to `v`, has the same orientation, and coprime
    coordinates.
    """
    x, y = int(v[0]), int(v[1])
    if x == 0 and y == 0:
        raise ZeroVector("primitive vector of (0, 0) is undefined")
    g = math.gcd(abs(x), abs(y))
    return (x // g, y // g)


def _cross(o, a, b):
    """Integer cross product (a - o) x (b - o)."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class LatticePolygon:
    """Convex lattice polygon with counterclockwise vertices, all true corners."""

    vertices: tuple

    @property
    def sides(self):
        """Directed sides as (start, end, primitive direction) triples."""
        n = len(self.vertices)
        out = []
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            out.append((a, b, primitive_vector((b[0] - a[0], b[1] - a[1]))))
        return out

    def signed_area2(self):
        """Twice the (positive) enclosed area, exact."""
        verts = self.vertices
        s = 0
        for i in range(len(verts)):
            a, b = verts[i], verts[(i + 1) % len(verts)]
            s += a[0] * b[1] - a[1] * b[0]
        return s

    def bounding_box(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def contains_lattice_point(self, p):
        """Closed membership test (boundary counts as inside), exact."""
        verts = self.vertices
        for i in range(len(verts)):
            if _cross(verts[i], verts[(i + 1) % len(verts)], p) < 0:
                return False
        return True

    def contains_interior(self, p):
        """Strict interior test for a point with Fraction/int coordinates."""
        px, py = Fraction(p[0]), Fraction(p[1])
        verts = self.vertices
        for i in range(len(verts)):
            a, b = verts[i], verts[(i + 1) % len(verts)]
            cross = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
            if cross <= 0:
                return False
        return True


def validate_polygon(vertices):
    """Validate and normalize a vertex list into a LatticePolygon.

    Orientation is normalized to counterclockwise. Raises DegenerateArea for
    zero enclosed area, CollinearVertexChain if some vertex is not a true
    corner, and NonConvex for a reflex vertex (each error carries the first
    offending vertex index).
    """
    if len(vertices) < 3:
        raise DegenerateArea(0)
    verts = []
    for v in vertices:
        x, y = v
        if x != int(x) or y != int(y):
            raise GeometryError(f"vertex {v} is not a lattice point")
        verts.append((int(x), int(y)))

    area2 = 0
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        area2 += a[0] * b[1] - a[1] * b[0]
    if area2 == 0:
        raise DegenerateArea(0)
    if area2 < 0:
        verts.reverse()

    n = len(verts)
    for i in range(n):
        c = _cross(verts[i - 1], verts[i], verts[(i + 1) % n])
        if c == 0:
            raise CollinearVertexChain(i)
        if c < 0:
            raise NonConvex(i)
    return LatticePolygon(tuple(verts))


@dataclass(frozen=True)
class ScaledDomain:
    """The lattice points of the dilated polygon N*Omega, stored row by row.

    Convexity gives one column interval per row, so membership is a range
    check after an O(1) row lookup.
    """

    polygon: LatticePolygon
    scale: int
    y_min: int
    x_lo: np.ndarray = field(repr=False)  # per-row first column
    x_hi: np.ndarray = field(repr=False)  # per-row last column

    @property
    def y_max(self):
        return self.y_min + len(self.x_lo) - 1

    @property
    def size(self):
        return int(np.sum(self.x_hi - self.x_lo + 1))

    def bounding_box(self):
        x0, y0, x1, y1 = self.polygon.bounding_box()
        n = self.scale
        return (n * x0, n * y0, n * x1, n * y1)

    def contains(self, v):
        x, y = v
        r = y - self.y_min
        if r < 0 or r >= len(self.x_lo):
            return False
        return self.x_lo[r] <= x <= self.x_hi[r]

    def sites(self):
        """Iterate all sites in raster (row-major) order."""
        for r in range(len(self.x_lo)):
            y = self.y_min + r
            for x in range(int(self.x_lo[r]), int(self.x_hi[r]) + 1):
                yield (x, y)

    def grid_shape(self):
        """Shape of the dense bounding-box grid (rows, cols)."""
        x0, y0, x1, y1 = self.bounding_box()
        return (y1 - y0 + 1, x1 - x0 + 1)

    def grid_origin(self):
        x0, y0, _, _ = self.bounding_box()
        return (x0, y0)

    def mask(self):
        """Dense boolean grid marking sites inside N*Omega."""
        rows, cols = self.grid_shape()
        x0, y0 = self.grid_origin()
        m = np.zeros((rows, cols), dtype=bool)
        for r in range(len(self.x_lo)):
            y = self.y_min + r
            m[y - y0, self.x_lo[r] - x0 : self.x_hi[r] - x0 + 1] = True
        return m


def build_domain(polygon, scale):
    """Enumerate the lattice points of the dilated polygon as row intervals."""
    if scale < 1:
        raise GeometryError("scale must be a positive integer")
    x0, y0, x1, y1 = polygon.bounding_box()
    if max(abs(scale * x0), abs(scale * y0), abs(scale * x1), abs(scale * y1)) >= COORD_LIMIT:
        raise ScaleOverflow(f"scale {scale} pushes coordinates past {COORD_LIMIT}")

    verts = [(scale * vx, scale * vy) for vx, vy in polygon.vertices]
    n = len(verts)
    ymin, ymax = scale * y0, scale * y1
    x_lo = np.empty(ymax - ymin + 1, dtype=np.int64)
    x_hi = np.empty(ymax - ymin + 1, dtype=np.int64)
    for y in range(ymin, ymax + 1):
        xs = []
        for i in range(n):
            (ax, ay), (bx, by) = verts[i], verts[(i + 1) % n]
            if ay == by:
                if ay == y:
                    xs.append(Fraction(ax))
                    xs.append(Fraction(bx))
            elif min(ay, by) <= y <= max(ay, by):
                xs.append(Fraction(ax) + Fraction((y - ay) * (bx - ax), by - ay))
        lo, hi = min(xs), max(xs)
        x_lo[y - ymin] = math.ceil(lo)
        x_hi[y - ymin] = math.floor(hi)
    return ScaledDomain(polygon, scale, ymin, x_lo, x_hi)


def neighbors(v, domain):
    """In-domain lattice neighbors of a site, plus the number of missing ones.

    The missing count is the number of grains lost each time this site topples.
    """
    if not domain.contains(v):
        raise NotASite(f"{v} is not a site of the domain")
    x, y = v
    present = []
    for w in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
        if domain.contains(w):
            present.append(w)
    return present, 4 - len(present)


def round_down(p, scale):
    """Coordinate-wise floor of the scaled point: ([N*x], [N*y])."""

    def one(c):
        if isinstance(c, float):
            t = scale * c
            r = round(t)
            if abs(t - r) < FLOAT_SNAP:
                return int(r)
            return math.floor(t)
        return math.floor(scale * Fraction(c))

    return (one(p[0]), one(p[1]))


@dataclass(frozen=True)
class PerturbationConfig:
    """Points where one extra grain each is dropped on the maximal state."""

    points: tuple

    def __post_init__(self):
        if not self.points:
            raise GeometryError("perturbation needs at least one point")

    def validate_inside(self, polygon):
        for p in self.points:
            if not polygon.contains_interior(p):
                raise PointOutsideDomain(f"perturbation point {p} is not strictly inside the polygon")

    def rounded_sites(self, domain):
        """Rounded lattice targets [N*p]; duplicates are allowed but flagged."""
        sites = [round_down(p, domain.scale) for p in self.points]
        if len(set(sites)) != len(sites):
            warnings.warn(
                "distinct perturbation points round to the same site at this scale",
                stacklevel=2,
            )
        for s in sites:
            if not domain.contains(s):
                raise PointOutsideDomain(f"rounded point {s} is not a site (scale too small)")
        return sites


def _parse_coord(c):
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, (int, float)):
        return c
    raise GeometryError(f"bad coordinate {c!r}")


def parse_config(data):
    """Parse the JSON config schema into (polygon, points, scales).

    Schema: {"polygon": [[int,int],...], "points": [[num|"a/b", ...],...],
    "scale": int or [int,...]}. String fractions parse to exact rationals.
    """
    polygon = validate_polygon([tuple(v) for v in data["polygon"]])
    points = tuple((_parse_coord(p[0]), _parse_coord(p[1])) for p in data.get("points", []))
    config = PerturbationConfig(points) if points else None
    if config is not None:
        config.validate_inside(polygon)
    scale = data.get("scale")
    scales = data.get("scales", scale)
    if scales is None:
        raise GeometryError("config needs a scale")
    if isinstance(scales, int):
        scales = [scales]
    scales = [int(s) for s in scales]
    if any(s < 1 for s in scales):
        raise GeometryError("scales must be positive")
    return polygon, config, scales
