"""Min-plus tropical polynomials, corner-locus curves, balancing and side labels.

Everything geometric here is exact: coordinates and coefficients are
Fractions, weights and directions are integers. Floats appear only in the
area norms and in distance reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .lattice import primitive_vector


class TropicalError(ValueError):
    pass


class EmptyCurve(TropicalError):
    """One monomial dominates everywhere; the corner locus is empty."""


class NoSolution(TropicalError):
    pass


class Inconsistent(TropicalError):
    pass


class BoundaryViolation(TropicalError):
    pass


class UnboundedEdge(TropicalError):
    pass


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TropicalError(f"cannot coerce {x!r} to an exact rational")


@dataclass(frozen=True)
class TropicalPolynomial:
    """min over (k,l) in the support of k*x + l*y + a_{k,l}."""

    coeffs: dict

    def __post_init__(self):
        if not self.coeffs:
            raise TropicalError("empty support")
        clean = {}
        for kl, a in self.coeffs.items():
            key = (int(kl[0]), int(kl[1]))
            if key in clean:
                raise TropicalError(f"duplicate support point {key}")
            clean[key] = _frac(a)
        object.__setattr__(self, "coeffs", clean)

    @property
    def support(self):
        return tuple(sorted(self.coeffs))

    def shifted(self, const):
        """Add a constant to every coefficient (corner locus unchanged)."""
        c = _frac(const)
        return TropicalPolynomial({kl: a + c for kl, a in self.coeffs.items()})

    def raised(self, kl, step):
        out = dict(self.coeffs)
        out[kl] = out[kl] + _frac(step)
        return TropicalPolynomial(out)


def evaluate(poly, x):
    """Value of the polynomial at x, with the set of monomials achieving it."""
    px, py = _frac(x[0]), _frac(x[1])
    best = None
    argmin = []
    for (k, l), a in poly.coeffs.items():
        v = k * px + l * py + a
        if best is None or v < best:
            best = v
            argmin = [(k, l)]
        elif v == best:
            argmin.append((k, l))
    return best, frozenset(argmin)


@dataclass(frozen=True)
class Edge:
    """Curve edge: a bounded segment (tail, head) or a ray (tail, direction).

    `direction` is the primitive integer vector along the edge, oriented from
    tail to head (for rays, outward).
    """

    tail: int
    head: int  # -1 for a ray
    direction: tuple
    weight: int

    @property
    def is_ray(self):
        return self.head < 0


@dataclass
class TropicalCurve:
    """Weighted planar graph with rational vertices and primitive directions."""

    vertices: list
    edges: list

    def edge_endpoints(self, e):
        a = self.vertices[e.tail]
        if e.is_ray:
            return a, None
        return a, self.vertices[e.head]

    def incident(self, vi):
        """Edges incident to vertex vi as (edge, outward primitive direction)."""
        out = []
        for e in self.edges:
            if e.tail == vi:
                out.append((e, e.direction))
            elif not e.is_ray and e.head == vi:
                out.append((e, (-e.direction[0], -e.direction[1])))
        return out

    def bounded_edges(self):
        return [e for e in self.edges if not e.is_ray]


def _vertex_index(vertices, index_map, p):
    key = (p[0], p[1])
    if key not in index_map:
        index_map[key] = len(vertices)
        vertices.append(key)
    return index_map[key]


def corner_locus(poly):
    """The weighted curve where the min is achieved at least twice.

    For each pair of support points, the tie line is intersected with the
    half-planes where the pair stays minimal; a positive-length interval is a
    curve edge whose weight is the lattice length of the dual support
    segment. All arithmetic is exact.
    """
    items = sorted(poly.coeffs.items())
    n = len(items)
    far = _far_bound(poly)
    raw = []  # (seg/ray descriptors)
    for i in range(n):
        (k1, l1), a1 = items[i]
        for j in range(i + 1, n):
            (k2, l2), a2 = items[j]
            dk, dl = k2 - k1, l2 - l1
            # Tie line: dk*x + dl*y = a1 - a2, direction (-dl, dk).
            dx, dy = -dl, dk
            g = math.gcd(abs(dx), abs(dy))
            dx, dy = dx // g, dy // g
            # Base point on the line.
            rhs = a1 - a2
            if dk != 0:
                base = (Fraction(rhs, dk), Fraction(0))
                if dl != 0:
                    # prefer a base not at a lattice-degenerate spot; any
                    # point on the line works.
                    pass
            else:
                base = (Fraction(0), Fraction(rhs, dl))
            lo, hi = -far, far
            lo_fin = hi_fin = False
            feasible = True
            for m in range(n):
                if m == i or m == j:
                    continue
                (k3, l3), a3 = items[m]
                # Need k1 x + l1 y + a1 <= k3 x + l3 y + a3 along the line.
                cx, cy = k3 - k1, l3 - l1
                c0 = a3 - a1
                # Constraint: cx*(bx + t dx) + cy*(by + t dy) + c0 >= 0.
                slope = cx * dx + cy * dy
                const = cx * base[0] + cy * base[1] + c0
                if slope == 0:
                    if const < 0:
                        feasible = False
                        break
                elif slope > 0:
                    t = -Fraction(const, slope)
                    if t > lo:
                        lo, lo_fin = t, True
                else:
                    t = -Fraction(const, slope)
                    if t < hi:
                        hi, hi_fin = t, True
            if not feasible or lo >= hi:
                continue
            raw.append((base, (dx, dy), lo, hi, lo_fin, hi_fin))

    if not raw:
        raise EmptyCurve("one monomial dominates everywhere")

    # Merge pairs that tie along the same geometric edge (collinear support
    # chains): keep one copy per geometric edge, with the weight given by the
    # full lattice length of the dual segment. The tied monomial set at an
    # interior point identifies the edge uniquely.
    merged = {}
    for base, d, lo, hi, lo_fin, hi_fin in raw:
        if lo_fin and hi_fin:
            mid_t = (lo + hi) / 2
        elif lo_fin:
            mid_t = lo + 1
        elif hi_fin:
            mid_t = hi - 1
        else:
            mid_t = Fraction(0)
        mid = (base[0] + mid_t * d[0], base[1] + mid_t * d[1])
        _, ties = evaluate(poly, mid)
        ties = tuple(sorted(ties))
        if ties in merged:
            continue
        ks = [k for k, _ in ties]
        ls = [l for _, l in ties]
        weight = math.gcd(max(ks) - min(ks), max(ls) - min(ls))
        p_lo = (base[0] + lo * d[0], base[1] + lo * d[1]) if lo_fin else None
        p_hi = (base[0] + hi * d[0], base[1] + hi * d[1]) if hi_fin else None
        merged[ties] = (p_lo, p_hi, base, d, weight)

    vertices = []
    index_map = {}
    edges = []
    for p_lo, p_hi, base, d, weight in merged.values():
        if p_lo is not None and p_hi is not None:
            ti = _vertex_index(vertices, index_map, p_lo)
            hj = _vertex_index(vertices, index_map, p_hi)
            edges.append(Edge(ti, hj, d, weight))
        elif p_lo is not None:
            ti = _vertex_index(vertices, index_map, p_lo)
            edges.append(Edge(ti, -1, d, weight))
        elif p_hi is not None:
            ti = _vertex_index(vertices, index_map, p_hi)
            edges.append(Edge(ti, -1, (-d[0], -d[1]), weight))
        else:
            # Full tie line (two-monomial case): split at the base point
            # into two opposite rays of the same weight.
            ti = _vertex_index(vertices, index_map, base)
            edges.append(Edge(ti, -1, d, weight))
            edges.append(Edge(ti, -1, (-d[0], -d[1]), weight))
    return _normalize_curve(TropicalCurve(vertices, edges))


def _far_bound(poly):
    """A parameter bound beyond every bounded feature of the arrangement."""
    big = Fraction(1)
    for a in poly.coeffs.values():
        big = max(big, abs(a))
    span = 1
    for (k, l) in poly.coeffs:
        span = max(span, abs(k), abs(l))
    return 16 * (big + 1) * (span + 1) * (len(poly.coeffs) + 1)


def _on_segment(p, a, b):
    """Exact test: p on closed segment ab (all Fraction pairs)."""
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if cross != 0:
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    if dot < 0:
        return False
    return dot <= (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2


def _normalize_curve(curve):
    """Split edges at vertices lying on them; merge identical co-edges."""
    vertices = [tuple(map(Fraction, v)) for v in curve.vertices]
    index_map = {v: i for i, v in enumerate(vertices)}
    out = []
    for e in curve.edges:
        a = vertices[e.tail]
        if e.is_ray:
            # split a ray at any vertex on it
            hits = []
            for i, v in enumerate(vertices):
                if i == e.tail:
                    continue
                wx, wy = v[0] - a[0], v[1] - a[1]
                if wx * e.direction[1] == wy * e.direction[0] and (
                    wx * e.direction[0] + wy * e.direction[1] > 0
                ):
                    hits.append((wx * e.direction[0] + wy * e.direction[1], i))
            hits.sort()
            prev = e.tail
            for _, i in hits:
                out.append(Edge(prev, i, e.direction, e.weight))
                prev = i
            out.append(Edge(prev, -1, e.direction, e.weight))
        else:
            b = vertices[e.head]
            hits = []
            for i, v in enumerate(vertices):
                if i in (e.tail, e.head):
                    continue
                if _on_segment(v, a, b):
                    d2 = (v[0] - a[0]) ** 2 + (v[1] - a[1]) ** 2
                    hits.append((d2, i))
            hits.sort()
            chain = [e.tail] + [i for _, i in hits] + [e.head]
            for u, w in zip(chain, chain[1:]):
                out.append(Edge(u, w, e.direction, e.weight))

    # Merge duplicate segments / rays, adding weights.
    seen = {}
    for e in out:
        if e.is_ray:
            key = ("ray", e.tail, e.direction)
        else:
            u, w = sorted((e.tail, e.head))
            key = ("seg", u, w)
        if key in seen:
            prev = seen[key]
            seen[key] = Edge(prev.tail, prev.head, prev.direction, prev.weight + e.weight)
        else:
            seen[key] = e
    return TropicalCurve(vertices, list(seen.values()))


@dataclass
class BalancingReport:
    violations: list  # (vertex index, residual vector)

    @property
    def ok(self):
        return not self.violations


def check_balancing(curve, vertex_indices=None):
    """Exact weighted-primitive-sum check at each vertex.

    Checks all vertices by default; pass indices to restrict (boundary
    vertices of a clipped curve legitimately fail the interior condition).
    """
    idxs = range(len(curve.vertices)) if vertex_indices is None else vertex_indices
    violations = []
    for vi in idxs:
        sx = sy = 0
        incident = curve.incident(vi)
        if not incident:
            continue
        for e, d in incident:
            sx += e.weight * d[0]
            sy += e.weight * d[1]
        if sx != 0 or sy != 0:
            violations.append((vi, (sx, sy)))
    return BalancingReport(violations)


def _poly_side_chain(polygon):
    verts = [(Fraction(v[0]), Fraction(v[1])) for v in polygon.vertices]
    return verts


def _point_in_polygon(p, verts):
    """1 strictly inside, 0 on boundary, -1 outside (exact)."""
    on_edge = False
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < 0:
            return -1
        if cross == 0 and _on_segment(p, a, b):
            on_edge = True
    return 0 if on_edge else 1


def clip_to_polygon(curve, polygon):
    """Intersect a plane curve with a convex lattice polygon.

    Edges are cut exactly at the boundary; rays become segments. Vertices
    landing on the boundary are kept as curve vertices.
    """
    verts = _poly_side_chain(polygon)
    n = len(verts)
    new_vertices = []
    index_map = {}
    edges = []
    for e in curve.edges:
        a = curve.vertices[e.tail]
        d = (Fraction(e.direction[0]), Fraction(e.direction[1]))
        if e.is_ray:
            t_lo, t_hi = Fraction(0), None
        else:
            b = curve.vertices[e.head]
            span = b[0] - a[0]
            spany = b[1] - a[1]
            # b = a + T d with T > 0
            T = span / d[0] if d[0] != 0 else spany / d[1]
            t_lo, t_hi = Fraction(0), T
        # Clip parameter interval against each side half-plane.
        lo, hi = t_lo, t_hi
        ok = True
        for i in range(n):
            p0, p1 = verts[i], verts[(i + 1) % n]
            # inside for CCW sides: (q - p0) . inner >= 0
            inx, iny = -(p1[1] - p0[1]), p1[0] - p0[0]
            slope = inx * d[0] + iny * d[1]
            const = inx * (a[0] - p0[0]) + iny * (a[1] - p0[1])
            if slope == 0:
                if const < 0:
                    ok = False
                    break
            elif slope > 0:
                t = -const / slope
                lo = max(lo, t)
            else:
                t = -const / slope
                hi = t if hi is None else min(hi, t)
        if not ok or hi is None or lo >= hi:
            continue
        pa = (a[0] + lo * d[0], a[1] + lo * d[1])
        pb = (a[0] + hi * d[0], a[1] + hi * d[1])
        ia = _vertex_index(new_vertices, index_map, pa)
        ib = _vertex_index(new_vertices, index_map, pb)
        if ia != ib:
            edges.append(Edge(ia, ib, e.direction, e.weight))
    return _normalize_curve(TropicalCurve(new_vertices, edges))


@dataclass
class OmegaTropicalCurve:
    """A curve in a polygon with the side labels solved at its corners."""

    polygon: object
    curve: TropicalCurve
    side_labels: dict  # side index -> positive integer


def solve_side_labels(curve, polygon):
    """Solve the corner systems for the side labels d_s and validate them.

    At each polygon vertex the incident curve edges must satisfy
    sum(m_e * l_e) = d_{s1} l_{s1} + d_{s2} l_{s2} with both labels positive
    integers, agreeing across the two endpoints of every side. The curve must
    meet the boundary exactly at the polygon's vertices.
    """
    verts = _poly_side_chain(polygon)
    n = len(verts)
    corner_index = {}
    for vi, v in enumerate(curve.vertices):
        pos = _point_in_polygon(v, verts)
        if pos < 0:
            raise BoundaryViolation(f"curve vertex {v} lies outside the polygon")
        if pos == 0:
            matched = None
            for ci, c in enumerate(verts):
                if v == c:
                    matched = ci
                    break
            if matched is None:
                raise BoundaryViolation(f"curve touches the boundary at {v}, not a polygon vertex")
            corner_index[matched] = vi
    for e in curve.edges:
        if e.is_ray:
            raise BoundaryViolation("unbounded edge in a polygon-restricted curve")
        a, b = curve.edge_endpoints(e)
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        if _point_in_polygon(mid, verts) == 0:
            raise BoundaryViolation(f"curve edge runs along the boundary near {mid}")
    missing = [ci for ci in range(n) if ci not in corner_index]
    if missing:
        raise BoundaryViolation(f"curve misses polygon vertices {missing}")

    # sides[i] joins polygon vertex i to i+1
    labels = {}
    for ci in range(n):
        vi = corner_index[ci]
        sx = sy = 0
        for e, d in curve.incident(vi):
            sx += e.weight * d[0]
            sy += e.weight * d[1]
        s_next = ci  # side (ci, ci+1), primitive out of ci
        s_prev = (ci - 1) % n  # side (ci-1, ci), primitive out of ci is reversed
        l1 = primitive_vector(
            (polygon.vertices[(ci + 1) % n][0] - polygon.vertices[ci][0],
             polygon.vertices[(ci + 1) % n][1] - polygon.vertices[ci][1])
        )
        l2 = primitive_vector(
            (polygon.vertices[s_prev][0] - polygon.vertices[ci][0],
             polygon.vertices[s_prev][1] - polygon.vertices[ci][1])
        )
        det = l1[0] * l2[1] - l1[1] * l2[0]
        num1 = sx * l2[1] - sy * l2[0]
        num2 = l1[0] * sy - l1[1] * sx
        if num1 % det or num2 % det:
            raise NoSolution(f"non-integer side labels at polygon vertex {ci}")
        d1, d2 = num1 // det, num2 // det
        if d1 <= 0 or d2 <= 0:
            raise NoSolution(f"non-positive side label at polygon vertex {ci}: {(d1, d2)}")
        for side, value in ((s_next, d1), (s_prev, d2)):
            if side in labels and labels[side] != value:
                raise Inconsistent(
                    f"side {side} labeled {labels[side]} and {value} from its two endpoints"
                )
            labels[side] = value
    return OmegaTropicalCurve(polygon, curve, labels)


def boundary_extrema(poly, polygon):
    """Exact (min, max) of the polynomial over the polygon boundary.

    Along each side the polynomial is a concave piecewise-linear function of
    the side parameter, so its extrema lie at the endpoints or at pairwise
    tie parameters; all are checked exactly.
    """
    verts = polygon.vertices
    n = len(verts)
    lo = hi = None
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        # Parameterize side as a + t (b - a), t in [0, 1].
        lin = []
        for (k, l), c in poly.coeffs.items():
            alpha = Fraction(k * (b[0] - a[0]) + l * (b[1] - a[1]))
            beta = Fraction(k * a[0] + l * a[1]) + c
            lin.append((alpha, beta))
        ts = [Fraction(0), Fraction(1)]
        for x in range(len(lin)):
            for y in range(x + 1, len(lin)):
                da = lin[x][0] - lin[y][0]
                if da == 0:
                    continue
                t = (lin[y][1] - lin[x][1]) / da
                if 0 < t < 1:
                    ts.append(t)
        for t in ts:
            v = min(alpha * t + beta for alpha, beta in lin)
            lo = v if lo is None else min(lo, v)
            hi = v if hi is None else max(hi, v)
    return lo, hi


@dataclass
class CurveWithPolynomial:
    """An Omega-restricted curve paired with its defining polynomial.

    The polynomial vanishes identically on the polygon boundary and its
    corner locus, clipped to the polygon, is the stored curve; the side
    labels come along from the pairing.
    """

    polynomial: TropicalPolynomial
    omega: OmegaTropicalCurve

    @property
    def curve(self):
        return self.omega.curve


def pair_curve_with_polynomial(poly, polygon):
    """Validate the boundary-vanishing pairing of a polynomial and polygon."""
    lo, hi = boundary_extrema(poly, polygon)
    if lo != 0 or hi != 0:
        raise BoundaryViolation(
            f"polynomial spans [{lo}, {hi}] on the boundary, not identically 0"
        )
    curve = clip_to_polygon(corner_locus(poly), polygon)
    omega = solve_side_labels(curve, polygon)
    return CurveWithPolynomial(poly, omega)


def tropical_area(curve, edges=None):
    """Sum over edges of |l_e| * m_e * length(e)."""
    total = 0.0
    chosen = curve.edges if edges is None else edges
    for e in chosen:
        if e.is_ray:
            raise UnboundedEdge("tropical area needs bounded edges")
        a, b = curve.edge_endpoints(e)
        length = math.hypot(float(b[0] - a[0]), float(b[1] - a[1]))
        total += math.hypot(*e.direction) * e.weight * length
    return total


def _point_segment_dist2(p, a, b):
    px, py = float(p[0]), float(p[1])
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    if L2 == 0:
        return (px - ax) ** 2 + (py - ay) ** 2
    t = ((px - ax) * vx + (py - ay) * vy) / L2
    t = min(1.0, max(0.0, t))
    qx, qy = ax + t * vx, ay + t * vy
    return (px - qx) ** 2 + (py - qy) ** 2


def _point_on_curve_exact(curve, p):
    p = (_frac(p[0]), _frac(p[1]))
    for v in curve.vertices:
        if v[0] == p[0] and v[1] == p[1]:
            return True
    for e in curve.edges:
        a = curve.vertices[e.tail]
        if e.is_ray:
            wx, wy = p[0] - a[0], p[1] - a[1]
            if wx * e.direction[1] == wy * e.direction[0] and (
                wx * e.direction[0] + wy * e.direction[1] >= 0
            ):
                return True
        else:
            b = curve.vertices[e.head]
            if _on_segment(p, a, b):
                return True
    return False


def distance_to_curve(curve, p):
    """Euclidean distance from a point to the curve (segments only; rays
    are treated via a long proxy segment)."""
    best = math.inf
    for e in curve.edges:
        a = curve.vertices[e.tail]
        if e.is_ray:
            far = (a[0] + 10**6 * e.direction[0], a[1] + 10**6 * e.direction[1])
            d2 = _point_segment_dist2(p, a, far)
        else:
            d2 = _point_segment_dist2(p, a, curve.vertices[e.head])
        best = min(best, d2)
    if not curve.edges:
        for v in curve.vertices:
            best = min(best, (float(p[0]) - float(v[0])) ** 2 + (float(p[1]) - float(v[1])) ** 2)
    return math.sqrt(best)


@dataclass
class PassReport:
    results: list  # (point, ok, distance)

    @property
    def ok(self):
        return all(r[1] for r in self.results)


def passes_through(curve, points, tolerance=0):
    """Does the curve pass within tolerance of each point (exact at tol 0)?"""
    results = []
    for p in points:
        if tolerance == 0:
            hit = _point_on_curve_exact(curve, p)
            dist = 0.0 if hit else distance_to_curve(curve, p)
        else:
            dist = distance_to_curve(curve, p)
            hit = dist <= tolerance
        results.append((p, hit, dist))
    return PassReport(results)


# --- serialization ---------------------------------------------------------


def _frac_str(a):
    a = _frac(a)
    return str(a)


def polynomial_to_json(poly):
    support = sorted(poly.coeffs)
    return {
        "support": [list(kl) for kl in support],
        "coeffs": [_frac_str(poly.coeffs[kl]) for kl in support],
    }


def polynomial_from_json(data):
    return TropicalPolynomial(
        {tuple(kl): Fraction(c) for kl, c in zip(data["support"], data["coeffs"])}
    )


def curve_to_json(curve):
    edges = []
    for e in curve.edges:
        rec = {"dir": list(e.direction), "weight": e.weight}
        if e.is_ray:
            rec["ray"] = e.tail
        else:
            rec["v"] = [e.tail, e.head]
        edges.append(rec)
    return {
        "vertices": [[_frac_str(v[0]), _frac_str(v[1])] for v in curve.vertices],
        "edges": edges,
    }


def curve_from_json(data):
    vertices = [(Fraction(x), Fraction(y)) for x, y in data["vertices"]]
    edges = []
    for rec in data["edges"]:
        d = tuple(rec["dir"])
        if "ray" in rec:
            edges.append(Edge(rec["ray"], -1, d, rec["weight"]))
        else:
            edges.append(Edge(rec["v"][0], rec["v"][1], d, rec["weight"]))
    return TropicalCurve(vertices, edges)


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True)
