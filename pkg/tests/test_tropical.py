import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from tropsand.lattice import validate_polygon
from tropsand.tropical import (
    BoundaryViolation,
    Edge,
    EmptyCurve,
    Inconsistent,
    NoSolution,
    TropicalCurve,
    TropicalPolynomial,
    UnboundedEdge,
    check_balancing,
    clip_to_polygon,
    corner_locus,
    curve_from_json,
    curve_to_json,
    distance_to_curve,
    evaluate,
    passes_through,
    polynomial_from_json,
    polynomial_to_json,
    solve_side_labels,
    tropical_area,
)

SQUARE = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])

LINE = TropicalPolynomial({(1, 0): 0, (0, 1): 0, (0, 0): 0})


def ray_set(curve):
    return sorted(e.direction for e in curve.edges if e.is_ray)


class TestEvaluate:
    def test_value_and_argmin(self):
        v, arg = evaluate(LINE, (1, 2))
        assert v == 0 and arg == {(0, 0)}

    def test_triple_tie(self):
        v, arg = evaluate(LINE, (0, 0))
        assert v == 0 and arg == {(1, 0), (0, 1), (0, 0)}

    def test_negative(self):
        v, arg = evaluate(LINE, (-1, 3))
        assert v == -1 and arg == {(1, 0)}


class TestCornerLocus:
    def test_tropical_line(self):
        c = corner_locus(LINE)
        assert c.vertices == [(0, 0)]
        assert ray_set(c) == [(-1, -1), (0, 1), (1, 0)]
        assert all(e.weight == 1 for e in c.edges)
        assert check_balancing(c).ok

    def test_weight_two_line(self):
        c = corner_locus(TropicalPolynomial({(2, 0): 0, (0, 0): 0}))
        assert all(e.weight == 2 for e in c.edges)
        assert ray_set(c) == [(0, -1), (0, 1)]
        xs = {v[0] for v in c.vertices}
        assert xs == {0}

    def test_collinear_chain_merges(self):
        c = corner_locus(TropicalPolynomial({(2, 0): 2, (1, 0): 1, (0, 0): 0}))
        assert all(e.weight == 2 for e in c.edges)
        assert {v[0] for v in c.vertices} == {-1}

    def test_single_monomial_has_no_locus(self):
        with pytest.raises(EmptyCurve):
            corner_locus(TropicalPolynomial({(0, 0): 0}))

    def test_lifted_middle_monomial_inactive(self):
        # (1, 0) with a high coefficient sits above the lower envelope: the
        # locus is the plain weight-2 line of the outer pair.
        c = corner_locus(TropicalPolynomial({(0, 0): 0, (1, 0): 10, (2, 0): 0}))
        assert ray_set(c) == [(0, -1), (0, 1)]
        assert all(e.weight == 2 for e in c.edges)
        assert {v[0] for v in c.vertices} == {0}

    def test_translation_property(self):
        rng = random.Random(3)
        for _ in range(20):
            poly = random_poly(rng)
            t1, t2 = Fraction(rng.randrange(-4, 5), 2), Fraction(rng.randrange(-4, 5), 2)
            shifted = TropicalPolynomial(
                {(k, l): a + k * t1 + l * t2 for (k, l), a in poly.coeffs.items()}
            )
            try:
                c0 = corner_locus(poly)
            except EmptyCurve:
                continue
            c1 = corner_locus(shifted)
            # True vertices (>= 3 incident edges) translate by (-t1, -t2);
            # 2-valent split points of full tie lines are representation
            # artifacts and are skipped.
            v0 = sorted(v for i, v in enumerate(c0.vertices) if len(c0.incident(i)) >= 3)
            v1 = sorted(
                (v[0] + t1, v[1] + t2)
                for i, v in enumerate(c1.vertices)
                if len(c1.incident(i)) >= 3
            )
            assert v0 == v1
            assert sorted((e.direction, e.weight) for e in c0.edges) == sorted(
                (e.direction, e.weight) for e in c1.edges
            )

    def test_constant_shift_invariance(self):
        rng = random.Random(4)
        for _ in range(20):
            poly = random_poly(rng)
            try:
                c0 = corner_locus(poly)
            except EmptyCurve:
                continue
            c1 = corner_locus(poly.shifted(Fraction(7, 3)))
            assert sorted(c0.vertices) == sorted(c1.vertices)

    def test_ray_flux_matches_hull_boundary(self):
        # Dual statement: rays correspond to the boundary edges of the
        # support hull; per hull edge, total ray weight times direction
        # equals the rotated edge vector.
        rng = random.Random(11)
        for _ in range(20):
            poly = random_poly(rng)
            try:
                c = corner_locus(poly)
            except EmptyCurve:
                continue
            flux = {}
            for e in c.edges:
                if e.is_ray:
                    flux[e.direction] = flux.get(e.direction, 0) + e.weight
            sx = sum(d[0] * w for d, w in flux.items())
            sy = sum(d[1] * w for d, w in flux.items())
            assert (sx, sy) == (0, 0)
            hull = support_hull(poly)
            expect = {}
            for (ax, ay), (bx, by) in zip(hull, hull[1:] + hull[:1]):
                ex, ey = bx - ax, by - ay
                g = math.gcd(abs(ex), abs(ey))
                # rotate the CCW hull edge by +90 degrees: outward curve ray
                d = (-ey // g, ex // g)
                expect[d] = expect.get(d, 0) + g
            assert flux == expect


def support_hull(poly):
    pts = sorted(poly.coeffs)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    if len(pts) == 1:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull if hull else pts


def random_poly(rng, span=4, max_terms=6, denom=8):
    n = rng.randrange(2, max_terms + 1)
    support = set()
    while len(support) < n:
        support.add((rng.randrange(-span, span + 1), rng.randrange(-span, span + 1)))
    return TropicalPolynomial(
        {kl: Fraction(rng.randrange(-4 * denom, 4 * denom + 1), denom) for kl in support}
    )


def argmin_tie_oracle(poly, lo, hi, step):
    """Mark grid cells whose corners disagree on the achieving monomial."""
    xs = np.arange(lo, hi + step, step)
    marked = []
    args = {}
    for x in xs:
        for y in xs:
            _, a = evaluate(poly, (Fraction(x).limit_denominator(10**6), Fraction(y).limit_denominator(10**6)))
            args[(x, y)] = a
    for i in range(len(xs) - 1):
        for j in range(len(xs) - 1):
            corners = [args[(xs[i], xs[j])], args[(xs[i + 1], xs[j])], args[(xs[i], xs[j + 1])], args[(xs[i + 1], xs[j + 1])]]
            common = corners[0]
            for c in corners[1:]:
                common = common & c
            if not common:
                marked.append((xs[i] + step / 2, xs[j] + step / 2))
    return marked


class TestOracleAgreement:
    def test_line_against_oracle(self):
        c = corner_locus(LINE)
        marked = argmin_tie_oracle(LINE, -3, 3, 0.5)
        for m in marked:
            assert distance_to_curve(c, m) <= 0.5

    def test_random_polys_against_oracle(self):
        rng = random.Random(21)
        checked = 0
        while checked < 10:
            poly = random_poly(rng, span=2, max_terms=4, denom=4)
            try:
                c = corner_locus(poly)
            except EmptyCurve:
                continue
            checked += 1
            step = 0.5
            marked = argmin_tie_oracle(poly, -8, 8, step)
            for m in marked:
                assert distance_to_curve(c, m) <= step * math.sqrt(2)


class TestBalancing:
    def test_unbalanced_two_rays(self):
        c = TropicalCurve([(Fraction(0), Fraction(0))], [
            Edge(0, -1, (1, 0), 1),
            Edge(0, -1, (0, 1), 1),
        ])
        rep = check_balancing(c)
        assert not rep.ok
        assert rep.violations[0][1] == (1, 1)

    def test_weighted_balance(self):
        c = TropicalCurve([(Fraction(0), Fraction(0))], [
            Edge(0, -1, (1, 0), 2),
            Edge(0, -1, (-1, 1), 1),
            Edge(0, -1, (-1, -1), 1),
        ])
        assert check_balancing(c).ok


class TestSideLabels:
    def x_curve(self):
        return clip_to_polygon(
            corner_locus(TropicalPolynomial({(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1})),
            SQUARE,
        )

    def test_diagonal_cross_labels_one(self):
        om = solve_side_labels(self.x_curve(), SQUARE)
        assert om.side_labels == {0: 1, 1: 1, 2: 1, 3: 1}

    def test_missing_vertex(self):
        c = TropicalCurve(
            [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))],
            [Edge(0, 1, (1, 1), 1)],
        )
        with pytest.raises(BoundaryViolation):
            solve_side_labels(c, SQUARE)

    def test_direction_1_2_reads_off_labels(self):
        # Edges with primitive (1, 2) out of each square corner; the corner
        # systems then read the labels straight off the components.
        h = Fraction(1, 2)
        q = Fraction(1, 4)
        c = TropicalCurve(
            [
                (Fraction(0), Fraction(0)),
                (Fraction(1), Fraction(0)),
                (Fraction(1), Fraction(1)),
                (Fraction(0), Fraction(1)),
                (q, h),
                (1 - q, h),
            ],
            [
                Edge(0, 4, (1, 2), 1),
                Edge(1, 5, (-1, 2), 1),
                Edge(2, 5, (-1, -2), 1),
                Edge(3, 4, (1, -2), 1),
                Edge(4, 5, (1, 0), 1),
            ],
        )
        om = solve_side_labels(c, SQUARE)
        assert om.side_labels == {0: 1, 1: 2, 2: 1, 3: 2}

    def test_touching_mid_boundary_rejected(self):
        # The eight-arm star meets the square's sides at their midpoints,
        # which the boundary condition forbids.
        h = Fraction(1, 2)
        verts = [
            (h, h),
            (Fraction(0), Fraction(0)),
            (Fraction(1), Fraction(0)),
            (Fraction(1), Fraction(1)),
            (Fraction(0), Fraction(1)),
            (h, Fraction(0)),
            (h, Fraction(1)),
            (Fraction(0), h),
            (Fraction(1), h),
        ]
        edges = [
            Edge(1, 0, (1, 1), 1),
            Edge(2, 0, (-1, 1), 1),
            Edge(3, 0, (-1, -1), 1),
            Edge(4, 0, (1, -1), 1),
            Edge(5, 0, (0, 1), 1),
            Edge(6, 0, (0, -1), 1),
            Edge(7, 0, (1, 0), 1),
            Edge(8, 0, (-1, 0), 1),
        ]
        star = TropicalCurve(verts, edges)
        with pytest.raises(BoundaryViolation):
            solve_side_labels(star, SQUARE)


class TestArea:
    def test_diagonal_segment(self):
        c = TropicalCurve(
            [(Fraction(0), Fraction(0)), (Fraction(2), Fraction(2))],
            [Edge(0, 1, (1, 1), 1)],
        )
        assert tropical_area(c) == pytest.approx(4.0)

    def test_weighted_horizontal(self):
        c = TropicalCurve(
            [(Fraction(0), Fraction(0)), (Fraction(3), Fraction(0))],
            [Edge(0, 1, (1, 0), 2)],
        )
        assert tropical_area(c) == pytest.approx(6.0)

    def test_eight_arm_star_formula(self):
        # 4 half-axes of length 1/2 weight 1 plus 4 half-diagonals of
        # length sqrt(2)/2 weight 1: total 2 + 4 = 6.
        h = Fraction(1, 2)
        verts = [
            (h, h),
            (Fraction(0), Fraction(0)),
            (Fraction(1), Fraction(0)),
            (Fraction(1), Fraction(1)),
            (Fraction(0), Fraction(1)),
            (h, Fraction(0)),
            (h, Fraction(1)),
            (Fraction(0), h),
            (Fraction(1), h),
        ]
        edges = [Edge(i, 0, d, 1) for i, d in [
            (1, (1, 1)), (2, (-1, 1)), (3, (-1, -1)), (4, (1, -1)),
            (5, (0, 1)), (6, (0, -1)), (7, (1, 0)), (8, (-1, 0)),
        ]]
        assert tropical_area(TropicalCurve(verts, edges)) == pytest.approx(6.0)

    def test_refinement_invariance(self):
        c1 = TropicalCurve(
            [(Fraction(0), Fraction(0)), (Fraction(4), Fraction(0))],
            [Edge(0, 1, (1, 0), 3)],
        )
        c2 = TropicalCurve(
            [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(4), Fraction(0))],
            [Edge(0, 1, (1, 0), 3), Edge(1, 2, (1, 0), 3)],
        )
        assert tropical_area(c1) == pytest.approx(tropical_area(c2))

    def test_unbounded_rejected(self):
        c = corner_locus(LINE)
        with pytest.raises(UnboundedEdge):
            tropical_area(c)


class TestPassesThrough:
    def test_center_on_cross(self):
        c = clip_to_polygon(
            corner_locus(TropicalPolynomial({(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1})),
            SQUARE,
        )
        assert passes_through(c, [(Fraction(1, 2), Fraction(1, 2))], tolerance=0).ok

    def test_off_point_fails(self):
        c = clip_to_polygon(
            corner_locus(TropicalPolynomial({(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1})),
            SQUARE,
        )
        rep = passes_through(c, [(Fraction(1, 10), Fraction(1, 2))], tolerance=0)
        assert not rep.ok

    def test_tolerance(self):
        c = clip_to_polygon(
            corner_locus(TropicalPolynomial({(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1})),
            SQUARE,
        )
        assert passes_through(c, [(0.51, 0.51)], tolerance=0.05).ok


class TestCurvePolynomialPairing:
    def test_vanishing_polynomial_pairs(self):
        from tropsand.tropical import pair_curve_with_polynomial

        poly = TropicalPolynomial({(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1})
        pair = pair_curve_with_polynomial(poly, SQUARE)
        assert pair.omega.side_labels == {0: 1, 1: 1, 2: 1, 3: 1}
        assert sorted(e.direction for e in pair.curve.edges) == [
            (-1, -1), (-1, 1), (1, -1), (1, 1),
        ]
        # the paired curve is precisely the clipped corner locus
        ref = clip_to_polygon(corner_locus(poly), SQUARE)
        assert sorted(pair.curve.vertices) == sorted(ref.vertices)

    def test_nonvanishing_polynomial_rejected(self):
        from tropsand.tropical import pair_curve_with_polynomial

        poly = TropicalPolynomial({(1, 0): Fraction(1, 4), (0, 1): 0, (-1, 0): 1, (0, -1): 1})
        with pytest.raises(BoundaryViolation):
            pair_curve_with_polynomial(poly, SQUARE)

    def test_boundary_extrema_exact(self):
        from tropsand.tropical import boundary_extrema

        poly = TropicalPolynomial({(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1})
        assert boundary_extrema(poly, SQUARE) == (0, 0)
        shifted = poly.shifted(Fraction(1, 5))
        lo, hi = boundary_extrema(shifted, SQUARE)
        assert lo == hi == Fraction(1, 5)


class TestJson:
    def test_polynomial_round_trip(self):
        poly = TropicalPolynomial({(1, 0): Fraction(1, 3), (0, 1): 0, (-2, 5): Fraction(-7, 2)})
        data = json.loads(json.dumps(polynomial_to_json(poly)))
        back = polynomial_from_json(data)
        assert back.coeffs == poly.coeffs

    def test_curve_round_trip(self):
        c = corner_locus(LINE)
        data = json.loads(json.dumps(curve_to_json(c)))
        back = curve_from_json(data)
        assert back.vertices == c.vertices
        assert [(e.tail, e.head, e.direction, e.weight) for e in back.edges] == [
            (e.tail, e.head, e.direction, e.weight) for e in c.edges
        ]
