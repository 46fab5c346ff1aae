"""Tropical polynomials and their corner loci, standalone.

A min-plus polynomial is the minimum of affine forms with integer slopes;
its corner locus (where the minimum is achieved twice) is a balanced
weighted graph. Weights come from the lattice lengths of the dual support
segments.

Run:  python demos/04_tropical_curves.py
"""

from fractions import Fraction

from tropsand import (
    TropicalPolynomial,
    check_balancing,
    clip_to_polygon,
    corner_locus,
    evaluate,
    solve_side_labels,
    tropical_area,
    validate_polygon,
)

line = TropicalPolynomial({(1, 0): 0, (0, 1): 0, (0, 0): 0})
print("min(x, y, 0) at (3, 5):", evaluate(line, (3, 5)))
curve = corner_locus(line)
print("its corner locus: vertex", curve.vertices[0], "with rays")
for e in curve.edges:
    print("   direction", e.direction, "weight", e.weight)
print("balanced:", check_balancing(curve).ok)

double = corner_locus(TropicalPolynomial({(2, 0): 0, (0, 0): 0}))
print("\nmin(2x, 0): a weight-2 vertical line;", [e.weight for e in double.edges])

# The limit object of the centered single-grain square experiment.
square = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
cross_poly = TropicalPolynomial({(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1})
cross = clip_to_polygon(corner_locus(cross_poly), square)
omega = solve_side_labels(cross, square)
print("\nmin(x, y, 1-x, 1-y) restricted to the unit square:")
print("  edges:", [(e.direction, e.weight) for e in cross.edges])
print("  side labels:", omega.side_labels)
print("  tropical symplectic area:", tropical_area(cross))

# The generic one-point limit: rectangle plus diagonals, five monomials.
ring_poly = TropicalPolynomial(
    {(1, 0): 0, (0, 1): 0, (-1, 0): 1, (0, -1): 1, (0, 0): Fraction(3, 8)}
)
ring = clip_to_polygon(corner_locus(ring_poly), square)
print("\nwith a plateau coefficient 3/8 the locus gains the rectangle:")
print("  vertices:", [(str(v[0]), str(v[1])) for v in ring.vertices])
print("  area:", tropical_area(ring))
