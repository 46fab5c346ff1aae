"""The slanted square: a curve with weight-2 edges.

On the lattice square with side slopes 2 and 1/2, a single grain produces a
richer curve: four weight-2 axis-parallel edges (visible as double lines of
height-2 sites) and weight-1 diagonals. The weight estimator reads the 2s
off the sand deficits, and the fitted curve balances exactly with all side
labels equal to 1.

Run:  python demos/05_slanted_square_weight_two.py
"""

from fractions import Fraction

from tropsand import PerturbationConfig, convergence_sweep, validate_polygon
from tropsand.gridio import write_grid
from tropsand.render import render_svg
from tropsand.lattice import build_domain
from tropsand.sandpile import max_stable, perturb, relax_queue

slanted = validate_polygon([(0, 0), (2, 1), (1, 3), (-1, 2)])
config = PerturbationConfig(((Fraction(1, 2), Fraction(3, 2)),))
N = 128

report = convergence_sweep(slanted, config, [N])
step = report.steps[0]
if step.error:
    raise SystemExit(step.error)

print(f"fitted polynomial has {len(step.polynomial.support)} monomials")
print("canonical coefficients:", {kl: str(a) for kl, a in sorted(step.canonical.coeffs.items())})
print("side labels:", step.side_labels)
print("edges (direction, weight, estimate):")
for e, w in zip(step.curve.edges, step.weights):
    print(f"   {e.direction}  m={e.weight}  estimate {w.raw:.3f}" + ("  <- double line" if e.weight == 2 else ""))

domain = build_domain(slanted, N)
result = relax_queue(perturb(max_stable(domain), config))
write_grid("demo05_final.grid", domain, result.final.heights)
render_svg("demo05_overlay.svg", domain, result.final.heights, curve=step.curve, weight_labels=True)
print("\nwrote demo05_final.grid and demo05_overlay.svg (weight labels on the fitted edges)")
