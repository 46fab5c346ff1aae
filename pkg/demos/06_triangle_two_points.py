"""Two perturbation points in a triangle: the curve shape stabilizes.

With two grains dropped in a right triangle, successive scales produce the
same combinatorial curve (same edge directions and weights), passing through
both points, with every interior vertex balanced.

Run:  python demos/06_triangle_two_points.py
"""

from fractions import Fraction

from tropsand import PerturbationConfig, convergence_sweep, passes_through, validate_polygon

triangle = validate_polygon([(0, 0), (1, 0), (0, 1)])
points = (
    (Fraction(1, 4), Fraction(1, 4)),
    (Fraction(3, 8), Fraction(3, 8)),
)
config = PerturbationConfig(points)

report = convergence_sweep(triangle, config, [64, 128], run_probe=False)
for step in report.steps:
    if step.error:
        print(f"N={step.scale}: {step.error}")
        continue
    combo = sorted((e.direction, e.weight) for e in step.curve.edges)
    through = passes_through(step.curve, list(points), tolerance=2 / step.scale).ok
    print(f"N={step.scale}: balancing {'ok' if step.balancing_ok else 'FAIL'}, "
          f"passes through both points: {through}")
    print("   combinatorial type:", combo)
print("Hausdorff between the two scaled deviation sets:",
      [round(h, 5) for h in report.hausdorff_to_next])
