"""Drop one extra grain on the maximal state of a large square.

The relaxed state equals 3 almost everywhere. The deviation set is a small
axis-aligned rectangle of height-2 sites around the perturbation point plus
four height-1 diagonals running into the corners; the height at the
perturbation site itself returns to 3.

Run:  python demos/01_single_grain_on_square.py
"""

import numpy as np

from tropsand import (
    PerturbationConfig,
    build_domain,
    deviation_set,
    max_stable,
    perturb,
    relax_queue,
    round_down,
    validate_polygon,
)
from tropsand.render import render_ppm, render_svg

N = 256
P = (0.62, 0.44)  # anywhere strictly inside; try the exact center too

square = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
domain = build_domain(square, N)
print(f"domain: {domain.size} sites at scale N={N}")

state = perturb(max_stable(domain), PerturbationConfig((P,)))
result = relax_queue(state)
print(f"relaxed after {result.topplings_total} topplings, {result.grains_lost} grains left the square")

site = round_down(P, N)
print(f"final height at the perturbation site {site}: {result.final.site_value(site)}")

dev = deviation_set(result)
hist = np.bincount(dev.deficits, minlength=4)
print(f"deviation sites: {len(dev.points)} (deficit 1: {hist[1]}, deficit 2: {hist[2]}, deficit 3+: {hist[3:].sum()})")

render_ppm("demo01_final.ppm", domain, result.final.heights)
render_svg("demo01_final.svg", domain, result.final.heights)
print("wrote demo01_final.ppm / demo01_final.svg (squares = 2 grains, circles = 1 grain)")
