"""Sandpile relaxation on lattice polygons and tropical scaling-limit analysis.

The package is organized as four layers: exact lattice geometry
(:mod:`tropsand.lattice`), the relaxation engine (:mod:`tropsand.sandpile`),
exact tropical curves and polynomials (:mod:`tropsand.tropical`), and the
scaling-limit diagnostics that tie the two worlds together
(:mod:`tropsand.limits`). Grid serialization, figure rendering, and the
command-line tool live in :mod:`tropsand.gridio`, :mod:`tropsand.render`,
and :mod:`tropsand.cli`.
"""

from .lattice import (
    LatticePolygon,
    PerturbationConfig,
    ScaledDomain,
    build_domain,
    neighbors,
    parse_config,
    primitive_vector,
    round_down,
    validate_polygon,
)
from .sandpile import (
    DeviationLocus,
    Odometer,
    RelaxationResult,
    SandState,
    deviation_set,
    discrete_laplacian,
    max_stable,
    perturb,
    relax_naive,
    relax_queue,
    topple,
    verify_least_action,
)
from .tropical import (
    CurveWithPolynomial,
    Edge,
    OmegaTropicalCurve,
    TropicalCurve,
    TropicalPolynomial,
    boundary_extrema,
    check_balancing,
    clip_to_polygon,
    corner_locus,
    evaluate,
    pair_curve_with_polynomial,
    passes_through,
    solve_side_labels,
    tropical_area,
)
from .limits import (
    ConvergenceReport,
    LinearRegionDecomposition,
    ScaledOdometer,
    assemble_polynomial,
    canonical_polynomial,
    convergence_sweep,
    estimate_edge_weights,
    fit_linear_regions,
    hausdorff_distance,
    minimality_probe,
    scaled_odometer,
)

__all__ = [
    "LatticePolygon",
    "PerturbationConfig",
    "ScaledDomain",
    "build_domain",
    "neighbors",
    "parse_config",
    "primitive_vector",
    "round_down",
    "validate_polygon",
    "DeviationLocus",
    "Odometer",
    "RelaxationResult",
    "SandState",
    "deviation_set",
    "discrete_laplacian",
    "max_stable",
    "perturb",
    "relax_naive",
    "relax_queue",
    "topple",
    "verify_least_action",
    "CurveWithPolynomial",
    "Edge",
    "OmegaTropicalCurve",
    "TropicalCurve",
    "TropicalPolynomial",
    "boundary_extrema",
    "check_balancing",
    "clip_to_polygon",
    "corner_locus",
    "evaluate",
    "pair_curve_with_polynomial",
    "passes_through",
    "solve_side_labels",
    "tropical_area",
    "ConvergenceReport",
    "LinearRegionDecomposition",
    "ScaledOdometer",
    "assemble_polynomial",
    "canonical_polynomial",
    "convergence_sweep",
    "estimate_edge_weights",
    "fit_linear_regions",
    "hausdorff_distance",
    "minimality_probe",
    "scaled_odometer",
]

__version__ = "0.1.0"
