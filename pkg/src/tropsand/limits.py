"""Scaling-limit diagnostics: piecewise-linear fits of odometers, edge-weight
estimation from sand deficits, Hausdorff convergence, and minimality probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import ndimage

from .sandpile import deviation_set, max_stable, perturb, relax_queue
from .tropical import (
    TropicalPolynomial,
    boundary_extrema,
    clip_to_polygon,
    corner_locus,
    check_balancing,
    distance_to_curve,
    evaluate,
    passes_through,
    solve_side_labels,
)


class FitError(ValueError):
    pass


class NoRegions(FitError):
    pass


class InconsistentRegions(FitError):
    pass


class OverlappingStrips(ValueError):
    pass


class EmptySet(ValueError):
    pass


@dataclass
class ScaledOdometer:
    """Odometer values divided by the scale, kept as numerator / N."""

    scale: int
    numerators: np.ndarray  # int64 dense grid, equals the raw counts
    origin: tuple

    def values(self):
        return self.numerators.astype(np.float64) / self.scale

    def site_value(self, v):
        x0, y0 = self.origin
        return Fraction(int(self.numerators[v[1] - y0, v[0] - x0]), self.scale)


def scaled_odometer(result):
    domain = result.final.domain
    return ScaledOdometer(domain.scale, result.odometer.counts.copy(), domain.grid_origin())


@dataclass
class LinearRegion:
    gradient: tuple  # (k, l) integers
    offset: int  # F = k*x + l*y + offset on the region, exactly
    cells: np.ndarray  # (m, 2) array of (row, col) grid indices


@dataclass
class LinearRegionDecomposition:
    scale: int
    origin: tuple
    regions: list
    unclassified: np.ndarray  # (m, 2) grid indices of in-domain unclassified sites

    @property
    def classified_fraction(self):
        total = sum(len(r.cells) for r in self.regions) + len(self.unclassified)
        if total == 0:
            return 0.0
        return sum(len(r.cells) for r in self.regions) / total


def fit_linear_regions(odometer, min_region_size=8, boundary_band=2):
    """Decompose an odometer into maximal regions of constant integer gradient.

    A site qualifies when the forward differences are constant over its 3x3
    neighborhood; a band of the given width along the domain boundary is
    excluded up front (boundary rows mix regions). Connected components of a
    common gradient with at least `min_region_size` sites become regions,
    everything else is reported unclassified.
    """
    domain = odometer.domain
    mask = domain.mask()
    F = odometer.counts
    rows, cols = F.shape

    interior = mask.copy()
    structure = np.ones((3, 3), dtype=bool)
    for _ in range(boundary_band):
        interior = ndimage.binary_erosion(interior, structure=structure, border_value=0)

    # Forward differences where defined.
    gx = np.zeros_like(F)
    gy = np.zeros_like(F)
    has_gx = np.zeros_like(mask)
    has_gy = np.zeros_like(mask)
    gx[:, :-1] = F[:, 1:] - F[:, :-1]
    gy[:-1, :] = F[1:, :] - F[:-1, :]
    has_gx[:, :-1] = mask[:, :-1] & mask[:, 1:]
    has_gy[:-1, :] = mask[:-1, :] & mask[1:, :]

    # gx constant over the 3x3 window centered at each site.
    def window_constant(g, has):
        lo = ndimage.minimum_filter(np.where(has, g, np.iinfo(np.int64).max), size=3, mode="constant", cval=np.iinfo(np.int64).max)
        hi = ndimage.maximum_filter(np.where(has, g, np.iinfo(np.int64).min), size=3, mode="constant", cval=np.iinfo(np.int64).min)
        all_def = ndimage.minimum_filter(has.astype(np.int8), size=3, mode="constant", cval=0).astype(bool)
        return all_def & (lo == hi), lo

    okx, valx = window_constant(gx, has_gx)
    oky, valy = window_constant(gy, has_gy)
    classifiable = interior & okx & oky

    regions = []
    claimed = np.zeros_like(mask)
    if classifiable.any():
        # Label connected components of equal (k, l).
        uniq = {(int(a), int(b)) for a, b in zip(valx[classifiable], valy[classifiable])}
        x0, y0 = domain.grid_origin()
        yy, xx = np.mgrid[0:rows, 0:cols]
        xs = xx + x0
        ys = yy + y0
        for k, l in sorted(uniq):
            sel = classifiable & (valx == k) & (valy == l)
            labels, nlab = ndimage.label(sel)
            for lab in range(1, nlab + 1):
                cells = np.argwhere(labels == lab)
                if len(cells) < min_region_size:
                    continue
                r0, c0 = cells[0]
                offset = int(F[r0, c0] - k * xs[r0, c0] - l * ys[r0, c0])
                offs = F[cells[:, 0], cells[:, 1]] - k * xs[cells[:, 0], cells[:, 1]] - l * ys[cells[:, 0], cells[:, 1]]
                assert np.all(offs == offset), "gradient-constant region with drifting offset"
                regions.append(LinearRegion((int(k), int(l)), offset, cells))
                claimed[cells[:, 0], cells[:, 1]] = True
    if not regions:
        raise NoRegions("no constant-gradient region found; scale too small")
    unclassified = np.argwhere(mask & ~claimed)
    return LinearRegionDecomposition(domain.scale, domain.grid_origin(), regions, unclassified)


def assemble_polynomial(decomp, polygon, scale, boundary_tol=None, check_boundary=True):
    """Build the min-plus polynomial whose pieces are the fitted regions.

    Support points are the fitted gradients; the coefficient of (k, l) is the
    fitted offset over the scale. Checks that the polynomial reproduces the
    scaled odometer exactly on every classified site and (unless
    `check_boundary` is off, for synthetic data) that its boundary values are
    within `boundary_tol` (default 2/scale) of zero.
    """
    if not decomp.regions:
        raise NoRegions("empty decomposition")
    if boundary_tol is None:
        boundary_tol = Fraction(2, scale)
    coeffs = {}
    for r in decomp.regions:
        k, l = r.gradient
        a = Fraction(r.offset, scale)
        if (k, l) in coeffs and coeffs[(k, l)] != a:
            if abs(coeffs[(k, l)] - a) > Fraction(1, scale):
                raise InconsistentRegions(
                    f"gradient {(k, l)} fitted with offsets {coeffs[(k, l)]} and {a}"
                )
            # Two regions of the same gradient within quantization: keep the
            # smaller offset (the binding one under the min).
            a = min(a, coeffs[(k, l)])
        coeffs[(k, l)] = a
    poly = TropicalPolynomial(coeffs)

    x0, y0 = decomp.origin
    for r in decomp.regions:
        k, l = r.gradient
        for row, col in r.cells[:: max(1, len(r.cells) // 64)]:
            x, y = int(col + x0), int(row + y0)
            value, _ = evaluate(poly, (Fraction(x, scale), Fraction(y, scale)))
            if value != Fraction(k * x + l * y + r.offset, scale):
                raise InconsistentRegions(
                    f"fitted polynomial does not reproduce site ({x},{y})"
                )
    if check_boundary:
        for vx, vy in polygon.vertices:
            value, _ = evaluate(poly, (vx, vy))
            if abs(value) > boundary_tol:
                raise InconsistentRegions(
                    f"fitted polynomial is {value} at polygon vertex ({vx},{vy})"
                )
    return poly


@dataclass
class WeightEstimate:
    edge_index: int
    raw: float
    rounded: int
    site_count: int
    flagged: bool


def estimate_edge_weights(locus, curve, strip_halfwidth=None, end_retreat=None):
    """Estimate edge weights by averaging deficits in strips around the edges.

    For edge e the estimate is sum(deficits in strip) / (N * |l_e| * length
    of the strip portion of e). Strips retreat from both edge endpoints to
    avoid vertex double-counting and must stay disjoint.
    """
    N = locus.scale
    if strip_halfwidth is None:
        strip_halfwidth = 3.0 / N
    if end_retreat is None:
        end_retreat = 5.0 / N
    pts = locus.scaled_points()
    deficits = locus.deficits
    assigned = np.full(len(pts), -1, dtype=np.int64)
    estimates = []
    for ei, e in enumerate(curve.edges):
        a, b = curve.edge_endpoints(e)
        if b is None:
            raise ValueError("weight estimation needs bounded edges")
        ax, ay = float(a[0]), float(a[1])
        bx, by = float(b[0]), float(b[1])
        vx, vy = bx - ax, by - ay
        length = math.hypot(vx, vy)
        if length == 0:
            continue
        ux, uy = vx / length, vy / length
        t = (pts[:, 0] - ax) * ux + (pts[:, 1] - ay) * uy
        d = np.abs(-(pts[:, 0] - ax) * uy + (pts[:, 1] - ay) * ux)
        t_lo, t_hi = end_retreat, length - end_retreat
        inside = (d <= strip_halfwidth) & (t >= t_lo) & (t <= t_hi)
        if t_hi <= t_lo:
            inside[:] = False
        clash = inside & (assigned >= 0)
        if np.any(clash):
            other = int(assigned[np.argmax(clash)])
            raise OverlappingStrips(f"strips of edges {other} and {ei} overlap")
        assigned[inside] = ei
        eff_len = max(t_hi - t_lo, 0.0)
        norm = math.hypot(*e.direction)
        total = float(deficits[inside].sum())
        raw = total / (N * norm * eff_len) if eff_len > 0 else 0.0
        rounded = max(1, round(raw)) if raw > 0.5 else round(raw)
        flagged = abs(raw - rounded) > 0.25 or rounded < 1
        estimates.append(WeightEstimate(ei, raw, int(rounded), int(inside.sum()), bool(flagged)))
    return estimates


def hausdorff_distance(A, B, samples_per_segment=256):
    """Hausdorff distance between finite point sets and/or segment sets.

    Point-to-segment distances are exact; the direction from a segment set is
    approximated by dense sampling along the segments.
    """

    def as_points(S):
        if isinstance(S, np.ndarray):
            if S.size == 0:
                raise EmptySet("empty point set")
            return S.astype(np.float64), None
        S = list(S)
        if not S:
            raise EmptySet("empty set")
        first = S[0]
        if np.shape(first) == (2, 2) or (len(first) == 2 and np.shape(first[0]) == (2,)):
            # segment set: sample
            segs = [np.asarray(s, dtype=np.float64) for s in S]
            ts = np.linspace(0.0, 1.0, samples_per_segment)
            pts = np.concatenate([(1 - ts)[:, None] * s[0] + ts[:, None] * s[1] for s in segs])
            return pts, segs
        return np.asarray(S, dtype=np.float64), None

    pa, segs_a = as_points(A)
    pb, segs_b = as_points(B)

    def directed(P, Q, segs_q):
        if segs_q is not None:
            d = np.full(len(P), np.inf)
            for s in segs_q:
                a, b = s
                v = b - a
                L2 = v @ v
                if L2 == 0:
                    dd = np.hypot(*(P - a).T)
                else:
                    t = np.clip(((P - a) @ v) / L2, 0.0, 1.0)
                    proj = a + t[:, None] * v
                    dd = np.hypot(P[:, 0] - proj[:, 0], P[:, 1] - proj[:, 1])
                d = np.minimum(d, dd)
            return float(d.max())
        # point set target: pairwise
        best = np.full(len(P), np.inf)
        chunk = 4096
        for i in range(0, len(Q), chunk):
            qq = Q[i : i + chunk]
            dd = np.sqrt(((P[:, None, :] - qq[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
            best = np.minimum(best, dd)
        return float(best.max())

    return max(directed(pa, pb, segs_b), directed(pb, pa, segs_a))


def canonical_polynomial(poly, polygon, scale, snap_tol=None):
    """Strip the discrete boundary layer from a fitted polynomial.

    The relaxation leaves an O(1/N), side-dependent additive layer in the
    fitted coefficients, while the limit polynomial vanishes on the polygon
    boundary exactly. Any coefficient within `snap_tol` (default 3/scale) of
    making its monomial vanish at some polygon vertex is snapped to that
    exact value; interior plateau coefficients are left alone.
    """
    if snap_tol is None:
        snap_tol = Fraction(3, scale)
    snap_tol = Fraction(snap_tol)
    out = {}
    for (k, l), a in poly.coeffs.items():
        best = None
        for vx, vy in polygon.vertices:
            target = Fraction(-(k * vx + l * vy))
            d = abs(a - target)
            if d <= snap_tol and (best is None or d < best[0]):
                best = (d, target)
        out[(k, l)] = best[1] if best is not None else a
    return TropicalPolynomial(out)


@dataclass
class ProbeResult:
    monomial: tuple
    raise_breaks: bool
    lower_breaks: bool
    raise_reason: str
    lower_reason: str


@dataclass
class MinimalityReport:
    precondition_ok: bool
    snapped_points: list
    results: list

    @property
    def ok(self):
        return self.precondition_ok and all(r.raise_breaks and r.lower_breaks for r in self.results)


def _admissible(poly, polygon, snapped):
    """Exact admissibility: the polynomial vanishes on the whole boundary,
    its restricted corner locus has valid side labels, and the curve passes
    through every snapped point."""
    lo, hi = boundary_extrema(poly, polygon)
    if lo != 0 or hi != 0:
        return False, f"boundary values span [{lo}, {hi}], not identically 0"
    try:
        curve = clip_to_polygon(corner_locus(poly), polygon)
    except Exception as exc:  # EmptyCurve and friends
        return False, f"corner locus failed: {exc}"
    try:
        solve_side_labels(curve, polygon)
    except Exception as exc:
        return False, f"side labels failed: {exc}"
    report = passes_through(curve, snapped, tolerance=0)
    if not report.ok:
        return False, "curve misses a required point"
    return True, ""


def minimality_probe(poly, polygon, points, step=None, snap_tol=None, scale=None):
    """Single-coefficient raise/lower probe for pointwise minimality.

    The fitted polynomial is first canonicalized (boundary layer stripped);
    each probe point is snapped to the nearest point of its curve when
    within `snap_tol`. The probe passes when raising any single coefficient
    by `step` breaks admissibility, and so does lowering it.
    """
    if scale is None:
        scale = 256
    if step is None:
        step = Fraction(1, 4 * scale)
    if snap_tol is None:
        snap_tol = 2.0 / scale
    step = Fraction(step)

    poly = canonical_polynomial(poly, polygon, scale)
    try:
        curve = clip_to_polygon(corner_locus(poly), polygon)
    except Exception:
        return MinimalityReport(False, [], [])
    snapped = []
    for p in points:
        pf = (Fraction(p[0]), Fraction(p[1]))
        if passes_through(curve, [pf], tolerance=0).ok:
            snapped.append(pf)
            continue
        q = _snap_to_curve(curve, pf)
        if q is None or math.hypot(float(q[0] - pf[0]), float(q[1] - pf[1])) > snap_tol:
            return MinimalityReport(False, [], [])
        snapped.append(q)

    ok0, _ = _admissible(poly, polygon, snapped)
    if not ok0:
        return MinimalityReport(False, snapped, [])

    results = []
    for kl in poly.support:
        up_ok, up_why = _admissible(poly.raised(kl, step), polygon, snapped)
        dn_ok, dn_why = _admissible(poly.raised(kl, -step), polygon, snapped)
        results.append(
            ProbeResult(kl, not up_ok, not dn_ok, up_why or "still admissible", dn_why or "still admissible")
        )
    return MinimalityReport(True, snapped, results)


def _snap_to_curve(curve, p):
    """Exact-rational nearest point of the curve to p (per-edge projection)."""
    best = None
    best_d2 = None
    for e in curve.edges:
        a = curve.vertices[e.tail]
        if e.is_ray:
            continue
        b = curve.vertices[e.head]
        vx, vy = b[0] - a[0], b[1] - a[1]
        L2 = vx * vx + vy * vy
        if L2 == 0:
            q = a
        else:
            t = ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / L2
            t = max(Fraction(0), min(Fraction(1), t))
            q = (a[0] + t * vx, a[1] + t * vy)
        d2 = (q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2
        if best_d2 is None or d2 < best_d2:
            best, best_d2 = q, d2
    return best


@dataclass
class SweepStep:
    scale: int
    error: str = ""
    topplings_total: int = 0
    grains_lost: int = 0
    locus_size: int = 0
    boundary_locus_size: int = 0
    polynomial: object = None
    canonical: object = None
    curve: object = None
    side_labels: dict = field(default_factory=dict)
    weights: list = field(default_factory=list)
    balancing_ok: bool = False
    minimality_ok: bool = False
    scaled_locus: np.ndarray = None
    scaled_odometer: object = None
    decomposition: object = None


@dataclass
class ConvergenceReport:
    steps: list
    hausdorff_to_next: list  # one entry per consecutive scale pair
    sup_odometer_gap: list  # per scale, sup |scaled odometer - fitted F of largest N|


def _interior_locus_split(locus, domain, band=2):
    """Split locus sites into interior and boundary-adjacent (within `band`
    lattice steps of the domain boundary)."""
    mask = domain.mask()
    interior = mask.copy()
    structure = np.ones((3, 3), dtype=bool)
    for _ in range(band):
        interior = ndimage.binary_erosion(interior, structure=structure, border_value=0)
    x0, y0 = domain.grid_origin()
    rows = locus.points[:, 1] - y0
    cols = locus.points[:, 0] - x0
    inside = interior[rows, cols]
    return inside


def _sweep_step(
    polygon,
    config,
    N,
    min_region_size,
    strip_halfwidth,
    probe_step,
    run_probe,
    ceiling,
):
    from .lattice import build_domain
    from .sandpile import DeviationLocus

    step = SweepStep(scale=N)
    try:
        domain = build_domain(polygon, N)
        state = perturb(max_stable(domain), config)
        kwargs = {} if ceiling is None else {"ceiling": ceiling}
        result = relax_queue(state, **kwargs)
        step.topplings_total = result.topplings_total
        step.grains_lost = result.grains_lost
        locus = deviation_set(result)
        inside = _interior_locus_split(locus, domain)
        step.locus_size = int(inside.sum())
        step.boundary_locus_size = int((~inside).sum())
        step.scaled_locus = locus.scaled_points()[inside]
        step.scaled_odometer = scaled_odometer(result)
        decomp = fit_linear_regions(result.odometer, min_region_size=min_region_size)
        step.decomposition = decomp
        poly = assemble_polynomial(decomp, polygon, N)
        step.polynomial = poly
        canon = canonical_polynomial(poly, polygon, N)
        step.canonical = canon
        curve = clip_to_polygon(corner_locus(canon), polygon)
        step.curve = curve
        interior_idx = [
            vi for vi, v in enumerate(curve.vertices) if polygon.contains_interior(v)
        ]
        step.balancing_ok = check_balancing(curve, interior_idx).ok
        omega = solve_side_labels(curve, polygon)
        step.side_labels = dict(omega.side_labels)
        interior_locus = DeviationLocus(
            locus.scale, locus.points[inside], locus.deficits[inside]
        )
        step.weights = estimate_edge_weights(
            interior_locus, curve, strip_halfwidth=strip_halfwidth
        )
        if run_probe:
            report = minimality_probe(
                poly, polygon, list(config.points), step=probe_step, scale=N
            )
            step.minimality_ok = report.ok
    except Exception as exc:
        step.error = f"{type(exc).__name__}: {exc}"
    return step


def convergence_sweep(
    polygon,
    config,
    scales,
    min_region_size=8,
    strip_halfwidth=None,
    probe_step=None,
    run_probe=True,
    ceiling=None,
    jobs=1,
):
    """Full pipeline per scale, with Hausdorff and odometer-gap diagnostics.

    Per-scale failures are recorded in the report instead of aborting the
    sweep; steps for distinct scales may run concurrently with `jobs` > 1.
    """
    if sorted(scales) != list(scales) or len(set(scales)) != len(scales):
        raise ValueError("scales must be strictly increasing")
    args = [
        (polygon, config, N, min_region_size, strip_halfwidth, probe_step, run_probe, ceiling)
        for N in scales
    ]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            steps = list(pool.map(lambda a: _sweep_step(*a), args))
    else:
        steps = [_sweep_step(*a) for a in args]

    hausdorff_to_next = []
    for a, b in zip(steps, steps[1:]):
        if a.scaled_locus is not None and b.scaled_locus is not None and len(a.scaled_locus) and len(b.scaled_locus):
            hausdorff_to_next.append(hausdorff_distance(a.scaled_locus, b.scaled_locus))
        else:
            hausdorff_to_next.append(float("nan"))

    sup_gap = []
    ref = next((s.polynomial for s in reversed(steps) if s.polynomial is not None), None)
    for s in steps:
        if ref is None or s.decomposition is None:
            sup_gap.append(float("nan"))
            continue
        gap = Fraction(0)
        x0, y0 = s.decomposition.origin
        for r in s.decomposition.regions:
            k, l = r.gradient
            for row, col in r.cells[:: max(1, len(r.cells) // 128)]:
                x, y = int(col + x0), int(row + y0)
                v, _ = evaluate(ref, (Fraction(x, s.scale), Fraction(y, s.scale)))
                gap = max(gap, abs(v - Fraction(k * x + l * y + r.offset, s.scale)))
        sup_gap.append(float(gap))
    return ConvergenceReport(steps, hausdorff_to_next, sup_gap)


def report_to_json(report):
    from .tropical import curve_to_json, polynomial_to_json

    out = {"steps": [], "hausdorff_to_next": report.hausdorff_to_next, "sup_odometer_gap": report.sup_odometer_gap}
    for s in report.steps:
        rec = {
            "scale": s.scale,
            "error": s.error,
            "topplings_total": s.topplings_total,
            "grains_lost": s.grains_lost,
            "locus_size": s.locus_size,
            "boundary_locus_size": s.boundary_locus_size,
            "balancing_ok": s.balancing_ok,
            "minimality_ok": s.minimality_ok,
            "side_labels": {str(k): v for k, v in s.side_labels.items()},
            "weights": [
                {
                    "edge": w.edge_index,
                    "raw": w.raw,
                    "rounded": w.rounded,
                    "sites": w.site_count,
                    "flagged": w.flagged,
                }
                for w in s.weights
            ],
        }
        if s.polynomial is not None:
            rec["polynomial"] = polynomial_to_json(s.polynomial)
        if s.curve is not None:
            rec["curve"] = curve_to_json(s.curve)
        out["steps"].append(rec)
    return out
