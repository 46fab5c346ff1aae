"""Sandpile states, legal topplings, relaxation with odometer tracking.

Two independent relaxers are provided: a raster-order oracle and a FIFO
worklist engine with bulk topplings. By the abelian property both must yield
identical final states and odometers; the suite checks this exhaustively.
Heights and odometers live on dense bounding-box grids as int64 (odometers
grow like N * diameter, which overflows 32 bits near N ~ 2000).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .lattice import NotASite, neighbors

DEFAULT_CEILING = 10**12


class IllegalToppling(ValueError):
    pass


class NonTermination(RuntimeError):
    """Raised when a relaxation exceeds its toppling ceiling.

    Relaxations on a finite site set always terminate, so hitting the guard
    signals a bug rather than a long run.
    """


@dataclass
class SandState:
    """Integer height field over the sites of a scaled domain.

    `heights` is dense over the bounding box (zero off-domain); `domain.mask()`
    tells which cells are sites.
    """

    domain: object
    heights: np.ndarray

    def copy(self):
        return SandState(self.domain, self.heights.copy())

    def site_value(self, v):
        x0, y0 = self.domain.grid_origin()
        if not self.domain.contains(v):
            raise NotASite(f"{v} is not a site")
        return int(self.heights[v[1] - y0, v[0] - x0])

    def is_stable(self):
        return bool(np.all(self.heights[self.domain.mask()] <= 3))

    def total(self):
        return int(self.heights[self.domain.mask()].sum())


@dataclass
class Odometer:
    """Per-site toppling counts; implicitly zero outside the domain."""

    domain: object
    counts: np.ndarray

    def site_value(self, v):
        x0, y0 = self.domain.grid_origin()
        if not self.domain.contains(v):
            raise NotASite(f"{v} is not a site")
        return int(self.counts[v[1] - y0, v[0] - x0])

    def total(self):
        return int(self.counts[self.domain.mask()].sum())


@dataclass
class RelaxationResult:
    final: SandState
    odometer: Odometer
    topplings_total: int
    grains_lost: int


@dataclass
class DeviationLocus:
    """Sites of the relaxed state holding fewer than 3 grains.

    `points` is an (n, 2) integer array of lattice sites, `deficits` the
    per-site values 3 - height (> 0).
    """

    scale: int
    points: np.ndarray
    deficits: np.ndarray

    def scaled_points(self):
        """Site coordinates divided by the scale, as floats."""
        return self.points.astype(np.float64) / self.scale


def max_stable(domain):
    """The state with height 3 at every site."""
    heights = np.zeros(domain.grid_shape(), dtype=np.int64)
    heights[domain.mask()] = 3
    return SandState(domain, heights)


def perturb(state, config):
    """Add one grain at each rounded perturbation point."""
    out = state.copy()
    x0, y0 = state.domain.grid_origin()
    for sx, sy in config.rounded_sites(state.domain):
        out.heights[sy - y0, sx - x0] += 1
    return out


def topple(state, v, legal=True):
    """Single toppling at v: v loses 4 grains, in-domain neighbors gain 1.

    Returns (new state, grains lost through missing neighbors). With
    legal=True the site must hold at least 4 grains.
    """
    h = state.site_value(v)
    if legal and h < 4:
        raise IllegalToppling(f"site {v} holds {h} < 4 grains")
    present, missing = neighbors(v, state.domain)
    out = state.copy()
    x0, y0 = state.domain.grid_origin()
    out.heights[v[1] - y0, v[0] - x0] -= 4
    for wx, wy in present:
        out.heights[wy - y0, wx - x0] += 1
    return out, missing


@njit(cache=True, nogil=True)
def _relax_naive_core(heights, mask, ceiling):
    rows, cols = heights.shape
    counts = np.zeros((rows, cols), dtype=np.int64)
    total = 0
    while True:
        toppled = False
        for r in range(rows):
            for c in range(cols):
                if mask[r, c] and heights[r, c] >= 4:
                    heights[r, c] -= 4
                    counts[r, c] += 1
                    total += 1
                    if r + 1 < rows and mask[r + 1, c]:
                        heights[r + 1, c] += 1
                    if r - 1 >= 0 and mask[r - 1, c]:
                        heights[r - 1, c] += 1
                    if c + 1 < cols and mask[r, c + 1]:
                        heights[r, c + 1] += 1
                    if c - 1 >= 0 and mask[r, c - 1]:
                        heights[r, c - 1] += 1
                    toppled = True
                    if total > ceiling:
                        return counts, total, False
        if not toppled:
            return counts, total, True


@njit(cache=True, nogil=True)
def _relax_queue_core(heights, mask, ceiling):
    rows, cols = heights.shape
    counts = np.zeros((rows, cols), dtype=np.int64)
    in_queue = np.zeros((rows, cols), dtype=np.bool_)
    # One slot per site suffices: the in_queue flag keeps entries unique.
    cap = rows * cols + 1
    queue_r = np.empty(cap, dtype=np.int32)
    queue_c = np.empty(cap, dtype=np.int32)
    head = 0
    tail = 0
    for r in range(rows):
        for c in range(cols):
            if mask[r, c] and heights[r, c] >= 4:
                queue_r[tail] = r
                queue_c[tail] = c
                tail = (tail + 1) % cap
                in_queue[r, c] = True
    total = 0
    while head != tail:
        r = queue_r[head]
        c = queue_c[head]
        head = (head + 1) % cap
        in_queue[r, c] = False
        t = heights[r, c] // 4
        if t <= 0:
            continue
        heights[r, c] -= 4 * t
        counts[r, c] += t
        total += t
        if r + 1 < rows and mask[r + 1, c]:
            heights[r + 1, c] += t
            if heights[r + 1, c] >= 4 and not in_queue[r + 1, c]:
                queue_r[tail] = r + 1
                queue_c[tail] = c
                tail = (tail + 1) % cap
                in_queue[r + 1, c] = True
        if r - 1 >= 0 and mask[r - 1, c]:
            heights[r - 1, c] += t
            if heights[r - 1, c] >= 4 and not in_queue[r - 1, c]:
                queue_r[tail] = r - 1
                queue_c[tail] = c
                tail = (tail + 1) % cap
                in_queue[r - 1, c] = True
        if c + 1 < cols and mask[r, c + 1]:
            heights[r, c + 1] += t
            if heights[r, c + 1] >= 4 and not in_queue[r, c + 1]:
                queue_r[tail] = r
                queue_c[tail] = c + 1
                tail = (tail + 1) % cap
                in_queue[r, c + 1] = True
        if c - 1 >= 0 and mask[r, c - 1]:
            heights[r, c - 1] += t
            if heights[r, c - 1] >= 4 and not in_queue[r, c - 1]:
                queue_r[tail] = r
                queue_c[tail] = c - 1
                tail = (tail + 1) % cap
                in_queue[r, c - 1] = True
        if total > ceiling:
            return counts, total, False
    return counts, total, True


def _missing_neighbor_grid(mask):
    """Per-site count of neighbors outside the domain."""
    padded = np.pad(mask, 1)
    deg = (
        padded[2:, 1:-1].astype(np.int64)
        + padded[:-2, 1:-1]
        + padded[1:-1, 2:]
        + padded[1:-1, :-2]
    )
    return np.where(mask, 4 - deg, 0)


def _finish(domain, heights, counts, total, ok, initial_total):
    if not ok:
        raise NonTermination(f"toppling ceiling exceeded after {total} topplings")
    final = SandState(domain, heights)
    odo = Odometer(domain, counts)
    missing = _missing_neighbor_grid(domain.mask())
    lost = int((counts * missing).sum())
    assert initial_total == final.total() + lost, "mass balance violated"
    return RelaxationResult(final, odo, int(total), lost)


def relax_naive(state, ceiling=DEFAULT_CEILING):
    """Oracle relaxer: fixed row-major scans, one toppling per unstable site."""
    initial_total = state.total()
    heights = state.heights.copy()
    counts, total, ok = _relax_naive_core(heights, state.domain.mask(), ceiling)
    return _finish(state.domain, heights, counts, total, ok, initial_total)


def relax_queue(state, ceiling=DEFAULT_CEILING):
    """Worklist relaxer: FIFO queue, bulk topplings of floor(h/4) at a pop."""
    initial_total = state.total()
    heights = state.heights.copy()
    counts, total, ok = _relax_queue_core(heights, state.domain.mask(), ceiling)
    return _finish(state.domain, heights, counts, total, ok, initial_total)


def laplacian_grid(counts, mask):
    """Discrete Laplacian of a site function on the dense grid.

    The function is extended by zero outside the domain, so off-domain
    neighbors contribute nothing; values off-domain in the result are zeroed.
    """
    f = np.where(mask, counts, 0).astype(np.int64)
    padded = np.pad(f, 1)
    lap = (
        padded[2:, 1:-1]
        + padded[:-2, 1:-1]
        + padded[1:-1, 2:]
        + padded[1:-1, :-2]
        - 4 * f
    )
    return np.where(mask, lap, 0)


def discrete_laplacian(odometer, v):
    """-4 f(v) + sum of f over the four lattice neighbors (zero off-domain)."""
    if not odometer.domain.contains(v):
        raise NotASite(f"{v} is not a site")
    x0, y0 = odometer.domain.grid_origin()
    lap = laplacian_grid(odometer.counts, odometer.domain.mask())
    return int(lap[v[1] - y0, v[0] - x0])


@dataclass
class LeastActionReport:
    identity_ok: bool
    stable_ok: bool
    decrement_ok: bool
    decrement_failures: list

    @property
    def all_ok(self):
        return self.identity_ok and self.stable_ok and self.decrement_ok


def verify_least_action(initial, result):
    """Check the toppling-function characterization of a relaxation.

    (a) final = initial + Laplacian(odometer) site-wise; (b) final stable;
    (c) for each site v with a positive count, decrementing the odometer
    there leaves a function that is no longer admissible (some resulting
    height exceeds 3, or a count goes negative). For a genuine odometer (c)
    holds trivially; it catches hand-edited counts.
    """
    domain = initial.domain
    mask = domain.mask()
    counts = result.odometer.counts
    lap = laplacian_grid(counts, mask)
    reached = initial.heights + lap
    identity_ok = bool(np.array_equal(np.where(mask, reached, 0), np.where(mask, result.final.heights, 0)))
    stable_ok = result.final.is_stable() and bool(np.all(result.final.heights[mask] >= 0))

    # Decrement probe. psi = initial + Lap(counts); removing one toppling at v
    # turns psi(v) into psi(v) + 4 and psi(w) into psi(w) - 1 at in-domain
    # neighbors. Membership of counts - delta_v requires psi(v) + 4 <= 3,
    # psi(w) <= 4 at neighbors, psi <= 3 elsewhere, counts(v) >= 1.
    psi = np.where(mask, initial.heights + lap, 0)
    failures = []
    candidates = np.argwhere(mask & (counts > 0) & (psi <= -1))
    if candidates.size:
        over = np.argwhere(mask & (psi > 3))
        over_set = {tuple(u) for u in over}
        for r, c in candidates:
            nbrs = [
                (r + 1, c),
                (r - 1, c),
                (r, c + 1),
                (r, c - 1),
            ]
            nbrs = [
                (rr, cc)
                for rr, cc in nbrs
                if 0 <= rr < mask.shape[0] and 0 <= cc < mask.shape[1] and mask[rr, cc]
            ]
            if any(psi[rr, cc] > 4 for rr, cc in nbrs):
                continue
            if over_set - {(r, c)} - set(nbrs):
                continue
            failures.append((int(r), int(c)))
    decrement_ok = not failures
    return LeastActionReport(identity_ok, stable_ok, decrement_ok, failures)


def deviation_set(result):
    """Sites of the final state with height below 3, with their deficits."""
    domain = result.final.domain
    mask = domain.mask()
    heights = result.final.heights
    x0, y0 = domain.grid_origin()
    where = np.argwhere(mask & (heights < 3))
    points = np.empty_like(where)
    points[:, 0] = where[:, 1] + x0
    points[:, 1] = where[:, 0] + y0
    deficits = 3 - heights[where[:, 0], where[:, 1]]
    return DeviationLocus(domain.scale, points, deficits.astype(np.int64))
