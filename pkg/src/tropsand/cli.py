"""Command-line entry point: relax | analyze | render | verify.

Exit codes: 0 success, 2 config or validation error, 3 non-termination
guard, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import gridio, render
from .lattice import GeometryError, build_domain, parse_config
from .sandpile import (
    NonTermination,
    deviation_set,
    max_stable,
    perturb,
    relax_naive,
    relax_queue,
    verify_least_action,
)
from .limits import convergence_sweep, report_to_json
from .tropical import curve_from_json, curve_to_json, polynomial_to_json

EXIT_CONFIG = 2
EXIT_NONTERMINATION = 3
EXIT_IO = 4


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SystemExit(_fail(EXIT_IO, f"cannot read config: {exc}"))
    except json.JSONDecodeError as exc:
        raise SystemExit(_fail(EXIT_CONFIG, f"config is not valid JSON: {exc}"))
    try:
        return parse_config(data)
    except (GeometryError, KeyError, TypeError, ValueError) as exc:
        raise SystemExit(_fail(EXIT_CONFIG, f"bad config: {exc}"))


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_relax(args):
    polygon, config, scales = _load_config(args.config)
    if len(scales) != 1:
        return _fail(EXIT_CONFIG, "relax needs exactly one scale")
    if config is None:
        return _fail(EXIT_CONFIG, "relax needs perturbation points")
    N = scales[0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    domain = build_domain(polygon, N)
    state = perturb(max_stable(domain), config)
    t0 = time.time()
    try:
        if args.snapshot_every:
            result = _relax_with_snapshots(state, args.snapshot_every, out, args.ceiling)
        else:
            result = relax_queue(state, ceiling=args.ceiling)
    except NonTermination as exc:
        return _fail(EXIT_NONTERMINATION, str(exc))
    runtime = time.time() - t0
    try:
        gridio.write_grid(out / "final.grid", domain, result.final.heights)
        gridio.write_grid(out / "odometer.grid", domain, result.odometer.counts)
        stats = {
            "scale": N,
            "topplings_total": result.topplings_total,
            "grains_lost": result.grains_lost,
            "runtime_seconds": runtime,
        }
        (out / "stats.json").write_text(json.dumps(stats, indent=2))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write outputs: {exc}")
    print(f"relaxed N={N}: {result.topplings_total} topplings, {result.grains_lost} grains lost")
    return 0


def _relax_with_snapshots(state, every, out, ceiling):
    """Relax in bounded chunks, dumping the height grid after each chunk."""
    from .sandpile import _finish, _relax_queue_core

    domain = state.domain
    heights = state.heights.copy()
    mask = domain.mask()
    counts = np.zeros_like(heights)
    total = 0
    initial_total = state.total()
    snap = 0
    while True:
        chunk, done_count, finished = _relax_queue_core(heights, mask, every)
        counts += chunk
        total += done_count
        if total > ceiling:
            raise NonTermination(f"toppling ceiling exceeded after {total} topplings")
        if finished:
            break
        snap += 1
        gridio.write_grid(out / f"snapshot-{snap:04d}.grid", domain, heights)
    return _finish(domain, heights, counts, total, True, initial_total)


def cmd_analyze(args):
    polygon, config, scales = _load_config(args.config)
    if config is None:
        return _fail(EXIT_CONFIG, "analyze needs perturbation points")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    strip = Fraction(args.strip_halfwidth) if args.strip_halfwidth else None
    step = Fraction(args.probe_step) if args.probe_step else None
    report = convergence_sweep(
        polygon,
        config,
        scales,
        strip_halfwidth=float(strip) if strip is not None else None,
        probe_step=step,
        ceiling=args.ceiling,
        jobs=args.jobs,
    )
    try:
        (out / "report.json").write_text(json.dumps(report_to_json(report), indent=2))
        for s in report.steps:
            if s.polynomial is not None:
                (out / f"polynomial-{s.scale}.json").write_text(
                    json.dumps(polynomial_to_json(s.polynomial), indent=2)
                )
            if s.curve is not None:
                (out / f"curve-{s.scale}.json").write_text(
                    json.dumps(curve_to_json(s.curve), indent=2)
                )
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write outputs: {exc}")
    failures = [s.scale for s in report.steps if s.error]
    for s in report.steps:
        status = s.error if s.error else (
            f"locus={s.locus_size} balancing={'ok' if s.balancing_ok else 'FAIL'} "
            f"labels={s.side_labels} weights={[round(w.raw, 3) for w in s.weights]}"
        )
        print(f"N={s.scale}: {status}")
    if report.hausdorff_to_next:
        print("hausdorff_to_next:", [round(h, 5) for h in report.hausdorff_to_next])
    if len(failures) == len(scales):
        return _fail(EXIT_CONFIG, "every scale failed")
    return 0


def cmd_render(args):
    try:
        domain, values = gridio.read_grid(args.grid)
    except (OSError, gridio.GridFormatError) as exc:
        return _fail(EXIT_CONFIG, f"cannot read grid: {exc}")
    curve = None
    if args.curve:
        try:
            curve = curve_from_json(json.loads(Path(args.curve).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            return _fail(EXIT_CONFIG, f"cannot read curve: {exc}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.grid).stem
    try:
        render.render_ppm(out / f"{stem}.ppm", domain, values, palette=args.palette)
        counts = render.render_svg(
            out / f"{stem}.svg",
            domain,
            values,
            palette=args.palette,
            curve=curve,
            weight_labels=args.weight_labels,
        )
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write image: {exc}")
    print(f"rendered {stem}: marks {counts}")
    return 0


def cmd_verify(args):
    """Property suite on a config: oracle agreement, least action, mass
    balance, and (when analysis succeeds) exact balancing."""
    polygon, config, scales = _load_config(args.config)
    if config is None:
        return _fail(EXIT_CONFIG, "verify needs perturbation points")
    N = scales[0]
    domain = build_domain(polygon, N)
    state = perturb(max_stable(domain), config)
    try:
        a = relax_naive(state, ceiling=args.ceiling)
        b = relax_queue(state, ceiling=args.ceiling)
    except NonTermination as exc:
        return _fail(EXIT_NONTERMINATION, str(exc))
    checks = {}
    checks["abelian_final"] = bool(np.array_equal(a.final.heights, b.final.heights))
    checks["abelian_odometer"] = bool(np.array_equal(a.odometer.counts, b.odometer.counts))
    checks["mass_balance"] = (
        state.total() == b.final.total() + b.grains_lost
    )
    la = verify_least_action(state, b)
    checks["least_action_identity"] = la.identity_ok
    checks["final_stable"] = la.stable_ok
    checks["decrement_probe"] = la.decrement_ok
    locus = deviation_set(b)
    checks["deviation_nonempty"] = len(locus.points) > 0
    report = convergence_sweep(polygon, config, [N], run_probe=False, ceiling=args.ceiling)
    s = report.steps[0]
    checks["fit_and_labels"] = not s.error
    if not s.error:
        checks["balancing"] = s.balancing_ok
    ok = all(checks.values())
    for name, val in checks.items():
        print(f"{'PASS' if val else 'FAIL'}  {name}")
    return 0 if ok else EXIT_CONFIG


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="tropsand",
        description="Sandpile relaxation on lattice polygons with tropical scaling-limit analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--ceiling", type=int, default=10**12, help="toppling ceiling")

    p_relax = sub.add_parser("relax", help="relax one perturbed state, write grids")
    common(p_relax)
    p_relax.add_argument("--snapshot-every", type=int, default=0, metavar="K",
                         help="dump a height grid every K topplings")
    p_relax.set_defaults(func=cmd_relax)

    p_an = sub.add_parser("analyze", help="run the scaling sweep and fits")
    common(p_an)
    p_an.add_argument("--jobs", type=int, default=1, help="concurrent scales")
    p_an.add_argument("--strip-halfwidth", default=None, help="weight strip halfwidth")
    p_an.add_argument("--probe-step", default=None, help="minimality probe step")
    p_an.set_defaults(func=cmd_analyze)

    p_r = sub.add_parser("render", help="render a grid file to PPM and SVG")
    p_r.add_argument("--grid", required=True, help="grid file from relax")
    p_r.add_argument("--curve", default=None, help="curve JSON to overlay")
    p_r.add_argument("--weight-labels", action="store_true", help="label edge weights")
    p_r.add_argument("--palette", default="mono", choices=sorted(render.PALETTES))
    p_r.add_argument("--out", default="out", help="output directory")
    p_r.set_defaults(func=cmd_render)

    p_v = sub.add_parser("verify", help="run the property suite on a config")
    common(p_v)
    p_v.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
