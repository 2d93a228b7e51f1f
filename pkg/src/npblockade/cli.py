"""Command-line entry point: ``npblockade {sweep,point,conditions,spectrum} <config>``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import replace

from . import sweep as sw
from .errors import BlockadeError, ConfigError, UnsupportedModelError

log = logging.getLogger("npblockade")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
INVALID_FRACTION_LIMIT = 0.10


def _orders(text: str) -> tuple[int, ...]:
    try:
        orders = tuple(sorted({int(s) for s in text.split(",") if s.strip()}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not orders or not set(orders) <= sw.ALLOWED_ORDERS:
        raise argparse.ArgumentTypeError("orders must be a subset of 2..6")
    return orders


def _load(args) -> sw.SweepSpec:
    spec = sw.load_config(args.config)
    if args.dim is not None:
        if args.dim < 2:
            raise ConfigError("--dim", "must be >= 2")
        try:
            spec = spec.with_dim(args.dim)
        except BlockadeError as exc:
            raise ConfigError("--dim", str(exc)) from None
    if args.orders is not None:
        spec = replace(spec, orders=args.orders)
    return spec


def _cmd_sweep(args) -> int:
    spec = _load(args)
    out = args.out or spec.output_path
    if out is None:
        raise ConfigError("output.path", "no output path: give --out or output.path")
    t0 = time.perf_counter()
    result = sw.run_sweep(spec, workers=args.workers)
    path = sw.emit_csv(result, out)
    bad = result.invalid_fraction()
    print(f"wrote {len(result.rows)} points x {len(result.modes)} mode(s) to {path} "
          f"in {time.perf_counter() - t0:.1f}s; invalid rows: {bad:.1%}")
    for n in spec.orders:
        if n + 1 in spec.orders:
            for w in sw.find_blockade_windows(result, n):
                print(f"  {n}-photon blockade, mode {w.mode}: "
                      f"{spec.sweep.parameter} in [{w.start:.4g}, {w.stop:.4g}], peak g({n}) at {w.peak:.4g}")
    if bad > INVALID_FRACTION_LIMIT:
        print(f"error: {bad:.1%} of rows failed numerical checks", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_point(args) -> int:
    spec = _load(args)
    params = spec.model
    if args.value is not None:
        if spec.sweep is None:
            raise ConfigError("--value", "config has no sweep.parameter to set")
        params = spec.params_at(args.value)
    row = sw.solve_point(params, spec.orders, spec.max_dim, spec.tail_tol)
    if row.error and not row.reports:
        print(f"error: {row.error}", file=sys.stderr)
        return EXIT_NUMERICAL
    for rep in row.reports.values():
        print(f"mode {rep.mode}: <n> = {rep.mean_n:.6g}, Fock tail = {rep.fock_tail:.3g}, dim = {row.dims[rep.mode]}")
        for n, g in sorted(rep.g.items()):
            lg = "undefined" if math.isnan(g) else f"{rep.log_g(n): .6f}"
            print(f"  g({n})(0) = {g:.6g}   ln g = {lg}")
    print(f"residual = {row.residual:.3e}, gap ratio = {row.gap_ratio:.3e}, valid = {row.valid}")
    if not row.valid:
        print(f"warning: {row.error}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_conditions(args) -> int:
    spec = _load(args)
    try:
        rows = sw.conditions(spec.model)
    except UnsupportedModelError as exc:
        print(f"not implemented: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(sw.format_conditions(rows))
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    spec = _load(args)
    print(f"{'N':>3} {'j':>3} {'numerical':>16} {'analytic':>16} {'|diff|':>10}")
    for N, j, w, a in sw.spectrum(spec.model, args.levels):
        if a is None:
            print(f"{N:>3} {j:>3} {w:>16.10f} {'-':>16} {'-':>10}")
        else:
            print(f"{N:>3} {j:>3} {w:>16.10f} {a:>16.10f} {abs(w - a):>10.2e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npblockade",
        description="n-photon blockade under n-photon parametric drives.",
        epilog="bundled configs: " + ", ".join(sw.bundled_configs()),
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="config file, or the name of a bundled config")
    common.add_argument("--dim", type=int, help="override the initial Fock truncation of every cavity")
    common.add_argument("--orders", type=_orders, help="correlation orders to record, e.g. 2,3,4,5")

    p = sub.add_parser("sweep", parents=[common], help="run a parameter sweep and write CSV")
    p.add_argument("--out", help="CSV output path (defaults to output.path)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("point", parents=[common], help="solve a single parameter point")
    p.add_argument("--value", type=float, help="value of the swept parameter")
    p.set_defaults(func=_cmd_point)

    p = sub.add_parser("conditions", parents=[common], help="print the analytic blockade conditions")
    p.set_defaults(func=_cmd_conditions)

    p = sub.add_parser("spectrum", parents=[common], help="numerical vs analytic undriven spectrum")
    p.add_argument("--levels", type=int, default=3, help="highest excitation manifold to list")
    p.set_defaults(func=_cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
