"""``batchqn-bench``: run a benchmark problem and print its metric table.

Without any of ``--width``, ``--polyfit-order``, ``--dg-points`` or
``--legacy-interface`` the problem's default variant set is run (baseline plus
W4 and W8 with and without polyfit for ``curve`` and ``rosenbrock``, coupled vs split for
``expectation``).  With any of them a single ``custom`` variant is run.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import (PROBLEM_SPECS, VARIANTS, BenchConfig, BenchError, compare, run_bench,
                    to_csv, to_markdown, variants_by_name)
from .core import ConfigurationError
from .solver import LINESEARCH_NAMES


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="batchqn-bench", description=__doc__.split("\n\n")[0])
    ap.add_argument("--problem", choices=sorted(PROBLEM_SPECS), default="curve")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--width", type=int, choices=(1, 4, 8))
    ap.add_argument("--polyfit-order", type=int)
    ap.add_argument("--dg-points", type=int, choices=(0, 2, 4, 6, 8))
    ap.add_argument("--dg-coeffs", type=lambda s: tuple(float(v) for v in s.split(",")),
                    help="comma-separated FD weights, length must equal --dg-points")
    ap.add_argument("--h", type=float, help="FD step (the delta parameter)")
    ap.add_argument("--eps-rel", type=float)
    ap.add_argument("--eps-abs", type=float)
    ap.add_argument("--max-iter", type=int)
    ap.add_argument("--linesearch", choices=sorted(LINESEARCH_NAMES))
    ap.add_argument("--legacy-interface", type=_bool, metavar="BOOL")
    ap.add_argument("--no-ls-batching", action="store_true",
                    help="single-point trials; batch width only feeds FD stencils")
    ap.add_argument("--mode", choices=("limited", "dense"))
    ap.add_argument("--variants", help=f"comma-separated presets from: {', '.join(VARIANTS)}")
    ap.add_argument("--paths", type=int, help="Monte Carlo paths (expectation problem)")
    ap.add_argument("--format", choices=("csv", "markdown"), default="csv")
    ap.add_argument("--repetitions", type=int, default=1)
    ap.add_argument("--compare", metavar="LABEL",
                    help="also print ratios of LABEL's row over every other row")
    ap.add_argument("-o", "--output", help="write the table here instead of stdout")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args: argparse.Namespace) -> BenchConfig:
    from .solver import Mode

    overrides = {}
    for flag, key in (("h", "h"), ("eps_rel", "eps_rel"), ("eps_abs", "eps_abs"),
                      ("max_iter", "max_iterations"), ("linesearch", "linesearch"),
                      ("dg_coeffs", "dg_coeffs")):
        v = getattr(args, flag)
        if v is not None:
            overrides[key] = v
    if args.mode:
        overrides["mode"] = Mode(args.mode)

    custom = {}
    for flag, key in (("width", "batch"), ("polyfit_order", "polyfit_order"),
                      ("dg_points", "dg_points"), ("legacy_interface", "legacy_interface")):
        v = getattr(args, flag)
        if v is not None:
            custom[key] = v
    if args.no_ls_batching:
        custom["ls_batching"] = False

    variants = None
    if args.variants:
        variants = variants_by_name([v.strip() for v in args.variants.split(",") if v.strip()])
        if custom:
            variants = {label: {**s, **custom} for label, s in variants.items()}
    elif custom:
        variants = {"custom": custom}

    options = {}
    if args.paths is not None:
        options["paths"] = args.paths
    return BenchConfig(problem=args.problem, seed=args.seed, overrides=overrides,
                       variants=variants, repetitions=args.repetitions, fmt=args.format,
                       problem_options=options)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except (BenchError, ConfigurationError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"batchqn-bench: error: {exc}", file=sys.stderr)
        return 2

    table = run_bench(config)
    text = to_csv(table) if config.fmt == "csv" else to_markdown(table)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if args.compare:
        try:
            base = table.row(args.compare)
        except KeyError:
            print(f"batchqn-bench: error: no row labelled {args.compare!r}", file=sys.stderr)
            return 2
        for row in table.rows:
            if row is not base:
                for line in compare(base, row).lines():
                    print(line)

    if table.failures:
        print(f"batchqn-bench: line search failed for {', '.join(table.failures)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
