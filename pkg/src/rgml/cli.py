"""Command-line entry point for the cross-validated k-NN benchmark."""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import METHODS, ExperimentConfig, cross_validate, write_record
from .errors import InvalidInput, NotPositiveDefinite


def _unit_interval(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rgml-bench",
        description="Cross-validated Mahalanobis k-NN with learned metrics.",
    )
    ap.add_argument("--dataset", required=True, help="CSV file, one sample per row")
    ap.add_argument("--label-col", default="-1",
                    help="label column: zero-based index or header name (default: last)")
    ap.add_argument("--method", choices=METHODS, default="rgml_gaussian")
    ap.add_argument("--gmml-t", type=_unit_interval, default=0.5,
                    help="geodesic parameter for --method gmml")
    ap.add_argument("--lambda", dest="lam", type=float, default=0.05)
    ap.add_argument("--mislabel-rate", type=float, default=0.0)
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--train-fraction", type=float, default=0.5)
    ap.add_argument("--k", dest="k_neighbors", type=int, default=5)
    ap.add_argument("--pairs-factor", type=int, default=75)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--standardize", action="store_true",
                    help="z-score features with training-set statistics")
    ap.add_argument("--workers", type=int, default=1, help="parallel processes")
    ap.add_argument("--no-timing", action="store_true",
                    help="report wall_time_s as null for reproducible output")
    ap.add_argument("--trace-out", help="solver trace CSV (single-repeat RGML runs)")
    ap.add_argument("--out", help="JSON result file (default: stdout)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run_cli(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    try:
        config = ExperimentConfig(
            dataset=args.dataset,
            label_col=args.label_col,
            method=args.method,
            gmml_t=args.gmml_t,
            lam=args.lam,
            mislabel_rate=args.mislabel_rate,
            repeats=args.repeats,
            train_fraction=args.train_fraction,
            k_neighbors=args.k_neighbors,
            pairs_factor=args.pairs_factor,
            seed=args.seed,
            standardize=args.standardize,
        )
    except InvalidInput as exc:
        ap.print_usage(sys.stderr)
        print(f"{ap.prog}: error: {exc}", file=sys.stderr)
        return 2
    if args.trace_out and (config.repeats != 1 or not config.method.startswith("rgml")):
        ap.print_usage(sys.stderr)
        print(f"{ap.prog}: error: --trace-out needs --repeats 1 and an rgml method",
              file=sys.stderr)
        return 2

    try:
        record, traces = cross_validate(
            config, workers=args.workers, timing=not args.no_timing, return_traces=True
        )
    except (InvalidInput, NotPositiveDefinite, OSError) as exc:
        print(f"{ap.prog}: {exc}", file=sys.stderr)
        return 1
    if args.trace_out:
        if traces[0] is None:
            print(f"{ap.prog}: the single repeat failed; no trace written", file=sys.stderr)
            return 1
        traces[0].to_csv(args.trace_out)
    write_record(record, args.out)
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
