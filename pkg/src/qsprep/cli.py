"""Command-line driver: ``qsprep --mode pipeline --n 256,1024 --k 4 --trials 20``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bench import MODES, ExperimentConfig, GeneratorSpec, render_csv, run_experiment, summarize_fits
from .errors import ConfigError, WeightsFormatError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("qsprep")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsprep", description="Query-counting simulator for multi-copy state preparation.")
    parser.add_argument("--mode", required=True, choices=MODES)
    parser.add_argument("--n", type=_int_list, default=[], help="comma list of dimensions N")
    parser.add_argument("--k", type=_int_list, default=[1], help="comma list of copy counts K")
    parser.add_argument("--delta", type=float, default=0.1, help="top-K failure probability")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--weights", help="weights file: one non-negative number per line")
    source.add_argument("--gen", help="generator: uniform, random, zipf[:s], binary[:m], single-spike")
    parser.add_argument("--out", help="CSV output path (stdout if omitted)")
    parser.add_argument("--fit", action="store_true", help="emit exponent fits as JSON")
    parser.add_argument("--fit-out", help="where to write the fit JSON (default: <out>.fit.json or stdout)")
    parser.add_argument("--timing", action="store_true", help="fill the wall_ms column (breaks byte-identical reruns)")
    parser.add_argument("--aa-growth", type=float, default=1.2, help="iteration-bound growth factor of the schedules")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _threads() -> int:
    raw = os.environ.get("QSPREP_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"QSPREP_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError("QSPREP_THREADS must be at least 1")
    return min(value, os.cpu_count() or 1)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = ExperimentConfig(
            mode=args.mode,
            Ns=args.n,
            Ks=args.k,
            delta=args.delta,
            trials=args.trials,
            seed=args.seed,
            weights_path=args.weights,
            generator=GeneratorSpec.parse(args.gen) if args.gen else None,
            out=args.out,
            timing=args.timing,
            growth=args.aa_growth,
            threads=_threads(),
        )
        config.validate()
    except (ConfigError, WeightsFormatError, OSError) as exc:
        print(f"qsprep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        records = run_experiment(config)
    except Exception as exc:  # noqa: BLE001 - any failure inside a run maps to one exit code
        log.debug("run failed", exc_info=True)
        print(f"qsprep: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    log.info("wrote %d records", len(records))
    if args.out is None:
        sys.stdout.write(render_csv(records))
    if args.fit:
        summary = json.dumps(summarize_fits(records), indent=2, sort_keys=True)
        target = args.fit_out or (str(Path(args.out).with_suffix(".fit.json")) if args.out else None)
        if target is None:
            print(summary)
        else:
            Path(target).write_text(summary + "\n", encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
