"""Command-line entry point: ``expdiff <stage> --config run.json``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, ExpDiffError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

COMMANDS = ("gen-data", "train-score", "train-inference", "sample-posterior", "mcmc", "benchmark", "report")


def build_parser():
    parser = argparse.ArgumentParser(prog="expdiff", description=__doc__)
    parser.add_argument("--print-schema", action="store_true", help="print the run-config JSON schema and exit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--out", help="override the output file of this stage")
        if name in ("sample-posterior", "benchmark"):
            p.add_argument("--workers", type=int, default=None,
                           help="sampling threads (default: EXPDIFF_THREADS or 1)")
            p.add_argument("--clip-total", action="store_true",
                           help="clip the total score instead of the likelihood term")
        if name == "benchmark":
            p.add_argument("--no-train", action="store_true", help="reuse existing weight files")
    return parser


def _with_overrides(cfg, args, path_key=None):
    paths = cfg.paths
    if getattr(args, "out", None) and path_key:
        paths = paths.model_copy(update={path_key: args.out})
    sampler = cfg.sampler
    if getattr(args, "clip_total", False):
        sampler = sampler.model_copy(update={"clip_total": True})
    return cfg.model_copy(update={"paths": paths, "sampler": sampler})


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    from .bench import config as bconf
    from .bench import run as brun

    if args.print_schema:
        print(bconf.schema_json())
        return EXIT_OK
    if args.command is None:
        build_parser().print_usage(sys.stderr)
        return EXIT_CONFIG
    cfg = bconf.load_config(args.config)
    cmd = args.command
    if cmd == "gen-data":
        brun.run_gen(_with_overrides(cfg, args, "observations"))
    elif cmd == "train-score":
        brun.run_train_score(_with_overrides(cfg, args, "score_weights"))
    elif cmd == "train-inference":
        brun.run_train_inference(_with_overrides(cfg, args, "infer_weights"))
    elif cmd == "sample-posterior":
        brun.run_sample(_with_overrides(cfg, args, "samples"), args.workers)
    elif cmd == "mcmc":
        brun.run_mcmc(_with_overrides(cfg, args, "mcmc_samples"))
    elif cmd == "benchmark":
        metrics = brun.run_benchmark(_with_overrides(cfg, args, "metrics"), not args.no_train, args.workers)
        for k, v in metrics.summary.items():
            print(f"{k}: {v}")
    elif cmd == "report":
        brun.run_report(_with_overrides(cfg, args, "metrics"))
    return EXIT_OK


def main(argv=None):
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ExpDiffError as exc:
        # domain errors surfacing here come from bad inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
