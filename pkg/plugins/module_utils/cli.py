# -*- coding: utf-8 -*-
"""
``msgcn`` command-line entry point.

Subcommands mirror the collection's modules: synth, train, crossval, segment,
evaluate, stats and inspect. Flags override values from ``--config``; the
result of each command is printed as JSON on stdout. Exit codes: 0 success,
2 validation error, 3 numerical failure, 4 leakage guard, 1 anything else.
"""

from __future__ import absolute_import, division, print_function

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from ansible.module_utils._text import to_native

from .config import VARIANTS, build_run_config
from .exceptions import EXIT_FAILURE, EXIT_OK, MsgcnError
from .metrics import DEFAULT_THRESHOLDS
from .pipeline import (
    cmd_crossval,
    cmd_evaluate,
    cmd_inspect,
    cmd_segment,
    cmd_stats,
    cmd_synth,
    cmd_train,
)

__metaclass__ = type

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run configuration file")
    parser.add_argument("--seed", type=int, help="global random seed")
    parser.add_argument("--jobs", type=int, help="folds or files processed concurrently")
    parser.add_argument("--precision", choices=["float64", "float32"])


def _add_model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--variant", choices=list(VARIANTS))
    parser.add_argument("--stages", type=int, dest="num_stages")
    parser.add_argument("--layers", type=int, dest="layers_per_stage")
    parser.add_argument("--channels", type=int)
    parser.add_argument("--causal", action="store_true", help="use causal temporal convolutions")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--lr", type=float, dest="learning_rate")
    parser.add_argument("--lambda", type=float, dest="smoothing_weight")
    parser.add_argument("--tau", type=float)
    parser.add_argument("--graph", help="skeleton graph JSON (default marker set when omitted)")


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", "-o", required=True, help="output directory")
    parser.add_argument("--force", action="store_true", help="reuse a non-empty output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msgcn", description="Freezing-of-gait segmentation with MS-GCN"
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_run_options(synth)
    _add_output(synth)
    synth.add_argument("--subjects", type=int)
    synth.add_argument("--trials", type=int, dest="trials_per_subject")
    synth.add_argument("--fog-rate", type=float)
    synth.add_argument("--noise", type=float)
    synth.add_argument(
        "--enrichment-subject",
        action="append",
        default=[],
        dest="enrichment_subjects",
        help="subject id used only for training (repeatable)",
    )

    for name, text in (("train", "train one model"), ("crossval", "leave-one-subject-out run")):
        command = sub.add_parser(name, help=text)
        _add_run_options(command)
        _add_model_options(command)
        _add_output(command)
        command.add_argument("--manifest", required=True, help="dataset manifest or directory")

    segment = sub.add_parser("segment", help="segment one trial with a checkpoint")
    segment.add_argument("--checkpoint", required=True)
    segment.add_argument("--trial", required=True, help="trial CSV")
    segment.add_argument("--output", "-o", required=True, help="prediction CSV")
    segment.add_argument("--graph")

    evaluate = sub.add_parser("evaluate", help="metrics between predictions and ground truth")
    evaluate.add_argument("--pred", required=True, help="prediction or segment CSV")
    evaluate.add_argument("--truth", required=True, help="prediction or trial CSV with labels")
    evaluate.add_argument("--output", "-o", help="report JSON")
    evaluate.add_argument(
        "--thresholds", type=float, nargs="+", default=list(DEFAULT_THRESHOLDS)
    )

    stats = sub.add_parser("stats", help="agreement statistics on per-trial outcomes")
    stats.add_argument("--outcomes", required=True, help="trial_outcomes.csv")
    stats.add_argument("--output", "-o", help="report JSON")

    inspect = sub.add_parser("inspect", help="describe a checkpoint, graph or configuration")
    _add_run_options(inspect)
    _add_model_options(inspect)
    inspect.add_argument("--checkpoint")
    inspect.add_argument("--show-graph", action="store_true")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested configuration overrides; flags that were not given stay None."""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    return {
        "seed": get("seed"),
        "jobs": get("jobs"),
        "precision": get("precision"),
        "model": {
            "variant": get("variant"),
            "num_stages": get("num_stages"),
            "layers_per_stage": get("layers_per_stage"),
            "channels": get("channels"),
            "acausal": False if get("causal") else None,
        },
        "loss": {"smoothing_weight": get("smoothing_weight"), "tau": get("tau")},
        "train": {
            "epochs": get("epochs"),
            "batch_size": get("batch_size"),
            "learning_rate": get("learning_rate"),
        },
        "synth": {
            "subjects": get("subjects"),
            "trials_per_subject": get("trials_per_subject"),
            "fog_rate": get("fog_rate"),
            "noise": get("noise"),
        },
    }


def configure_logging(verbosity: int, default_level: str = "WARNING") -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, default_level, logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def dispatch(args: argparse.Namespace) -> Dict[str, Any]:
    command = args.command
    if command == "segment":
        return cmd_segment(args.checkpoint, args.trial, args.output, args.graph)
    if command == "evaluate":
        return cmd_evaluate(args.pred, args.truth, args.output, tuple(args.thresholds))
    if command == "stats":
        return cmd_stats(args.outcomes, args.output)

    config = build_run_config(args.config, overrides_from_args(args))
    if not args.verbose:
        logging.getLogger().setLevel(config.log_level)
    if command == "synth":
        return cmd_synth(config, args.output, args.force, args.enrichment_subjects)
    if command == "train":
        return cmd_train(config, args.manifest, args.output, args.force, args.graph)
    if command == "crossval":
        return cmd_crossval(config, args.manifest, args.output, args.force, args.graph)
    return cmd_inspect(config, args.checkpoint, args.graph, args.show_graph)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        result = dispatch(args)
    except MsgcnError as e:
        logger.debug("command failed", exc_info=True)
        print(json.dumps(e.to_dict(), indent=2, default=str), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.debug("unexpected failure", exc_info=True)
        print(f"msgcn: unexpected error: {to_native(e)}", file=sys.stderr)
        return EXIT_FAILURE
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
