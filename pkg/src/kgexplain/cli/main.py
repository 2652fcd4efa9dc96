"""
kgexplain command-line entry point.

Exit codes: 0 success, 1 usage, 2 data or configuration error, 3 backend failure.
"""
import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from kgexplain.cli.commands import COMMANDS, SWEEP_PARAMS
from kgexplain.config.constants import ABLATION_FLAGS, GENERATION_BACKENDS, RETRIEVAL_STRATEGIES
from kgexplain.config.settings import EngineConfig, load_config
from kgexplain.errors import KGExplainError

logger = logging.getLogger("kgexplain")

EXIT_OK = 0
EXIT_USAGE = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--jobs", type=int, help="Worker threads (default: available cores)")
    parser.add_argument("--out", help="Run directory (default: runs/<timestamp>-<config hash>)")
    parser.add_argument("--seed", type=int, help="Embedding and k-means seed")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")


def _retrieval_flags(parser: argparse.ArgumentParser) -> None:
    for name, help_text in ABLATION_FLAGS.items():
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, action="store_true", default=None, help=help_text)
    parser.add_argument("--strategy", choices=RETRIEVAL_STRATEGIES)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--top-n", dest="top_n", type=int)
    parser.add_argument("--max-hops", dest="max_hops", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kgexplain", description="Knowledge-graph evidence selection and explanation faithfulness")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("index", help="Build the graph, embedding and cluster index")
    _common(p)
    p.add_argument("--index-dir", dest="index_dir")

    p = sub.add_parser("retrieve", help="Select evidence paths for a user")
    _common(p)
    _retrieval_flags(p)
    p.add_argument("--user")
    p.add_argument("--target")

    p = sub.add_parser("explain", help="Generate an explanation from selected evidence")
    _common(p)
    _retrieval_flags(p)
    p.add_argument("--user")
    p.add_argument("--target")
    p.add_argument("--dump-prompt", action="store_true", help="Write the prompt without calling a backend")
    p.add_argument("--backend", choices=GENERATION_BACKENDS)

    p = sub.add_parser("eval", help="Score an explanation corpus (F-EHR / P-EHR)")
    _common(p)
    p.add_argument("--corpus")
    p.add_argument("--tau", type=float)
    p.add_argument("--tau-sweep", dest="tau_sweep", metavar="START:STOP:STEP")
    p.add_argument("--xlsx", help="Also write an Excel workbook")

    p = sub.add_parser("demo", help="Index, explain and evaluate the toy dataset")
    _common(p)
    p.add_argument("--ui", action="store_true", help="Launch the Streamlit explorer instead")

    p = sub.add_parser("sweep", help="Hyperparameter sweep on the toy users")
    _common(p)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p.add_argument("--values", required=True, nargs="+")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Map parsed flags onto config sections; unset flags stay None and are ignored."""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    return {
        "jobs": get("jobs"),
        "embedding": {"seed": get("seed")},
        "retrieval": {
            "strategy": get("strategy"),
            "gamma": get("gamma"),
            "top_n": get("top_n"),
            "max_hops": get("max_hops"),
        },
        "evaluation": {"tau": get("tau")},
        "generation": {"backend": get("backend")},
        "ablation": {name: get(name) for name in ABLATION_FLAGS},
    }


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def resolve_config(args: argparse.Namespace) -> EngineConfig:
    return load_config(args.config).with_overrides(overrides_from_args(args)).validate()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    configure_logging(getattr(args, "verbose", False), getattr(args, "quiet", False))
    try:
        config = resolve_config(args)
        logger.debug(f"Config hash {config.config_hash()}")
        return COMMANDS[args.command](args, config)
    except KGExplainError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
