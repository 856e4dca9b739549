"""
Command-line entry points: mustcall-check and mustcall-corpus.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from mustcall.config import Config, RunConfig, color_enabled
from mustcall.constants import Constants
from mustcall.diagnostics.render import exit_code, render_json, render_text
from mustcall.diagnostics.runner import run
from mustcall.errors import MustCallError
from mustcall.harness.corpus import run_cases, run_corpus
from mustcall.harness.generator import generate_random_programs

logger = logging.getLogger(__name__)


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def check_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mustcall-check",
        description="Report resources that may not be released on all paths.",
    )
    parser.add_argument("inputs", nargs="+", metavar="FILE", help="MiniOO source files")
    parser.add_argument("--specs", metavar="OVERLAY", help="overlay annotation file (.rmspec)")
    parser.add_argument("--format", choices=("text", "json"), default="text", dest="output_format")
    parser.add_argument(
        "--naive",
        action="store_const",
        const="naive",
        dest="mode",
        help="attribute-blind baseline (same as --mode naive)",
    )
    parser.add_argument("--mode", choices=sorted(Config.MODES), dest="mode")
    parser.add_argument("--dump-cfg", action="store_true", help="write CFGs as DOT to stderr")
    parser.add_argument("--dump-aliases", action="store_true", help="write alias pairs to stderr")
    parser.add_argument("--strict", action="store_true", help="exit 2 on any parse or resolution error")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.set_defaults(mode="full")
    return parser


def check_main(argv: Optional[List[str]] = None) -> int:
    parser = check_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return Constants.EXIT_USAGE if exc.code else Constants.EXIT_CLEAN
    configure_logging(args.verbose)

    config = RunConfig(
        inputs=args.inputs,
        specs=args.specs,
        output_format=args.output_format,
        strict=args.strict,
        dump_cfg=args.dump_cfg,
        dump_aliases=args.dump_aliases,
        color=color_enabled(sys.stdout.isatty()),
        mode=Config(args.mode),
    )

    try:
        result = run(config)
    except MustCallError as exc:
        print(f"mustcall-check: {exc}", file=sys.stderr)
        return Constants.EXIT_USAGE

    for dump in result.dumps:
        sys.stderr.write(dump)
    if config.output_format == "json":
        sys.stdout.write(render_json(result))
        for error in result.errors:
            print(f"error: {error}", file=sys.stderr)
    else:
        sys.stdout.write(render_text(result, color=config.color))
    return exit_code(result, strict=config.strict)


def corpus_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mustcall-corpus",
        description="Run the golden corpus and, with a seed, generated differential cases.",
    )
    parser.add_argument("directory", help="corpus directory, one case per sub-directory")
    parser.add_argument("--seed", type=int, help="seed for generated cases")
    parser.add_argument("--random-count", type=int, default=100, help="number of generated cases")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def corpus_main(argv: Optional[List[str]] = None) -> int:
    parser = corpus_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return Constants.EXIT_USAGE if exc.code else Constants.EXIT_CLEAN
    configure_logging(args.verbose)

    directory = Path(args.directory)
    if not directory.is_dir():
        print(f"mustcall-corpus: not a directory: {directory}", file=sys.stderr)
        return Constants.EXIT_USAGE

    summary = run_corpus(directory)
    sys.stdout.write(summary.format())
    passed = summary.passed

    if args.seed is not None:
        generated = run_cases(generate_random_programs(args.seed, args.random_count))
        failures = generated.failures
        for outcome in failures:
            sys.stdout.write(outcome.describe() + "\n")
        sys.stdout.write(
            f"{len(generated.outcomes) - len(failures)}/{len(generated.outcomes)} "
            f"generated cases agree with the oracle (seed {args.seed})\n"
        )
        passed = passed and not failures

    return Constants.EXIT_CLEAN if passed else Constants.EXIT_LEAKS


def main() -> None:
    sys.exit(check_main())


def corpus_entry() -> None:
    sys.exit(corpus_main())


if __name__ == "__main__":
    main()
