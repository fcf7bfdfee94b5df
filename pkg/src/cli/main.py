"""Command-line front end over ``.ssg`` files.

Exit codes: 0 success or certified, 1 negative answer or not certified,
2 unknown or budget exhausted, 64 usage error, 65 input parse error.
Results go to standard output, diagnostics to standard error.
"""
import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from src.models.errors import CertificateError, ParseError, UnknownGenerator, UnknownLetter, ValidationError
from src.models.recursion import GroupWord, RecursionSystem
from src.parser.dsl import SourceDoc, format_word, parse, parse_word, serialize
from src.processor.activity import activity_class, pold_contraction_test
from src.processor.contraction import certify_contraction, compute_nucleus, dim_zero_test, verify_nucleus
from src.processor.dimension import (
    STRATEGIES,
    certificate_to_json,
    search_partition,
    verify_certificate,
)
from src.processor.equality_backends import faithful_backend, is_trivial, order
from src.processor.level_graphs import FORMATS, export, level_transitive, schreier, self_replicating_check, tile_graph
from src.processor.report import system_report
from src.utils.settings import EngineSettings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_PARSE = 65

POSITIVE_FLAGS = ("jobs", "n_max", "rounds", "arrow_cap", "cap", "budget")
NON_NEGATIVE_FLAGS = {'level': "-n", 'dimension': "-d", 'levels': "--levels"}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    common.add_argument("--jobs", type=int, default=None, help="Worker threads (default: available CPUs).")
    common.add_argument("--seed", type=int, default=None, help="Seed for randomized search (default 0).")
    common.add_argument("--n-max", type=int, default=None, help="Deepest stability check.")
    common.add_argument("--rounds", type=int, default=None, help="Nucleus growth rounds.")
    common.add_argument("--arrow-cap", type=int, default=None, help="Arrows per groupoid closure.")

    parser = _ArgumentParser(prog="wreath", description="Contracting self-similar group toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("parse", parents=[common], help="Validate a file and echo its canonical form.")
    p.add_argument("file")

    p = subparsers.add_parser("nucleus", parents=[common], help="Compute or verify the nucleus.")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=None, help="Candidate element budget.")
    p.add_argument("--verify-only", metavar="SET", default=None,
                   help="Comma-separated words to check instead of computing the nucleus.")

    p = subparsers.add_parser("order", parents=[common], help="Order of an element.")
    p.add_argument("file")
    p.add_argument("word")
    p.add_argument("--cap", type=int, default=None)

    p = subparsers.add_parser("trivial", parents=[common], help="Decide whether a word is trivial.")
    p.add_argument("file")
    p.add_argument("word")

    for name, help_text in (("schreier", "Schreier graph of level N."), ("tiles", "Tile graph of level N.")):
        p = subparsers.add_parser(name, parents=[common], help=help_text)
        p.add_argument("file")
        p.add_argument("-n", type=int, required=True, dest="level")
        p.add_argument("--format", choices=FORMATS, default="json")
        p.add_argument("-o", "--output", default=None)

    p = subparsers.add_parser("transitive", parents=[common], help="Level-transitivity per level.")
    p.add_argument("file")
    p.add_argument("--levels", type=int, default=4)

    p = subparsers.add_parser("self-replicating", parents=[common], help="Search for self-replication witnesses.")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=None)

    p = subparsers.add_parser("dim-cert", parents=[common],
                              help="Search for a dimension certificate, or 'dim-cert verify CERT.json'.")
    p.add_argument("file")
    p.add_argument("certificate", nargs="?", default=None)
    p.add_argument("-n", type=int, default=None, dest="level")
    p.add_argument("-d", type=int, default=None, dest="dimension")
    p.add_argument("--strategy", choices=STRATEGIES, default="exhaustive")
    p.add_argument("--emit", default=None, help="Write the certificate json here.")

    p = subparsers.add_parser("dim-zero", parents=[common], help="Is the nucleus subgroup finite?")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=None)

    p = subparsers.add_parser("activity", parents=[common], help="Activity class of generators or a word.")
    p.add_argument("file")
    p.add_argument("word", nargs="?", default=None)

    p = subparsers.add_parser("pold", parents=[common], help="Groupoid test for polynomial activity.")
    p.add_argument("file")

    p = subparsers.add_parser("report", parents=[common], help="One-page summary as json.")
    p.add_argument("file")
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _settings(args) -> EngineSettings:
    return EngineSettings.from_env().override(
        jobs=args.jobs,
        seed=args.seed,
        n_max=args.n_max,
        nucleus_rounds=args.rounds,
        arrow_cap=args.arrow_cap,
        nucleus_budget=getattr(args, "budget", None)
    )


def _load(path: str) -> RecursionSystem:
    return parse(SourceDoc.from_path(path))


def _emit(data: bytes, output: Optional[str]):
    if output:
        with open(output, "wb") as handle:
            handle.write(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
        if not data.endswith(b"\n"):
            sys.stdout.write("\n")


def _print_json(data: dict):
    print(json.dumps(data, indent=2, sort_keys=True, default=str))


def _cmd_parse(args, settings) -> int:
    sys.stdout.write(serialize(_load(args.file)).text)
    return EXIT_OK


def _cmd_nucleus(args, settings) -> int:
    system = _load(args.file)
    if args.verify_only is not None:
        words = [parse_word(system, w) for w in args.verify_only.split(",")]
        check = verify_nucleus(system, words, settings=settings)
        if check.holds:
            print(f"stable at depth {check.depth}")
            return EXIT_OK
        print(f"not stable: {check.reason}")
        for name in check.offenders:
            print(f"  {name}")
        return EXIT_NEGATIVE
    status = compute_nucleus(system, settings=settings)
    if not status.is_contracting:
        print(f"unknown: {status.report.get('reason', 'budget exhausted')}")
        return EXIT_UNKNOWN
    for name in status.nucleus.names():
        print(name)
    print(f"# {len(status.nucleus)} elements, stability depth {status.nucleus.depth_witness}")
    return EXIT_OK


def _cmd_order(args, settings) -> int:
    system = _load(args.file)
    cap = settings.order_cap if args.cap is None else args.cap
    result = order(system, parse_word(system, args.word), cap)
    if result.status == 'finite':
        print(f"Finite({result.value})")
        return EXIT_OK
    if result.status == 'infinite':
        print("Infinite")
        return EXIT_OK
    print(f"Unknown({result.reason})")
    return EXIT_UNKNOWN


def _cmd_trivial(args, settings) -> int:
    system = _load(args.file)
    answer = is_trivial(system, parse_word(system, args.word))
    print("true" if answer else "false")
    return EXIT_OK if answer else EXIT_NEGATIVE


def _cmd_schreier(args, settings) -> int:
    graph = schreier(_load(args.file), args.level, settings)
    _emit(export(graph, args.format), args.output)
    return EXIT_OK


def _cmd_tiles(args, settings) -> int:
    system = _load(args.file)
    status = certify_contraction(system, settings)
    if not status.is_contracting:
        print(f"no nucleus: {status.status}", file=sys.stderr)
        return EXIT_UNKNOWN
    graph = tile_graph(system, status.nucleus, args.level, settings)
    _emit(export(graph, args.format), args.output)
    return EXIT_OK


def _cmd_transitive(args, settings) -> int:
    system = _load(args.file)
    status = compute_nucleus(system, settings=settings)
    report = level_transitive(system, args.levels, status.nucleus, settings)
    for row in report.rows:
        line = f"level {row['level']}: {row['orbits']} orbit(s), transitive={row['transitive']}"
        if 'tile_connected' in row:
            line += f", tiles connected={row['tile_connected']}"
        print(line)
    return EXIT_OK if all(report.transitive_levels()) else EXIT_NEGATIVE


def _cmd_self_replicating(args, settings) -> int:
    result = self_replicating_check(_load(args.file), args.cap, settings)
    print(result.status)
    for name, witness in sorted(result.witnesses.items()):
        print(f"  {name} = section at 0 of {witness}")
    if result.reason:
        print(f"  {result.reason}")
    return {'yes': EXIT_OK, 'no': EXIT_NEGATIVE}.get(result.status, EXIT_UNKNOWN)


def _cmd_dim_cert(args, settings, parser) -> int:
    if args.file == "verify":
        if args.certificate is None:
            parser.error("dim-cert verify needs a certificate file")
        with open(args.certificate, "r", encoding="utf-8") as handle:
            text = handle.read()
        try:
            result = verify_certificate(text, settings)
        except CertificateError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NEGATIVE
        if result.certified:
            print(f"certified: d = {result.certificate.d} at level {result.certificate.level}")
            return EXIT_OK
        print(f"not certified: {result.reason}")
        return EXIT_NEGATIVE
    if args.certificate is not None:
        parser.error(f"unexpected argument: {args.certificate}")
    if args.level is None or args.dimension is None:
        parser.error("dim-cert needs -n N and -d D")
    system = _load(args.file)
    status = certify_contraction(system, settings)
    if not status.is_contracting:
        print("no nucleus available for the generating set", file=sys.stderr)
        return EXIT_UNKNOWN
    tree = faithful_backend(system, settings)
    generating_set = [tree.element(e.nf) for e in status.nucleus.elements]
    result = search_partition(system, args.level, args.dimension, generating_set, args.strategy,
                              settings=settings)
    if not result.certified:
        for line in result.log:
            print(line)
        return EXIT_NEGATIVE
    text = certificate_to_json(result.certificate)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as handle:
            handle.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_dim_zero(args, settings) -> int:
    result = dim_zero_test(_load(args.file), args.cap, settings)
    line = result.status
    if result.subgroup_order is not None:
        line += f" (nucleus subgroup of order {result.subgroup_order})"
    if result.infinite_element:
        line += f" ({result.infinite_element} has infinite order)"
    print(line)
    return {'yes': EXIT_OK, 'no': EXIT_NEGATIVE}.get(result.status, EXIT_UNKNOWN)


def _cmd_activity(args, settings) -> int:
    system = _load(args.file)
    if args.word is not None:
        w = parse_word(system, args.word)
        print(f"{format_word(system, w)}: {activity_class(system, w, settings)}")
        return EXIT_OK
    for i, name in enumerate(system.names):
        print(f"{name}: {activity_class(system, GroupWord.generator(i), settings)}")
    return EXIT_OK


def _cmd_pold(args, settings) -> int:
    status = pold_contraction_test(_load(args.file), settings=settings)
    print(status.status)
    if status.is_contracting:
        for name in status.nucleus.names():
            print(f"  {name}")
        return EXIT_OK
    if status.status == 'not_contracting':
        witness = status.witness
        print(f"  {witness['element']} at {witness['path']} reproduces itself; "
              f"lengths of its powers: {witness['growth']}")
        return EXIT_NEGATIVE
    print(f"  {status.report.get('reason', '')}")
    return EXIT_UNKNOWN


def _cmd_report(args, settings) -> int:
    _print_json(system_report(_load(args.file), settings))
    return EXIT_OK


COMMANDS = {
    'parse': _cmd_parse,
    'nucleus': _cmd_nucleus,
    'order': _cmd_order,
    'trivial': _cmd_trivial,
    'schreier': _cmd_schreier,
    'tiles': _cmd_tiles,
    'transitive': _cmd_transitive,
    'self-replicating': _cmd_self_replicating,
    'dim-zero': _cmd_dim_zero,
    'activity': _cmd_activity,
    'pold': _cmd_pold,
    'report': _cmd_report,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    for flag in POSITIVE_FLAGS:
        value = getattr(args, flag, None)
        if value is not None and value < 1:
            parser.error(f"--{flag.replace('_', '-')} must be positive")
    for flag, option in NON_NEGATIVE_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None and value < 0:
            parser.error(f"{option} must be non-negative")
    settings = _settings(args)
    try:
        if args.command == "dim-cert":
            return _cmd_dim_cert(args, settings, parser)
        return COMMANDS[args.command](args, settings)
    except (ParseError, ValidationError, UnknownGenerator, UnknownLetter) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
