"""Command line entry point ``skg-compat``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Union

from .config import STDOUT, RunConfig, load_run_config, parse_methods
from .equivalence import build_mapping, load_mapping, save_mapping
from .errors import (
    ConfigurationError,
    LoweringError,
    MappingError,
    SkgFormatError,
    SkgValidationError,
    TurtleSyntaxError,
)
from .harness import SyntheticSpec, ablate, ablation_to_csv, generate_synthetic, trend_summary
from .importer import import_turtle
from .metrics import DIRECTIONS, compare, reports_to_csv, reports_to_json
from .model import Skg, load_skg, save_skg, validate
from .similarity import LABEL_BACKENDS, PROPERTY_MODE_CHOICES
from .weights import compute_weights, weights_to_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _methods(text: str) -> tuple:
    try:
        return parse_methods(text)
    except (ConfigurationError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=None, help="log debug messages")
    common.add_argument("--config", help="run configuration JSON file")
    common.add_argument("--strict", action="store_true", default=None, help="reject unknown keys and constructs")
    common.add_argument("--output-dir", help="directory outputs are written to")
    return common


def _similarity_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--label-backend", choices=LABEL_BACKENDS)
    parser.add_argument("--property-mode", choices=PROPERTY_MODE_CHOICES)
    parser.add_argument("--lexicon", dest="lexicon_path")
    parser.add_argument("--vectors", dest="vector_path")
    parser.add_argument("--t-label", type=float)
    parser.add_argument("--t-property", type=float)
    parser.add_argument("--t-overall", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _ArgumentParser(prog="skg-compat", description="Schema compatibility analysis.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    cmd = commands.add_parser("validate", parents=[common], help="check an SKG file")
    cmd.add_argument("skg")
    cmd.add_argument("-o", "--output", default=STDOUT)
    cmd.set_defaults(handler=_validate)

    cmd = commands.add_parser("import", parents=[common], help="lower a Turtle file to SKG JSON")
    cmd.add_argument("turtle")
    cmd.add_argument("-o", "--output", required=True)
    cmd.add_argument("--name", help="schema name (default: the file stem)")
    cmd.set_defaults(handler=_import)

    cmd = commands.add_parser("equiv", parents=[common], help="build an equivalence mapping")
    cmd.add_argument("schemas", nargs="+")
    cmd.add_argument("--reference", help="schema name preferred for canonical ids (default: the first)")
    cmd.add_argument("-o", "--output", required=True)
    _similarity_options(cmd)
    cmd.set_defaults(handler=_equiv)

    cmd = commands.add_parser("weights", parents=[common], help="compute etype weights")
    cmd.add_argument("skg")
    cmd.add_argument("--preprocess", action="store_true", help="apply is-a preprocessing first")
    cmd.add_argument("-o", "--output", default=STDOUT)
    cmd.set_defaults(handler=_weights)

    cmd = commands.add_parser("compare", parents=[common], help="coverage and flexibility of X to Y")
    cmd.add_argument("x")
    cmd.add_argument("y")
    cmd.add_argument("--mapping", required=True)
    cmd.add_argument("--methods", type=_methods)
    cmd.add_argument("--directions", choices=DIRECTIONS)
    cmd.add_argument("--format", choices=("json", "csv"), default="json")
    cmd.add_argument("-o", "--output", default=STDOUT)
    cmd.set_defaults(handler=_compare)

    cmd = commands.add_parser("ablate", parents=[common], help="etype-removal ablation of X against Y")
    cmd.add_argument("x")
    cmd.add_argument("y")
    cmd.add_argument("--mapping", required=True)
    cmd.add_argument("--methods", type=_methods)
    cmd.add_argument("--workers", type=int)
    cmd.add_argument("-o", "--output", default=STDOUT, help="ablation CSV")
    cmd.add_argument("--trend", help="also write a trend report here")
    cmd.add_argument("--trend-format", choices=("json", "text"), default="json")
    cmd.set_defaults(handler=_ablate)

    cmd = commands.add_parser("gen", parents=[common], help="generate a synthetic schema pair")
    cmd.add_argument("--seed", type=int, required=True)
    cmd.add_argument("--etypes", type=int, required=True)
    cmd.add_argument("--overlap", type=float, required=True)
    cmd.add_argument("--density", type=float, default=0.2)
    cmd.add_argument("--depth", type=int, default=0)
    cmd.add_argument("--prefix", help="output file prefix (default: synthetic-<seed>)")
    cmd.set_defaults(handler=_gen)
    return parser


_SIMILARITY_FLAGS = (
    "label_backend",
    "property_mode",
    "lexicon_path",
    "vector_path",
    "t_label",
    "t_property",
    "t_overall",
)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config)
    similarity = {key: getattr(args, key, None) for key in _SIMILARITY_FLAGS}
    config = config.merged(
        similarity=similarity,
        methods=getattr(args, "methods", None),
        directions=getattr(args, "directions", None),
        output_dir=args.output_dir,
        strict=args.strict,
        workers=getattr(args, "workers", None),
    ).validate()
    config.check_output_dir()
    return config


def _emit(config: RunConfig, target: str, content: Union[str, bytes]) -> None:
    data = content.encode("utf-8") if isinstance(content, str) else content
    path = config.output_path(target)
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    config.check_output_dir()
    path.write_bytes(data)
    logger.info("Wrote %s", path)


def _read_skg(path: str, config: RunConfig) -> Skg:
    return load_skg(Path(path).read_bytes(), strict=config.strict)


def _validate(args: argparse.Namespace, config: RunConfig) -> int:
    skg = _read_skg(args.skg, config)
    report = validate(skg)
    document: Dict[str, Any] = {"config": config.to_dict(), "schema": skg.name, **report.to_dict()}
    _emit(config, args.output, json.dumps(document, indent=2, ensure_ascii=False) + "\n")
    return EXIT_OK if report.ok else EXIT_INVALID


def _import(args: argparse.Namespace, config: RunConfig) -> int:
    source = Path(args.turtle)
    skg = import_turtle(source.read_bytes(), name=args.name or source.stem, strict=config.strict)
    _emit(config, args.output, save_skg(skg))
    return EXIT_OK


def _equiv(args: argparse.Namespace, config: RunConfig) -> int:
    schemas = [_read_skg(path, config) for path in args.schemas]
    reference = args.reference or schemas[0].name
    mapping = build_mapping(schemas, reference, config.similarity)
    _emit(config, args.output, save_mapping(mapping, config.to_dict()))
    return EXIT_OK


def _weights(args: argparse.Namespace, config: RunConfig) -> int:
    table = compute_weights(_read_skg(args.skg, config), preprocess=args.preprocess)
    _emit(config, args.output, weights_to_csv(table, header=config.header()))
    return EXIT_OK


def _compare(args: argparse.Namespace, config: RunConfig) -> int:
    x, y = _read_skg(args.x, config), _read_skg(args.y, config)
    mapping = load_mapping(Path(args.mapping).read_bytes())
    reports = compare(x, y, mapping, config.methods, config.directions)
    if args.format == "csv":
        text = reports_to_csv(reports, header=config.header())
    else:
        text = reports_to_json(reports, config=config.to_dict())
    _emit(config, args.output, text)
    return EXIT_OK


def _ablate(args: argparse.Namespace, config: RunConfig) -> int:
    x, y = _read_skg(args.x, config), _read_skg(args.y, config)
    mapping = load_mapping(Path(args.mapping).read_bytes())
    result = ablate(x, y, mapping, config.methods, workers=config.workers)
    _emit(config, args.output, ablation_to_csv([result], header=config.header()))
    if args.trend:
        trend = trend_summary([result])
        if args.trend_format == "text":
            text = trend.to_text(header=config.header())
        else:
            text = trend.to_json(config=config.to_dict())
        _emit(config, args.trend, text)
    return EXIT_OK


def _gen(args: argparse.Namespace, config: RunConfig) -> int:
    spec = SyntheticSpec(
        seed=args.seed,
        n_etypes=args.etypes,
        edge_density=args.density,
        is_a_depth=args.depth,
        overlap_fraction=args.overlap,
    )
    pair = generate_synthetic(spec)
    prefix = args.prefix or f"synthetic-{args.seed}"
    _emit(config, f"{prefix}-base.json", save_skg(pair.base))
    _emit(config, f"{prefix}-partner.json", save_skg(pair.partner))
    _emit(config, f"{prefix}-mapping.json", save_mapping(pair.mapping, config.to_dict()))
    return EXIT_OK


_INVALID_ERRORS = (SkgValidationError, ConfigurationError, MappingError, LoweringError)
_IO_ERRORS = (OSError, SkgFormatError, TurtleSyntaxError)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns 0 on success, 1 on validation or
    configuration errors, 2 on I/O or parse errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        format="%(levelname)s %(name)s: %(message)s",
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
    )
    handler: Callable[[argparse.Namespace, RunConfig], int] = args.handler
    try:
        config = _resolve_config(args)
        return handler(args, config)
    except _INVALID_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_INVALID
    except _IO_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
