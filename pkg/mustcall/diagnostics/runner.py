"""
Checker pipeline: parse, build the model, apply overlays, check, collect.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from mustcall.analysis.leakcheck import LeakReport, analyze_program
from mustcall.analysis.model import SemanticModel, apply_overlay, build_model
from mustcall.config import Config, RunConfig
from mustcall.diagnostics.overlay import parse_overlay
from mustcall.errors import MustCallError
from mustcall.frontend.ast_nodes import CompilationUnit, SourceUnit
from mustcall.frontend.parser import parse_source

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    reports: List[LeakReport] = field(default_factory=list)
    errors: List[MustCallError] = field(default_factory=list)
    statistics: Dict[str, Any] = field(default_factory=dict)
    model: Optional[SemanticModel] = field(default=None, repr=False)
    # DOT graphs and alias dumps requested by the run options
    dumps: List[str] = field(default_factory=list, repr=False)


def _parse_units(files: Mapping[str, str], errors: List[MustCallError]) -> List[CompilationUnit]:
    units = []
    for path, text in files.items():
        try:
            units.append(parse_source(SourceUnit(path, text)))
        except MustCallError as exc:
            logger.warning("Skipping %s: %s", path, exc)
            errors.append(exc)
    return units


def analyze_sources(
    files: Mapping[str, str],
    overlay_text: Optional[str] = None,
    mode: Optional[Config] = None,
    strict: bool = False,
    dump_cfg: bool = False,
    dump_aliases: bool = False,
) -> RunResult:
    """Run the checker over in-memory sources keyed by path."""
    mode = mode or Config()
    parse_errors: List[MustCallError] = []
    overlay_errors: List[MustCallError] = []

    units = _parse_units(files, parse_errors)
    model = build_model(units)
    if overlay_text is not None:
        try:
            model = apply_overlay(model, parse_overlay(overlay_text))
        except MustCallError as exc:
            overlay_errors.append(exc)
    errors = parse_errors + list(model.errors) + overlay_errors

    if strict and errors:
        logger.info("Strict mode: %d errors, skipping analysis", len(errors))
        return RunResult(errors=errors, statistics=_statistics(model, {}, {}, 0), model=model)

    program = analyze_program(model, mode)

    dumps: List[str] = []
    for ctx in program.contexts:
        if dump_cfg:
            dumps.append(ctx.cfg.to_dot())
        if dump_aliases:
            text = ctx.aliases.dump()
            if text:
                dumps.append(text + "\n")

    return RunResult(
        reports=program.reports,
        errors=errors,
        statistics=_statistics(model, program.sources, program.sinks, program.methods),
        model=model,
        dumps=dumps,
    )


def _statistics(
    model: SemanticModel, sources: Dict[str, int], sinks: Dict[str, int], methods: int
) -> Dict[str, Any]:
    return {
        "sources": sources,
        "sinks": sinks,
        "attributes": model.attribute_counts(),
        "overlay_attributes": len(model.overlay_provenance),
        "files": len(model.files),
        "methods": methods,
    }


def read_file(path: str, what: str) -> str:
    """Read a UTF-8 file, turning I/O and decoding failures into MustCallError."""
    source = Path(path)
    if not source.is_file():
        raise MustCallError(f"{what} not found: {path}")
    try:
        return source.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MustCallError(
            f"{what} is not valid UTF-8: {path} (byte {exc.start})"
        ) from exc
    except OSError as exc:
        raise MustCallError(f"cannot read {what} {path}: {exc.strerror}") from exc


def read_inputs(paths: List[str]) -> Dict[str, str]:
    return {path: read_file(path, "input file") for path in paths}


def run(config: RunConfig) -> RunResult:
    """Run the checker as configured; missing inputs or overlay raise MustCallError."""
    if not config.inputs:
        raise MustCallError("no input files given")
    files = read_inputs(config.inputs)

    overlay_text = None
    if config.specs is not None:
        overlay_text = read_file(config.specs, "overlay file")

    result = analyze_sources(
        files,
        overlay_text=overlay_text,
        mode=config.mode,
        strict=config.strict,
        dump_cfg=config.dump_cfg,
        dump_aliases=config.dump_aliases,
    )
    logger.info(
        "Checked %d files: %d reports, %d errors",
        len(files),
        len(result.reports),
        len(result.errors),
    )
    return result
