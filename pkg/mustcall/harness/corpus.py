"""
Golden corpus runner.

A case directory holds MiniOO files, an optional overlay file and
expected.json:

    {"reports": [{"file": "fig1.moo", "line": 1, "kind": "ObjectCreation"}], "mode": "full"}

File names are relative to the case directory.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from mustcall.config import Config
from mustcall.constants import Constants
from mustcall.diagnostics.runner import RunResult, analyze_sources
from mustcall.errors import MustCallError

logger = logging.getLogger(__name__)

Triple = Tuple[str, int, str]


@dataclass
class CorpusCase:
    name: str
    files: Dict[str, str]
    expected: List[Triple] = field(default_factory=list)
    overlay: Optional[str] = None
    mode: str = "full"

    def __post_init__(self) -> None:
        self.expected = sorted({tuple(entry) for entry in self.expected})


@dataclass
class CaseOutcome:
    name: str
    missing: List[Triple] = field(default_factory=list)
    unexpected: List[Triple] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and not self.missing and not self.unexpected

    def describe(self) -> str:
        if self.passed:
            return f"PASS {self.name}"
        lines = [f"FAIL {self.name}"]
        if self.error:
            lines.append(f"  error: {self.error}")
        lines.extend(f"  missing:    {file}:{line} {kind}" for file, line, kind in self.missing)
        lines.extend(f"  unexpected: {file}:{line} {kind}" for file, line, kind in self.unexpected)
        return "\n".join(lines)


@dataclass
class CorpusSummary:
    outcomes: List[CaseOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(outcome.passed for outcome in self.outcomes)

    @property
    def failures(self) -> List[CaseOutcome]:
        return [outcome for outcome in self.outcomes if not outcome.passed]

    def format(self) -> str:
        lines = [outcome.describe() for outcome in self.outcomes]
        lines.append(
            f"{len(self.outcomes) - len(self.failures)}/{len(self.outcomes)} cases passed"
        )
        return "\n".join(lines) + "\n"


def load_case(directory: Path) -> CorpusCase:
    expected_path = directory / Constants.EXPECTED_FILE_NAME
    if not expected_path.is_file():
        raise MustCallError(f"case {directory.name} has no {Constants.EXPECTED_FILE_NAME}")
    payload = json.loads(expected_path.read_text(encoding="utf-8"))

    files = {
        path.relative_to(directory).as_posix(): path.read_text(encoding="utf-8")
        for path in sorted(directory.rglob(f"*{Constants.SOURCE_FILE_EXTENSION}"))
    }
    overlays = sorted(directory.rglob(f"*{Constants.OVERLAY_FILE_EXTENSION}"))
    overlay = overlays[0].read_text(encoding="utf-8") if overlays else None

    return CorpusCase(
        name=directory.name,
        files=files,
        expected=[(entry["file"], entry["line"], entry["kind"]) for entry in payload["reports"]],
        overlay=overlay,
        mode=payload.get("mode", "full"),
    )


def run_case_result(case: CorpusCase) -> RunResult:
    return analyze_sources(case.files, overlay_text=case.overlay, mode=Config(case.mode))


def run_case(case: CorpusCase) -> CaseOutcome:
    """Diff the (file, line, kind) triples of a case against its expectation."""
    try:
        result = run_case_result(case)
    except MustCallError as exc:
        return CaseOutcome(case.name, error=str(exc))
    if result.errors:
        return CaseOutcome(case.name, error="; ".join(str(error) for error in result.errors))

    actual = {report.triple for report in result.reports}
    expected = set(case.expected)
    return CaseOutcome(
        case.name,
        missing=sorted(expected - actual),
        unexpected=sorted(actual - expected),
    )


def load_corpus(directory: Path) -> List[Path]:
    return sorted(path for path in Path(directory).iterdir() if path.is_dir())


def run_corpus(directory: Path) -> CorpusSummary:
    """Run every case directory under `directory`, ordered by case name."""
    summary = CorpusSummary()
    for case_dir in load_corpus(directory):
        try:
            case = load_case(case_dir)
        except (MustCallError, ValueError, KeyError) as exc:
            summary.outcomes.append(CaseOutcome(case_dir.name, error=str(exc)))
            continue
        outcome = run_case(case)
        logger.info(outcome.describe())
        summary.outcomes.append(outcome)
    return summary


def run_cases(cases: List[CorpusCase]) -> CorpusSummary:
    return CorpusSummary([run_case(case) for case in sorted(cases, key=lambda case: case.name)])
