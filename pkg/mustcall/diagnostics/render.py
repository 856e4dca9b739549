"""
Text and JSON rendering of run results.
"""

import json
from typing import TYPE_CHECKING, Any, Dict, List

from mustcall.analysis.leakcheck import LeakReport
from mustcall.constants import Constants

if TYPE_CHECKING:
    from mustcall.diagnostics.runner import RunResult


def _colored(text: str, color: str, enabled: bool) -> str:
    if not enabled:
        return text
    return f"{Constants.ANSI_COLORS[color]}{text}{Constants.ANSI_COLORS['reset']}"


def format_report(report: LeakReport, color: bool = False) -> str:
    label = _colored(Constants.SEVERITY, "warning", color)
    return f"{report.file}:{report.line}: {label}[{Constants.RULE_PREFIX}/{report.kind}]: {report.message}"


def summary_line(count: int) -> str:
    return f"{count} warning" if count == 1 else f"{count} warnings"


def render_text(result: "RunResult", color: bool = False) -> str:
    """One line per report, then errors, then a count footer."""
    lines = [format_report(report, color) for report in result.reports]
    lines.extend(_colored(f"error: {error}", "error", color) for error in result.errors)
    lines.append(summary_line(len(result.reports)))
    return "\n".join(lines) + "\n"


def report_to_dict(report: LeakReport) -> Dict[str, Any]:
    return {
        "file": report.file,
        "line": report.line,
        "kind": report.kind,
        "message": report.message,
        "witness": list(report.witness) if report.witness is not None else None,
    }


def render_json(result: "RunResult") -> str:
    payload = {
        "version": Constants.JSON_FORMAT_VERSION,
        "reports": [report_to_dict(report) for report in result.reports],
        "stats": result.statistics,
    }
    return json.dumps(payload, indent=2) + "\n"


def reports_from_json(text: str) -> List[LeakReport]:
    """Rebuild the report list from render_json output."""
    payload = json.loads(text)
    if payload.get("version") != Constants.JSON_FORMAT_VERSION:
        raise ValueError(f"Unsupported report format version: {payload.get('version')}")
    return [
        LeakReport(
            file=entry["file"],
            line=entry["line"],
            kind=entry["kind"],
            message=entry["message"],
            witness=tuple(entry["witness"]) if entry.get("witness") is not None else None,
        )
        for entry in payload["reports"]
    ]


def exit_code(result: "RunResult", strict: bool = False) -> int:
    """0 when clean, 1 with leak reports, 2 for strict-mode errors."""
    if strict and result.errors:
        return Constants.EXIT_USAGE
    if result.reports:
        return Constants.EXIT_LEAKS
    return Constants.EXIT_CLEAN
