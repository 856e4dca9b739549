# Overlay files, the checker pipeline and report rendering
from mustcall.diagnostics.overlay import OverlayEntry, parse_overlay
from mustcall.diagnostics.render import exit_code, render_json, render_text, reports_from_json
from mustcall.diagnostics.runner import RunResult, analyze_sources, run

__all__ = [
    "OverlayEntry",
    "RunResult",
    "analyze_sources",
    "exit_code",
    "parse_overlay",
    "render_json",
    "render_text",
    "reports_from_json",
    "run",
]
