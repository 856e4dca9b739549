"""
Overlay annotation files (.rmspec).

Each line attaches one attribute to a program element that is identified by
file, line, element kind and name:

    fileName="RLCTests/SimpleEg.moo" and lineNo="17" and elementType="Parameter" and elementName="s" and annotation="Owning"

An optional trailing `and args="a,b"` clause supplies attribute arguments.
Blank lines and lines starting with `#` are ignored.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Tuple

from mustcall.errors import OverlayError
from mustcall.frontend.ast_nodes import ATTRIBUTE_ARITY, AttributeKind, ElementKind

logger = logging.getLogger(__name__)

CLAUSE_PATTERN = re.compile(r'\s*(?P<key>[A-Za-z]+)\s*=\s*"(?P<value>[^"]*)"\s*')
REQUIRED_CLAUSES: Tuple[str, ...] = (
    "fileName",
    "lineNo",
    "elementType",
    "elementName",
    "annotation",
)
OPTIONAL_CLAUSES: Tuple[str, ...] = ("args",)


@dataclass(frozen=True)
class OverlayEntry:
    file_name: str
    line_no: int
    element_type: ElementKind
    element_name: str
    annotation: AttributeKind
    args: Tuple[str, ...] = ()
    # Line of the overlay file this entry came from
    source_line: int = 0

    def __str__(self) -> str:
        text = (
            f'fileName="{self.file_name}" and lineNo="{self.line_no}" '
            f'and elementType="{self.element_type.value}" and elementName="{self.element_name}" '
            f'and annotation="{self.annotation.value}"'
        )
        if self.args:
            text += f' and args="{",".join(self.args)}"'
        return text


def _clauses(line: str, line_no: int) -> Dict[str, str]:
    clauses: Dict[str, str] = {}
    for part in re.split(r"\band\b(?=(?:[^\"]*\"[^\"]*\")*[^\"]*$)", line):
        if not part.strip():
            raise OverlayError("empty clause", line_no=line_no)
        match = CLAUSE_PATTERN.fullmatch(part)
        if match is None:
            raise OverlayError(f"malformed clause {part.strip()!r}", line_no=line_no)
        key = match.group("key")
        if key not in REQUIRED_CLAUSES and key not in OPTIONAL_CLAUSES:
            raise OverlayError(f"unknown clause {key}", line_no=line_no)
        if key in clauses:
            raise OverlayError(f"duplicate clause {key}", line_no=line_no)
        clauses[key] = match.group("value")
    return clauses


def parse_overlay_line(line: str, line_no: int) -> OverlayEntry:
    clauses = _clauses(line, line_no)
    for key in REQUIRED_CLAUSES:
        if key not in clauses:
            raise OverlayError(f"missing {key} clause", line_no=line_no)

    try:
        target_line = int(clauses["lineNo"])
    except ValueError:
        raise OverlayError(f"lineNo must be an integer, got {clauses['lineNo']!r}", line_no=line_no)
    if target_line < 1:
        raise OverlayError(f"lineNo must be positive, got {target_line}", line_no=line_no)

    try:
        element_type = ElementKind(clauses["elementType"])
    except ValueError:
        raise OverlayError(f"unknown elementType {clauses['elementType']!r}", line_no=line_no)
    try:
        annotation = AttributeKind(clauses["annotation"])
    except ValueError:
        raise OverlayError(f"unknown annotation {clauses['annotation']!r}", line_no=line_no)

    raw_args = clauses.get("args", "")
    args = tuple(arg.strip() for arg in raw_args.split(",") if arg.strip())
    expected = ATTRIBUTE_ARITY[annotation]
    if len(args) != expected:
        raise OverlayError(
            f"annotation {annotation} takes {expected} argument(s), got {len(args)}",
            line_no=line_no,
        )

    return OverlayEntry(
        file_name=clauses["fileName"],
        line_no=target_line,
        element_type=element_type,
        element_name=clauses["elementName"],
        annotation=annotation,
        args=args,
        source_line=line_no,
    )


def parse_overlay(text: str) -> List[OverlayEntry]:
    """Parse an overlay file; raises OverlayError on the first malformed line."""
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        entries.append(parse_overlay_line(line, line_no))
    logger.debug("Parsed %d overlay entries", len(entries))
    return entries
