"""
Pytest configuration and fixtures for the must-call checker tests.
"""

from pathlib import Path

import pytest

from mustcall.analysis.leakcheck import analyze_method
from mustcall.analysis.model import build_model
from mustcall.config import Config
from mustcall.diagnostics.runner import analyze_sources
from mustcall.frontend.ast_nodes import SourceUnit
from mustcall.frontend.parser import parse_source

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture
def full_config():
    """Create the attribute-aware configuration."""
    return Config("full")


@pytest.fixture
def naive_config():
    """Create the attribute-blind baseline configuration."""
    return Config("naive")


@pytest.fixture
def corpus_dir():
    """Location of the golden corpus."""
    return CORPUS_DIR


@pytest.fixture
def parse_text():
    """Parse MiniOO text into a compilation unit."""

    def _parse(text, path="Test.moo"):
        return parse_source(SourceUnit(path, text))

    return _parse


@pytest.fixture
def model_of(parse_text):
    """Build a semantic model from one or more MiniOO sources."""

    def _model(*texts):
        units = [parse_text(text, f"Test{index}.moo") for index, text in enumerate(texts)]
        return build_model(units)

    return _model


@pytest.fixture
def context_of(model_of):
    """Analyze one method of a single-file program and return its context."""

    def _context(text, method_key, config=None):
        model = model_of(text)
        assert not model.errors, [str(error) for error in model.errors]
        return analyze_method(model, model.method(method_key), config or Config())

    return _context


@pytest.fixture
def check():
    """Run the checker on a single MiniOO file and return the run result."""

    def _check(text, mode="full", overlay=None, path="Test.moo"):
        return analyze_sources({path: text}, overlay_text=overlay, mode=Config(mode))

    return _check


@pytest.fixture
def report_lines():
    """(line, kind) pairs of a run result's reports."""

    def _lines(result):
        return [(report.line, report.kind) for report in result.reports]

    return _lines
