"""
Golden corpus tests and metamorphic checks on corpus programs.
"""

import json
from pathlib import Path

import networkx as nx
import pytest

from mustcall.analysis.cfg import predecessors
from mustcall.analysis.leakcheck import analyze_method
from mustcall.analysis.model import compute_rtype
from mustcall.config import Config
from mustcall.diagnostics.render import report_to_dict
from mustcall.errors import MustCallError
from mustcall.harness.corpus import (
    CorpusCase,
    load_case,
    load_corpus,
    run_case,
    run_case_result,
    run_corpus,
)

CORPUS_CASES = load_corpus(Path(__file__).resolve().parents[2] / "corpus")


def read_case(corpus_dir, name):
    return load_case(corpus_dir / name)


def only_file(case):
    (path,) = case.files
    return path, case.files[path]


def test_golden_corpus_passes(corpus_dir):
    """Test that every golden case produces exactly its expected reports."""
    summary = run_corpus(corpus_dir)

    assert summary.outcomes
    assert summary.passed, summary.format()
    assert summary.format().endswith(f"{len(summary.outcomes)}/{len(summary.outcomes)} cases passed\n")


def test_load_case(corpus_dir):
    """Test that a case carries its files, overlay, expectation and mode."""
    case = read_case(corpus_dir, "overlay_simple_eg")

    assert list(case.files) == ["RLCTests/SimpleEg.moo"]
    assert case.overlay is not None
    assert case.expected == [("RLCTests/SimpleEg.moo", 20, "ObjectCreation")]
    assert case.mode == "full"
    assert read_case(corpus_dir, "fig1_naive").mode == "naive"


def test_case_without_expectation(tmp_path):
    """Test that a case directory must hold expected.json."""
    case_dir = tmp_path / "empty"
    case_dir.mkdir()

    with pytest.raises(MustCallError, match="has no expected.json"):
        load_case(case_dir)


def test_broken_cases_fail_without_stopping_the_run(tmp_path):
    """Test that unreadable and unparsable cases are failures, not crashes."""
    (tmp_path / "a_missing").mkdir()
    broken = tmp_path / "b_broken"
    broken.mkdir()
    (broken / "expected.json").write_text('{"reports": []}', encoding="utf-8")
    (broken / "Bad.moo").write_text("class {", encoding="utf-8")

    summary = run_corpus(tmp_path)

    assert [outcome.name for outcome in summary.outcomes] == ["a_missing", "b_broken"]
    assert not summary.passed
    assert all(outcome.error for outcome in summary.failures)
    assert "FAIL b_broken" in summary.format()
    assert load_corpus(tmp_path) == [tmp_path / "a_missing", broken]


def test_outcome_lists_missing_and_unexpected():
    """Test that a case diff names both directions."""
    case = CorpusCase(
        name="diff",
        files={"A.moo": "class A { void m() { Socket s = new Socket(); } }"},
        expected=[("A.moo", 9, "ObjectCreation")],
    )

    outcome = run_case(case)
    assert outcome.missing == [("A.moo", 9, "ObjectCreation")]
    assert outcome.unexpected == [("A.moo", 1, "ObjectCreation")]
    assert "missing:    A.moo:9 ObjectCreation" in outcome.describe()


@pytest.mark.parametrize(
    "name, lines",
    [
        ("ex2_3_owning_transfer", [4]),
        ("ex2_4", [6]),
        ("ex2_6", [8]),
        ("ex2_7", [14]),
        ("ex2_5", [6, 23]),
        ("ex2_5_mutant", [6, 21]),
    ],
)
def test_naive_baseline_false_positives(corpus_dir, check, name, lines):
    """Test that the attribute-blind baseline reports creations the full mode accepts."""
    case = read_case(corpus_dir, name)
    path, text = only_file(case)

    naive = check(text, mode="naive", path=path)
    assert [(report.line, report.kind) for report in naive.reports] == [
        (line, "ObjectCreation") for line in lines
    ]


def test_using_and_manual_dispose_agree(corpus_dir, check):
    """Test that a using block and its hand-written try/finally give identical reports."""
    using = check(only_file(read_case(corpus_dir, "using_block"))[1], path="Example.moo")
    manual = check(only_file(read_case(corpus_dir, "using_manual"))[1], path="Example.moo")

    assert json.dumps([report_to_dict(r) for r in using.reports]) == json.dumps(
        [report_to_dict(r) for r in manual.reports]
    )


def test_overlay_and_inline_attributes_agree(corpus_dir):
    """Test that attributes from an overlay and the same attributes inline give identical reports."""
    overlay_case = read_case(corpus_dir, "overlay_simple_eg")
    inline_case = read_case(corpus_dir, "overlay_inline")
    from_overlay = run_case_result(overlay_case)
    inline = run_case_result(inline_case)

    assert from_overlay.errors == []
    assert [report_to_dict(r) for r in from_overlay.reports] == [
        report_to_dict(r) for r in inline.reports
    ]
    assert from_overlay.statistics["overlay_attributes"] == 2
    assert from_overlay.statistics["attributes"] == inline.statistics["attributes"]


@pytest.mark.parametrize(
    "name, sink_line",
    [
        ("ex2_2", 9),
        ("ex2_3_owning_transfer", 9),
        ("ex2_6", 11),
        ("ex2_7", 17),
        ("field_alias", 8),
    ],
)
def test_deleting_a_sink_never_removes_reports(corpus_dir, check, name, sink_line):
    """Test that removing a releasing statement cannot lower the report count."""
    path, text = only_file(read_case(corpus_dir, name))
    lines = text.splitlines()
    deleted = "\n".join(lines[: sink_line - 1] + [""] + lines[sink_line:]) + "\n"

    before = check(text, path=path)
    after = check(deleted, path=path)

    assert before.errors == [] and after.errors == []
    assert len(after.reports) >= len(before.reports)
    assert len(after.reports) > 0


def test_adding_a_release_removes_the_report(corpus_dir, check):
    """Test that closing the resource on the missing branch silences the leak."""
    path, text = only_file(read_case(corpus_dir, "fig1"))
    fixed = text.replace("work();\n        } else", "work();\n            a.Close();\n        } else")

    assert fixed != text
    assert [r.line for r in check(text, path=path).reports] == [1]
    assert check(fixed, path=path).reports == []


def case_contexts(case_dir):
    case = load_case(case_dir)
    result = run_case_result(case)
    config = Config(case.mode)
    contexts = [
        analyze_method(result.model, method, config) for method in result.model.user_methods()
    ]
    return result.model, contexts


@pytest.mark.parametrize("case_dir", CORPUS_CASES, ids=lambda path: path.name)
def test_resource_types_are_a_fixed_point(case_dir):
    """Test that recomputing the resource-type set of a corpus model changes nothing."""
    model, _ = case_contexts(case_dir)

    assert compute_rtype(model) == model.rtype


@pytest.mark.parametrize("case_dir", CORPUS_CASES, ids=lambda path: path.name)
def test_alias_closure_is_idempotent(case_dir):
    """Test that closing an already closed alias relation adds no pair."""
    _, contexts = case_contexts(case_dir)

    for ctx in contexts:
        again = nx.transitive_closure(ctx.aliases.closure, reflexive=True)
        assert set(again.edges) == ctx.aliases.pairs(), ctx.method.key


@pytest.mark.parametrize("case_dir", CORPUS_CASES, ids=lambda path: path.name)
def test_cfg_predecessors_invert_successors(case_dir):
    """Test that predecessor and successor lookups are exact transposes."""
    _, contexts = case_contexts(case_dir)

    for ctx in contexts:
        cfg = ctx.cfg
        for node in cfg.graph:
            assert all(node in predecessors(cfg, succ) for succ in cfg.successors(node))
            assert all(node in cfg.successors(pred) for pred in predecessors(cfg, node))


def test_corpus_exercises_finally_copies():
    """Test that the transpose check above covers CFGs with copied finally blocks."""
    labels = {
        info.label
        for case_dir in CORPUS_CASES
        for ctx in case_contexts(case_dir)[1]
        for info in ctx.cfg.nodes
    }

    assert "finally (exceptional)" in labels
