"""
Unit tests for control-flow graph construction.
"""

import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mustcall.analysis.cfg import (
    CfgNodeKind,
    EdgeKind,
    build_cfg,
    desugar_using,
    predecessors,
)
from mustcall.errors import ContractViolation
from mustcall.frontend.ast_nodes import Block, CallExpr, ExprStmt, LocalDecl, SourceUnit, Try
from mustcall.frontend.parser import parse_source
from mustcall.harness.generator import generate_program


@pytest.fixture
def cfg_of(parse_text):
    """Build the CFG of the first method in a class wrapping `body`."""

    def _cfg(body, params="bool b"):
        unit = parse_text(
            f"class A {{ void m({params}) {{ {body} }} void work() {{ }} void log() {{ }} }}"
        )
        return build_cfg(unit.classes[0].methods[0].body, "A.m")

    return _cfg


def labelled(cfg, label):
    return [info.id for info in cfg.nodes if info.label == label]


def test_straight_line(cfg_of):
    """Test that sequential statements form a chain from entry to exit."""
    cfg = cfg_of("Socket s = new Socket(); s.Dispose();")

    assert len(cfg) == 4
    assert cfg.node(cfg.entry).kind == CfgNodeKind.ENTRY
    assert cfg.node(cfg.exit).kind == CfgNodeKind.EXIT
    assert cfg.exit == len(cfg) - 1
    (decl,) = labelled(cfg, "Socket s = new Socket()")
    (dispose,) = labelled(cfg, "s.Dispose()")
    assert cfg.successors(cfg.entry) == frozenset({decl})
    assert cfg.successors(decl) == frozenset({dispose})
    assert cfg.successors(dispose) == frozenset({cfg.exit})
    assert cfg.exceptional_edges() == []


def test_if_branches_are_labelled(cfg_of):
    """Test that condition out-edges carry their branch value."""
    cfg = cfg_of("if (b) { work(); }")

    (cond,) = [info.id for info in cfg.nodes if info.kind == CfgNodeKind.EXPRESSION]
    (work,) = labelled(cfg, "work()")
    branches = {
        v: data["branch"] for _, v, data in cfg.graph.out_edges(cond, data=True)
    }
    assert branches == {work: True, cfg.exit: False}


def test_while_has_back_edge(cfg_of):
    """Test that the loop body flows back to the condition."""
    cfg = cfg_of("while (b) { work(); }")

    (cond,) = [info.id for info in cfg.nodes if info.kind == CfgNodeKind.EXPRESSION]
    (work,) = labelled(cfg, "work()")
    assert cond in cfg.successors(work)
    assert cfg.successors(cond) == frozenset({work, cfg.exit})


def test_try_body_statements_throw_to_catch(cfg_of):
    """Test that every try-body statement has an exceptional edge to the handler."""
    cfg = cfg_of("try { Socket s = new Socket(); work(); } catch (Exception e) { log(); }")

    (catch,) = labelled(cfg, "catch")
    (decl,) = labelled(cfg, "Socket s = new Socket()")
    (work,) = labelled(cfg, "work()")
    (log,) = labelled(cfg, "log()")
    assert sorted(cfg.exceptional_edges()) == sorted([(decl, catch), (work, catch)])
    assert cfg.node(catch).is_marker
    assert cfg.successors(catch) == frozenset({log})
    assert cfg.successors(log) == frozenset({cfg.exit})


def test_statements_outside_try_do_not_throw(cfg_of):
    """Test that code outside any try block has no exceptional edges."""
    cfg = cfg_of("Socket s = new Socket(); work(); s.Dispose();")

    assert cfg.exceptional_edges() == []


def test_throw_without_handler_goes_to_exit(cfg_of):
    """Test that an unhandled throw leaves the method exceptionally."""
    cfg = cfg_of("throw new Exception();")

    (throw,) = labelled(cfg, "throw new Exception()")
    assert cfg.exceptional_edges() == [(throw, cfg.exit)]


def test_rethrow_from_catch_leaves_method(cfg_of):
    """Test that `throw;` in a handler is routed past its own try."""
    cfg = cfg_of("try { work(); } catch (Exception) { throw; }")

    (throw,) = labelled(cfg, "throw")
    assert (throw, cfg.exit) in cfg.exceptional_edges()


def test_return_runs_finally(cfg_of):
    """Test that a return inside try reaches the exit only through the finally block."""
    cfg = cfg_of("try { return; } finally { work(); }")

    (ret,) = labelled(cfg, "return")
    work_nodes = set(labelled(cfg, "work()"))
    assert work_nodes
    without_finally = nx.restricted_view(cfg.graph, work_nodes, [])
    assert not nx.has_path(without_finally, ret, cfg.exit)
    assert nx.has_path(cfg.graph, ret, cfg.exit)
    assert labelled(cfg, "finally (return)")


def test_unreachable_statements_are_pruned(cfg_of):
    """Test that code after an unconditional return is not in the graph."""
    cfg = cfg_of("return; work();")

    assert labelled(cfg, "work()") == []
    assert len(cfg) == 3


def test_using_block_disposes_on_both_routes(cfg_of):
    """Test that using gets a synthesized Dispose on the normal and the exceptional route."""
    cfg = cfg_of("using (Socket s = new Socket()) { work(); }")

    disposals = [
        info
        for info in cfg.nodes
        if isinstance(info.ast, ExprStmt)
        and isinstance(info.ast.expr, CallExpr)
        and info.ast.expr.synthesized
    ]
    assert len(disposals) == 2
    assert len(labelled(cfg, "finally (exceptional)")) == 1

    (work,) = labelled(cfg, "work()")
    without_dispose = nx.restricted_view(cfg.graph, [info.id for info in disposals], [])
    assert not nx.has_path(without_dispose, work, cfg.exit)


def test_desugar_using_shape(parse_text):
    """Test the declaration plus try/finally form of a using statement."""
    unit = parse_text("class A { void m() { using (Socket s = new Socket()) { } } }")
    using = unit.classes[0].methods[0].body.stmts[0]

    block = desugar_using(using)
    declaration, guarded = block.stmts
    assert isinstance(block, Block)
    assert isinstance(declaration, LocalDecl)
    assert declaration.name == "s"
    assert isinstance(guarded, Try)
    assert guarded.catches == ()
    (dispose,) = guarded.finally_.stmts
    assert dispose.expr.name == "Dispose"
    assert dispose.expr.receiver.name == "s"
    assert dispose.expr.synthesized


def test_nested_using_releases_inner_first(cfg_of):
    """Test that nested using blocks dispose inner before outer on every route."""
    cfg = cfg_of(
        "using (Socket a = new Socket()) { using (Socket c = new Socket()) { work(); } }"
    )

    (inner,) = labelled(cfg, "Socket c = new Socket()")
    assert inner not in {u for u, _ in cfg.exceptional_edges()}

    (work,) = labelled(cfg, "work()")
    disposal_orders = {
        tuple(
            cfg.node(node).label
            for node in path
            if cfg.node(node).label.endswith(".Dispose()")
        )
        for path in nx.all_simple_paths(cfg.graph, work, cfg.exit)
    }
    assert disposal_orders == {("c.Dispose()", "a.Dispose()")}

    normal = nx.subgraph_view(
        cfg.graph,
        filter_edge=lambda u, v, k: cfg.graph.edges[u, v, k]["kind"] == EdgeKind.NORMAL,
    )
    assert [cfg.node(node).label for node in nx.shortest_path(normal, work, cfg.exit)] == [
        "work()",
        "c.Dispose()",
        "a.Dispose()",
        "exit",
    ]


def test_foreign_node_is_rejected(cfg_of):
    """Test that asking about a node outside the CFG is a contract violation."""
    cfg = cfg_of("work();")

    with pytest.raises(ContractViolation, match="does not belong"):
        predecessors(cfg, 99)


def test_dot_output(cfg_of):
    """Test that DOT output marks exceptional edges and branch labels."""
    cfg = cfg_of("try { if (b) { work(); } } catch { log(); }")
    dot = cfg.to_dot()

    assert dot.startswith('digraph "A.m" {')
    assert "style=dashed" in dot
    assert 'label="T"' in dot
    assert 'label="F"' in dot
    assert dot.rstrip().endswith("}")


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_predecessors_are_exact_transpose(seed):
    """Test that predecessors and successors agree on generated programs."""
    text = generate_program(random.Random(seed), "Gen")
    unit = parse_source(SourceUnit("Gen.moo", text))
    method = next(method for method in unit.classes[0].methods if method.name == "run")
    cfg = build_cfg(method.body, "Gen.run")

    for info in cfg.nodes:
        for pred in predecessors(cfg, info.id):
            assert info.id in cfg.successors(pred)
        for succ in cfg.successors(info.id):
            assert info.id in predecessors(cfg, succ)
    assert predecessors(cfg, cfg.entry) == frozenset()
    assert cfg.successors(cfg.exit) == frozenset()
    for info in cfg.nodes:
        assert nx.has_path(cfg.graph, cfg.entry, info.id)
        assert nx.has_path(cfg.graph, info.id, cfg.exit)
    for u, v in cfg.exceptional_edges():
        kinds = {data["kind"] for data in cfg.graph.get_edge_data(u, v).values()}
        assert EdgeKind.EXCEPTIONAL in kinds
