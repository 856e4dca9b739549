"""
Unit tests for local value flow and the alias relation.
"""

import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mustcall.analysis.alias import (
    FlowKind,
    MethodFlow,
    close_aliases,
    field_alias_edges,
    is_field_alias,
    is_resource_alias,
    local_flow,
    resource_alias_edges,
)
from mustcall.analysis.cfg import build_cfg
from mustcall.analysis.leakcheck import analyze_method
from mustcall.analysis.model import build_model
from mustcall.config import Config
from mustcall.errors import ContractViolation
from mustcall.frontend.ast_nodes import CallExpr, NewExpr, SourceUnit
from mustcall.frontend.parser import parse_source
from mustcall.harness.generator import generate_program


def creation(flow, type_name):
    (node,) = [
        node
        for node in flow.nodes
        if isinstance(node.expr, NewExpr) and node.type_name == type_name
    ]
    return node


def reads(flow, variable):
    return [
        node
        for node in flow.nodes
        if node.kind == FlowKind.EXPR and node.variable == variable
    ]


def call(flow, name):
    (node,) = [
        node for node in flow.nodes if isinstance(node.expr, CallExpr) and node.expr.name == name
    ]
    return node


def test_copy_flows_to_receiver(context_of):
    """Test that a value flows through a copy into a later receiver."""
    ctx = context_of(
        "class A { void m() { Socket s1 = new Socket(); Socket s2 = s1; s2.Dispose(); } }",
        "A.m",
    )
    flow = ctx.flow
    socket = creation(flow, "Socket")
    (receiver,) = reads(flow, "s2")

    assert local_flow(flow, socket, receiver)
    assert not local_flow(flow, receiver, socket)
    assert local_flow(flow, socket, socket)
    assert ctx.aliases.contains(socket, receiver)


def test_reassignment_kills_the_old_value(context_of):
    """Test that a reassignment stops the old value reaching later reads."""
    ctx = context_of(
        "class A { void m() { Socket s = new Socket(); s = new Socket(); s.Dispose(); } }",
        "A.m",
    )
    flow = ctx.flow
    first, second = sorted(
        (node for node in flow.nodes if isinstance(node.expr, NewExpr)),
        key=lambda node: node.span.column,
    )
    (receiver,) = reads(flow, "s")

    assert not local_flow(flow, first, receiver)
    assert local_flow(flow, second, receiver)


def test_both_branches_reach_the_join(context_of):
    """Test that definitions on either branch reach a read after the if."""
    ctx = context_of(
        "class A { void m(bool b) { Socket s = null;"
        " if (b) { s = new Socket(); } else { s = new Socket(); } s.Dispose(); } }",
        "A.m",
    )
    flow = ctx.flow
    creations = [node for node in flow.nodes if isinstance(node.expr, NewExpr)]
    (receiver,) = reads(flow, "s")

    assert len(creations) == 2
    assert all(local_flow(flow, node, receiver) for node in creations)


def test_loop_carried_flow(context_of):
    """Test that a definition in a loop body reaches reads at the top of the loop."""
    ctx = context_of(
        "class A { void m(bool b) { Socket s = new Socket();"
        " while (b) { s.Dispose(); s = new Socket(); } } }",
        "A.m",
    )
    flow = ctx.flow
    (receiver,) = reads(flow, "s")
    creations = [node for node in flow.nodes if isinstance(node.expr, NewExpr)]

    assert all(local_flow(flow, node, receiver) for node in creations)


def test_throwing_statement_carries_its_definition(context_of):
    """Test that a definition made by a call reaches the handler through its exceptional edge."""
    ctx = context_of(
        "class A { void m() { Socket s = null;"
        " try { s = new Socket(); } catch { s.Dispose(); } } }",
        "A.m",
    )
    flow = ctx.flow

    assert local_flow(flow, creation(flow, "Socket"), reads(flow, "s")[0])


def test_parameters_are_flow_nodes(context_of):
    """Test that parameters flow into their reads."""
    ctx = context_of("class A { void m(Socket p) { p.Dispose(); } }", "A.m")
    flow = ctx.flow
    param = flow.params["p"]

    assert param.kind == FlowKind.PARAM
    assert param.cfg_node == ctx.cfg.entry
    assert local_flow(flow, param, reads(flow, "p")[0])


def test_resource_alias_through_wrapper_constructor(context_of, naive_config):
    """Test that a MustCallAlias constructor argument aliases the wrapper."""
    text = (
        "class A { void m() { Stream st = new Stream();"
        ' StreamReader r = new StreamReader(st, "UTF-8"); r.Dispose(); } }'
    )
    ctx = context_of(text, "A.m")
    flow = ctx.flow
    stream = creation(flow, "Stream")
    wrapper = creation(flow, "StreamReader")
    (argument,) = reads(flow, "st")
    (receiver,) = reads(flow, "r")

    assert resource_alias_edges(flow) == [(argument, wrapper)]
    assert is_resource_alias(flow, argument, wrapper)
    assert not is_resource_alias(flow, wrapper, argument)
    assert not local_flow(flow, stream, receiver)
    assert ctx.aliases.contains(stream, receiver)

    naive = context_of(text, "A.m", naive_config)
    assert not naive.aliases.contains(creation(naive.flow, "Stream"), reads(naive.flow, "r")[0])


def test_resource_alias_through_method(corpus_dir, model_of):
    """Test that a MustCallAlias method argument aliases the returned value."""
    text = (corpus_dir / "ex2_6" / "Example.moo").read_text(encoding="utf-8")
    model = model_of(text)
    ctx = analyze_method(model, model.method("Example.Main"))
    flow = ctx.flow
    socket = creation(flow, "Socket")
    alias_call = call(flow, "createAlias")
    (receiver,) = reads(flow, "new_sock")

    assert [edge[1] for edge in resource_alias_edges(flow)] == [alias_call]
    assert ctx.aliases.contains(socket, receiver)


def test_field_alias_follows_cfg_order(context_of):
    """Test that a field write aliases reads it can reach and no others."""
    ctx = context_of(
        "class H { Socket f; void m() { f.Dispose(); f = new Socket(); f.Close(); } }",
        "H.m",
    )
    flow = ctx.flow
    (write,) = [node for node in flow.nodes if node.kind == FlowKind.FIELD_WRITE]
    early, late = sorted(flow.field_reads("H.f"), key=lambda node: node.span.column)

    assert field_alias_edges(flow) == [(write, late)]
    assert is_field_alias(flow, write, late)
    assert not is_field_alias(flow, write, early)
    assert not is_field_alias(flow, late, write)
    assert ctx.aliases.contains(creation(flow, "Socket"), late)
    assert not ctx.aliases.contains(creation(flow, "Socket"), early)


def test_field_alias_through_receiver(corpus_dir, model_of):
    """Test that `t.f = s` aliases s with a later `t.f` read."""
    text = (corpus_dir / "field_alias" / "Example.moo").read_text(encoding="utf-8")
    model = model_of(text)
    ctx = analyze_method(model, model.method("Example.Run"))
    flow = ctx.flow
    (read,) = flow.field_reads("Holder.f")

    assert ctx.aliases.contains(creation(flow, "Socket"), read)

    without = analyze_method(model, model.method("Example.Run"), Config("naive"))
    (naive_read,) = without.flow.field_reads("Holder.f")
    assert not without.aliases.contains(creation(without.flow, "Socket"), naive_read)


def test_nodes_of_different_methods_are_rejected(model_of):
    """Test that alias queries across methods are contract violations."""
    model = model_of("class A { void m(Socket s) { } void n(Socket t) { } }")
    first = analyze_method(model, model.method("A.m"))
    second = analyze_method(model, model.method("A.n"))

    with pytest.raises(ContractViolation, match="different methods"):
        local_flow(first.flow, first.flow.params["s"], second.flow.params["t"])


def test_unresolved_method_has_no_flow(model_of):
    """Test that flow nodes need a resolved body."""
    model = model_of("class A { void m() { missing(); } }")
    method = model.method("A.m")

    with pytest.raises(ContractViolation, match="no resolved body"):
        MethodFlow(model, method, build_cfg(method.body, method.key))


def test_alias_dump_lists_pairs(context_of):
    """Test that the alias dump names the method and skips reflexive pairs."""
    ctx = context_of("class A { void m() { Socket s = new Socket(); s.Dispose(); } }", "A.m")
    lines = ctx.aliases.dump().splitlines()

    assert lines
    assert all(line.startswith("A.m: ") for line in lines)
    assert len(lines) == len([pair for pair in ctx.aliases.pairs() if pair[0] != pair[1]])


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_closure_is_reflexive_and_transitive(seed):
    """Test the closure laws of the alias relation on generated programs."""
    text = generate_program(random.Random(seed), "Gen")
    model = build_model([parse_source(SourceUnit("Gen.moo", text))])
    ctx = analyze_method(model, model.method("Gen.run"))
    relation = ctx.aliases

    for node in ctx.flow.nodes:
        assert relation.contains(node, node)
    for a, b in relation.pairs():
        for c in relation.aliases_of(b):
            assert relation.contains(a, c)

    again = nx.transitive_closure(relation.closure, reflexive=True)
    assert set(again.edges) == relation.pairs()
