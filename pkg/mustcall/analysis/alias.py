"""
Intraprocedural alias relation between flow nodes.

Flow nodes are the value-carrying occurrences of one method: expression
occurrences, parameters, local definitions and field reads and writes. Each
node is tied to the CFG node that evaluates it, so a finally body that appears
on several routes gets one set of flow nodes per copy.

The relation is the reflexive transitive closure of three edge sets:
local value flow (reaching definitions along the CFG), resource aliasing
through MustCallAlias and field aliasing through writes and later reads of the
same declared field.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from mustcall.analysis.cfg import Cfg, CfgNodeKind, EdgeKind
from mustcall.analysis.model import MethodInfo, SemanticModel, resolve_call
from mustcall.config import Config
from mustcall.errors import ContractViolation
from mustcall.frontend.ast_nodes import (
    Assign,
    AttributeKind,
    CallExpr,
    Expr,
    ExprStmt,
    FieldAccess,
    LocalDecl,
    NameRef,
    NewExpr,
    Return,
    Span,
    Throw,
    child_expressions,
)

logger = logging.getLogger(__name__)


class FlowKind(str, Enum):
    EXPR = "expr"
    PARAM = "param"
    DEF = "def"
    FIELD_WRITE = "field-write"
    FIELD_READ = "field-read"


@dataclass(frozen=True)
class FlowNode:
    """One value occurrence in a method, anchored to a CFG node."""

    method_key: str
    cfg_node: int
    uid: int
    kind: FlowKind
    span: Optional[Span] = field(default=None, compare=False)
    variable: Optional[str] = field(default=None, compare=False)
    type_name: Optional[str] = field(default=None, compare=False)
    field_key: Optional[str] = field(default=None, compare=False)
    expr: Optional[Expr] = field(default=None, compare=False, repr=False)

    def sort_key(self) -> Tuple:
        span = self.span or Span("", 0, 0)
        return (span.file, span.line, span.column, self.cfg_node, self.uid, self.kind.value)

    def describe(self) -> str:
        where = f"{self.span.line}:{self.span.column}" if self.span else "?"
        name = self.variable or self.field_key or self.type_name or ""
        return f"{where} {self.kind.value}({name})"


# Facts of the reaching-definitions dataflow: (variable, defining or reading node)
Fact = Tuple[str, FlowNode]


def _is_value(expr: Optional[Expr], method: MethodInfo) -> bool:
    """Expressions that can hold a reference; literals, scalars and `this` cannot."""
    if isinstance(expr, (NewExpr, CallExpr, FieldAccess)):
        return True
    if isinstance(expr, NameRef):
        binding = method.resolution.binding_of(expr) if method.resolution else None
        return binding is not None and binding.kind != "type"
    return False


def _has_call(exprs: Iterable[Expr]) -> bool:
    stack = list(exprs)
    while stack:
        expr = stack.pop()
        if isinstance(expr, (NewExpr, CallExpr)):
            return True
        stack.extend(child_expressions(expr))
    return False


class MethodFlow:
    """Flow nodes of one method and the local value-flow graph between them."""

    def __init__(self, model: SemanticModel, method: MethodInfo, cfg: Cfg):
        if method.resolution is None:
            raise ContractViolation(f"method {method.key} has no resolved body")
        self.model = model
        self.method = method
        self.cfg = cfg
        self.method_key = method.key
        self.graph = nx.DiGraph()
        self.params: Dict[str, FlowNode] = {}
        # (cfg node, expression uid) -> flow node
        self._by_expr: Dict[Tuple[int, int], FlowNode] = {}
        self._defs: Dict[int, FlowNode] = {}
        self._writes: Dict[int, FlowNode] = {}
        self._build_nodes()
        self._build_local_flow()

    # Node enumeration

    @property
    def nodes(self) -> List[FlowNode]:
        return sorted(self.graph.nodes, key=FlowNode.sort_key)

    def node_for(self, cfg_node: int, expr: Optional[Expr]) -> Optional[FlowNode]:
        if expr is None:
            return None
        return self._by_expr.get((cfg_node, expr.uid))

    def definition_at(self, cfg_node: int) -> Optional[FlowNode]:
        return self._defs.get(cfg_node)

    def field_write_at(self, cfg_node: int) -> Optional[FlowNode]:
        return self._writes.get(cfg_node)

    def field_reads(self, field_key: str) -> List[FlowNode]:
        return [
            node
            for node in self.nodes
            if node.kind == FlowKind.FIELD_READ and node.field_key == field_key
        ]

    def roots_at(self, cfg_node: int) -> Tuple[Expr, ...]:
        """Expression trees evaluated at a CFG node, in evaluation order."""
        info = self.cfg.node(cfg_node)
        ast = info.ast
        if info.kind == CfgNodeKind.EXPRESSION:
            return (ast,)
        if isinstance(ast, LocalDecl):
            return (ast.init,) if ast.init is not None else ()
        if isinstance(ast, Assign):
            if isinstance(ast.target, FieldAccess):
                return (ast.target.receiver, ast.value)
            return (ast.value,)
        if isinstance(ast, ExprStmt):
            return (ast.expr,)
        if isinstance(ast, (Return, Throw)):
            return (ast.value,) if ast.value is not None else ()
        return ()

    def _add(self, node: FlowNode) -> FlowNode:
        self.graph.add_node(node)
        return node

    def _build_nodes(self) -> None:
        resolution = self.method.resolution
        assert resolution is not None

        for index, param in enumerate(self.method.params):
            self.params[param.name] = self._add(
                FlowNode(
                    self.method_key,
                    self.cfg.entry,
                    index,
                    FlowKind.PARAM,
                    span=param.span,
                    variable=param.name,
                    type_name=str(param.type),
                )
            )

        for info in self.cfg.nodes:
            if info.kind in (CfgNodeKind.ENTRY, CfgNodeKind.EXIT) or info.is_marker:
                continue
            for root in self.roots_at(info.id):
                self._expression_nodes(info.id, root)

            ast = info.ast
            if isinstance(ast, LocalDecl):
                self._defs[info.id] = self._add(
                    FlowNode(
                        self.method_key,
                        info.id,
                        ast.uid,
                        FlowKind.DEF,
                        span=ast.span,
                        variable=ast.name,
                        type_name=resolution.type_of(ast.init) if ast.init else str(ast.type),
                    )
                )
            elif isinstance(ast, Assign):
                binding = resolution.binding_of(ast.target)
                field_key = resolution.field_of(ast.target)
                if field_key is not None:
                    self._writes[info.id] = self._add(
                        FlowNode(
                            self.method_key,
                            info.id,
                            ast.target.uid,
                            FlowKind.FIELD_WRITE,
                            span=ast.target.span,
                            field_key=field_key,
                            type_name=resolution.type_of(ast.target),
                            expr=ast.target,
                        )
                    )
                elif binding is not None:
                    self._defs[info.id] = self._add(
                        FlowNode(
                            self.method_key,
                            info.id,
                            ast.uid,
                            FlowKind.DEF,
                            span=ast.span,
                            variable=binding.name,
                            type_name=resolution.type_of(ast.target),
                        )
                    )

    def _expression_nodes(self, cfg_node: int, expr: Expr) -> None:
        resolution = self.method.resolution
        assert resolution is not None
        for child in child_expressions(expr):
            self._expression_nodes(cfg_node, child)
        if not _is_value(expr, self.method):
            return

        field_key = resolution.field_of(expr)
        binding = resolution.binding_of(expr)
        kind = FlowKind.FIELD_READ if field_key is not None else FlowKind.EXPR
        variable = binding.name if binding is not None and binding.kind != "field" else None
        self._by_expr[(cfg_node, expr.uid)] = self._add(
            FlowNode(
                self.method_key,
                cfg_node,
                expr.uid,
                kind,
                span=expr.span,
                variable=variable,
                type_name=resolution.type_of(expr),
                field_key=field_key,
                expr=expr,
            )
        )

    # Local flow

    def _ordered_reads(self, cfg_node: int) -> List[FlowNode]:
        """Variable reads of a CFG node in evaluation order."""
        reads: List[FlowNode] = []

        def visit(expr: Expr) -> None:
            for child in child_expressions(expr):
                visit(child)
            node = self.node_for(cfg_node, expr)
            if node is not None and node.variable is not None:
                reads.append(node)

        for root in self.roots_at(cfg_node):
            visit(root)
        return reads

    def _value_node(self, cfg_node: int) -> Optional[FlowNode]:
        """The node whose value a definition or field write at `cfg_node` stores."""
        ast = self.cfg.node(cfg_node).ast
        if isinstance(ast, LocalDecl):
            return self.node_for(cfg_node, ast.init)
        if isinstance(ast, Assign):
            return self.node_for(cfg_node, ast.value)
        return None

    def _transfer(
        self, cfg_node: int, facts: FrozenSet[Fact], edges: Optional[Set[Tuple[FlowNode, FlowNode]]]
    ) -> FrozenSet[Fact]:
        current = set(facts)
        for read in self._ordered_reads(cfg_node):
            for variable, source in current:
                if variable == read.variable and edges is not None:
                    edges.add((source, read))
            current.add((read.variable, read))

        definition = self._defs.get(cfg_node)
        if definition is not None:
            current = {fact for fact in current if fact[0] != definition.variable}
            value = self._value_node(cfg_node)
            if value is not None:
                if edges is not None:
                    edges.add((value, definition))
                current.add((definition.variable, definition))
        return frozenset(current)

    def _build_local_flow(self) -> None:
        cfg = self.cfg
        entry_facts = frozenset((name, node) for name, node in self.params.items())
        has_call = {
            info.id: _has_call(self.roots_at(info.id))
            for info in cfg.nodes
            if not info.is_marker and info.kind != CfgNodeKind.EXIT
        }

        in_facts: Dict[int, FrozenSet[Fact]] = {cfg.entry: entry_facts}
        out_normal: Dict[int, FrozenSet[Fact]] = {}
        out_exceptional: Dict[int, FrozenSet[Fact]] = {}

        worklist = [info.id for info in cfg.nodes]
        while worklist:
            node_id = worklist.pop(0)
            incoming: Set[Fact] = set(entry_facts) if node_id == cfg.entry else set()
            for pred, _, data in cfg.graph.in_edges(node_id, data=True):
                source = out_exceptional if data["kind"] == EdgeKind.EXCEPTIONAL else out_normal
                incoming |= source.get(pred, frozenset())
            facts = frozenset(incoming)
            in_facts[node_id] = facts

            normal = self._transfer(node_id, facts, None)
            exceptional = normal if has_call.get(node_id, False) else facts
            if out_normal.get(node_id) != normal or out_exceptional.get(node_id) != exceptional:
                out_normal[node_id] = normal
                out_exceptional[node_id] = exceptional
                for succ in sorted(cfg.successors(node_id)):
                    if succ not in worklist:
                        worklist.append(succ)

        edges: Set[Tuple[FlowNode, FlowNode]] = set()
        for info in cfg.nodes:
            if info.kind == CfgNodeKind.EXIT:
                continue
            self._transfer(info.id, in_facts.get(info.id, frozenset()), edges)
            write = self._writes.get(info.id)
            value = self._value_node(info.id)
            if write is not None and value is not None:
                edges.add((value, write))
        self.graph.add_edges_from(edges)
        logger.debug(
            "Flow nodes for %s: %d nodes, %d local-flow edges",
            self.method_key,
            self.graph.number_of_nodes(),
            self.graph.number_of_edges(),
        )


def _require_same_method(n1: FlowNode, n2: FlowNode) -> None:
    if n1.method_key != n2.method_key:
        raise ContractViolation(
            f"flow nodes belong to different methods: {n1.method_key} and {n2.method_key}"
        )


def local_flow(flow: MethodFlow, n1: FlowNode, n2: FlowNode) -> bool:
    """Whether the value at n1 flows to n2 through locals, assignments and reads."""
    _require_same_method(n1, n2)
    if n1 == n2:
        return True
    if n1 not in flow.graph or n2 not in flow.graph:
        return False
    return nx.has_path(flow.graph, n1, n2)


def resource_alias_edges(flow: MethodFlow) -> List[Tuple[FlowNode, FlowNode]]:
    """(argument, call) pairs where a MustCallAlias parameter feeds a MustCallAlias return."""
    edges = []
    for node in flow.nodes:
        expr = node.expr
        if node.kind != FlowKind.EXPR or not isinstance(expr, (CallExpr, NewExpr)):
            continue
        for target in resolve_call(flow.model, flow.method, expr):
            if not target.has_return_attribute(AttributeKind.MUST_CALL_ALIAS):
                continue
            for index, param in enumerate(target.params):
                if index >= len(expr.args) or not param.has(AttributeKind.MUST_CALL_ALIAS):
                    continue
                argument = flow.node_for(node.cfg_node, expr.args[index])
                if argument is not None:
                    edges.append((argument, node))
    return edges


def is_resource_alias(flow: MethodFlow, n1: FlowNode, n2: FlowNode) -> bool:
    _require_same_method(n1, n2)
    return (n1, n2) in set(resource_alias_edges(flow))


def field_alias_edges(flow: MethodFlow) -> List[Tuple[FlowNode, FlowNode]]:
    """(write, read) pairs of the same declared field where the write can reach the read."""
    writes = [node for node in flow.nodes if node.kind == FlowKind.FIELD_WRITE]
    reads = [node for node in flow.nodes if node.kind == FlowKind.FIELD_READ]
    edges = []
    for write in writes:
        reachable = nx.descendants(flow.cfg.graph, write.cfg_node)
        for read in reads:
            if read.field_key == write.field_key and read.cfg_node in reachable:
                edges.append((write, read))
    return edges


def is_field_alias(flow: MethodFlow, n1: FlowNode, n2: FlowNode) -> bool:
    _require_same_method(n1, n2)
    if n1.kind != FlowKind.FIELD_WRITE or n2.kind != FlowKind.FIELD_READ:
        return False
    return (n1, n2) in set(field_alias_edges(flow))


class AliasRelation:
    """Reflexive, transitive alias pairs of one method."""

    def __init__(self, method_key: str, closure: nx.DiGraph):
        self.method_key = method_key
        self.closure = closure

    def contains(self, n1: FlowNode, n2: FlowNode) -> bool:
        if n1 == n2:
            return True
        return self.closure.has_edge(n1, n2)

    def aliases_of(self, node: FlowNode) -> Set[FlowNode]:
        if node not in self.closure:
            return {node}
        return set(self.closure.successors(node)) | {node}

    def pairs(self) -> Set[Tuple[FlowNode, FlowNode]]:
        return set(self.closure.edges)

    def __len__(self) -> int:
        return self.closure.number_of_edges()

    def dump(self) -> str:
        lines = [
            f"{self.method_key}: {a.describe()} -> {b.describe()}"
            for a, b in sorted(
                self.pairs(), key=lambda pair: (pair[0].sort_key(), pair[1].sort_key())
            )
            if a != b
        ]
        return "\n".join(lines)


def close_aliases(flow: MethodFlow, config: Optional[Config] = None) -> AliasRelation:
    """Least reflexive transitive relation over local flow, resource and field aliasing."""
    config = config or Config()
    graph = nx.DiGraph()
    graph.add_nodes_from(flow.graph.nodes)
    graph.add_edges_from(flow.graph.edges)
    if config.use_resource_alias:
        graph.add_edges_from(resource_alias_edges(flow))
    if config.use_field_alias:
        graph.add_edges_from(field_alias_edges(flow))

    closure = nx.transitive_closure(graph, reflexive=True)
    logger.debug(
        "Alias closure for %s: %d pairs over %d nodes",
        flow.method_key,
        closure.number_of_edges(),
        closure.number_of_nodes(),
    )
    return AliasRelation(flow.method_key, closure)
