"""
Per-method control-flow graphs.

Graphs are networkx MultiDiGraphs over dense integer node ids. Each edge carries
a ``kind`` (normal or exceptional) and an optional ``branch`` label (True or
False) when it leaves a condition node. Parallel edges are kept, so an ``if``
with an empty branch still has one edge per outcome.

Only statements inside a try block get exceptional edges. Faults outside any
try block are not modelled. The resource declaration of a desugared
using-block gets none either: if acquiring throws, nothing is bound.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from mustcall.errors import ContractViolation
from mustcall.frontend.ast_nodes import (
    Assign,
    Block,
    CallExpr,
    CatchClause,
    ExprStmt,
    If,
    LocalDecl,
    NameRef,
    Return,
    Span,
    Stmt,
    Throw,
    Try,
    Using,
    While,
)
from mustcall.frontend.printer import format_expr

logger = logging.getLogger(__name__)

Pending = List[Tuple[int, Dict[str, Any]]]


class CfgNodeKind(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"
    STATEMENT = "statement"
    EXPRESSION = "expression"


class EdgeKind(str, Enum):
    NORMAL = "normal"
    EXCEPTIONAL = "exceptional"


@dataclass(frozen=True)
class CfgNode:
    id: int
    kind: CfgNodeKind
    ast: Optional[Any] = field(default=None, compare=False, repr=False)
    span: Optional[Span] = None
    label: str = ""

    @property
    def is_marker(self) -> bool:
        """Catch-handler and finally-copy entry points evaluate nothing."""
        return self.kind == CfgNodeKind.STATEMENT and isinstance(
            self.ast, (CatchClause, Block)
        )


# Using-block desugaring


def desugar_using(stmt: Using) -> Block:
    """`using (T v = e) B` becomes `{ T v = e; try B finally { v.Dispose(); } }`."""
    base = -(abs(stmt.uid) * 8)
    span = stmt.span
    receiver = NameRef(stmt.name, span=span, uid=base - 1)
    dispose = CallExpr(receiver, "Dispose", (), span=span, uid=base - 2, synthesized=True)
    finally_block = Block(
        (ExprStmt(dispose, span=span, uid=base - 3),), span=span, uid=base - 4
    )
    declaration = LocalDecl(
        stmt.type, stmt.name, stmt.init, span=span, uid=base - 5, using_resource=True
    )
    guarded = Try(desugar_body(stmt.body), (), finally_block, span=span, uid=base - 6)
    return Block((declaration, guarded), span=span, uid=base - 7)


def desugar_body(block: Block) -> Block:
    """Replace every using-block in a body by its try/finally form."""
    return dataclasses.replace(block, stmts=tuple(_desugar(stmt) for stmt in block.stmts))


def _desugar(stmt: Stmt) -> Stmt:
    if isinstance(stmt, Using):
        return desugar_using(stmt)
    if isinstance(stmt, Block):
        return desugar_body(stmt)
    if isinstance(stmt, If):
        orelse = desugar_body(stmt.orelse) if stmt.orelse is not None else None
        return dataclasses.replace(stmt, then=desugar_body(stmt.then), orelse=orelse)
    if isinstance(stmt, While):
        return dataclasses.replace(stmt, body=desugar_body(stmt.body))
    if isinstance(stmt, Try):
        catches = tuple(
            dataclasses.replace(clause, body=desugar_body(clause.body))
            for clause in stmt.catches
        )
        finally_block = desugar_body(stmt.finally_) if stmt.finally_ is not None else None
        return dataclasses.replace(
            stmt, body=desugar_body(stmt.body), catches=catches, finally_=finally_block
        )
    return stmt


# Graph


class Cfg:
    """Control-flow graph of one method body."""

    def __init__(self, method_key: str, graph: nx.MultiDiGraph, entry: int, exit_node: int):
        self.method_key = method_key
        self.graph = graph
        self.entry = entry
        self.exit = exit_node

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.graph

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def nodes(self) -> List[CfgNode]:
        return [self.graph.nodes[node_id]["info"] for node_id in sorted(self.graph)]

    def node(self, node_id: int) -> CfgNode:
        self._require(node_id)
        return self.graph.nodes[node_id]["info"]

    def successors(self, node_id: int) -> FrozenSet[int]:
        self._require(node_id)
        return frozenset(self.graph.successors(node_id))

    def predecessors(self, node_id: int) -> FrozenSet[int]:
        self._require(node_id)
        return frozenset(self.graph.predecessors(node_id))

    def edges(self) -> List[Tuple[int, int, int, Dict[str, Any]]]:
        return sorted(self.graph.edges(keys=True, data=True), key=lambda e: e[:3])

    def exceptional_edges(self) -> List[Tuple[int, int]]:
        return [
            (u, v)
            for u, v, _, data in self.edges()
            if data["kind"] == EdgeKind.EXCEPTIONAL
        ]

    def _require(self, node_id: int) -> None:
        if node_id not in self.graph:
            raise ContractViolation(f"node {node_id} does not belong to the CFG of {self.method_key}")

    def to_dot(self) -> str:
        lines = [f'digraph "{self.method_key}" {{']
        for info in self.nodes:
            where = f" @{info.span.line}" if info.span is not None else ""
            label = f"{info.id}: {info.label}{where}".replace('"', '\\"')
            lines.append(f'  n{info.id} [label="{label}"];')
        for u, v, _, data in self.edges():
            attributes = []
            if data["kind"] == EdgeKind.EXCEPTIONAL:
                attributes.append("style=dashed")
            if data.get("branch") is not None:
                attributes.append(f'label="{"T" if data["branch"] else "F"}"')
            suffix = f" [{', '.join(attributes)}]" if attributes else ""
            lines.append(f"  n{u} -> n{v}{suffix};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def predecessors(cfg: Cfg, node: int) -> FrozenSet[int]:
    """Exact transpose lookup, exceptional predecessors included."""
    return cfg.predecessors(node)


@dataclass
class _TryFrame:
    stmt: Try
    catch_entries: List[int]
    mode: str = "body"
    exceptional_finally: Optional[int] = None
    return_finally: Optional[int] = None


def _describe(stmt: Stmt) -> str:
    if isinstance(stmt, LocalDecl):
        init = "" if stmt.init is None else f" = {format_expr(stmt.init)}"
        return f"{stmt.type} {stmt.name}{init}"
    if isinstance(stmt, Assign):
        return f"{format_expr(stmt.target)} = {format_expr(stmt.value)}"
    if isinstance(stmt, ExprStmt):
        return format_expr(stmt.expr)
    if isinstance(stmt, Return):
        return "return" if stmt.value is None else f"return {format_expr(stmt.value)}"
    if isinstance(stmt, Throw):
        return "throw" if stmt.value is None else f"throw {format_expr(stmt.value)}"
    return type(stmt).__name__


class _CfgBuilder:
    def __init__(self, method_key: str):
        self.method_key = method_key
        self.graph = nx.MultiDiGraph()
        self.frames: List[_TryFrame] = []
        self._next_id = 0
        self.entry = self._add(CfgNodeKind.ENTRY, label="entry")
        self.exit = self._add(CfgNodeKind.EXIT, label="exit")

    def _add(
        self,
        kind: CfgNodeKind,
        ast: Optional[Any] = None,
        span: Optional[Span] = None,
        label: str = "",
    ) -> int:
        node_id = self._next_id
        self._next_id += 1
        self.graph.add_node(node_id, info=CfgNode(node_id, kind, ast, span, label))
        return node_id

    def _connect(self, pending: Pending, target: int, kind: Optional[EdgeKind] = None) -> None:
        for source, data in pending:
            self.graph.add_edge(
                source,
                target,
                kind=kind or data.get("kind", EdgeKind.NORMAL),
                branch=data.get("branch"),
            )

    def _node(
        self,
        kind: CfgNodeKind,
        ast: Any,
        span: Span,
        label: str,
        pending: Pending,
        throws: bool = True,
    ) -> int:
        node_id = self._add(kind, ast, span, label)
        self._connect(pending, node_id)
        if throws and any(frame.mode == "body" for frame in self.frames):
            for target in self._exception_targets(len(self.frames)):
                self.graph.add_edge(node_id, target, kind=EdgeKind.EXCEPTIONAL, branch=None)
        return node_id

    # Exception and return routing

    def _exception_targets(self, depth: int) -> List[int]:
        for index in range(depth - 1, -1, -1):
            frame = self.frames[index]
            if frame.mode == "body":
                if frame.catch_entries:
                    return list(frame.catch_entries)
                return [self._finally_copy(index, exceptional=True)]
            if frame.mode == "catch" and frame.stmt.finally_ is not None:
                return [self._finally_copy(index, exceptional=True)]
        return [self.exit]

    def _return_targets(self, depth: int) -> List[int]:
        for index in range(depth - 1, -1, -1):
            frame = self.frames[index]
            if frame.mode in ("body", "catch") and frame.stmt.finally_ is not None:
                return [self._finally_copy(index, exceptional=False)]
        return [self.exit]

    def _finally_copy(self, index: int, exceptional: bool) -> int:
        """Entry of the finally copy that a non-normal route through frame `index` takes."""
        frame = self.frames[index]
        existing = frame.exceptional_finally if exceptional else frame.return_finally
        if existing is not None:
            return existing

        finally_block = frame.stmt.finally_
        assert finally_block is not None
        route = "exceptional" if exceptional else "return"
        marker = self._add(
            CfgNodeKind.STATEMENT, finally_block, finally_block.span, f"finally ({route})"
        )
        if exceptional:
            frame.exceptional_finally = marker
        else:
            frame.return_finally = marker

        saved = self.frames
        self.frames = saved[:index]
        try:
            out = self._block(finally_block, [(marker, {})])
            if exceptional:
                for target in self._exception_targets(index):
                    self._connect(out, target, EdgeKind.EXCEPTIONAL)
            else:
                for target in self._return_targets(index):
                    self._connect(out, target)
        finally:
            self.frames = saved
        return marker

    # Statements

    def _block(self, block: Block, pending: Pending) -> Pending:
        for stmt in block.stmts:
            pending = self._stmt(stmt, pending)
        return pending

    def _stmt(self, stmt: Stmt, pending: Pending) -> Pending:
        if isinstance(stmt, Block):
            return self._block(stmt, pending)

        if isinstance(stmt, (LocalDecl, Assign, ExprStmt)):
            # A using resource that fails to acquire binds nothing
            throws = not (isinstance(stmt, LocalDecl) and stmt.using_resource)
            node_id = self._node(
                CfgNodeKind.STATEMENT, stmt, stmt.span, _describe(stmt), pending, throws
            )
            return [(node_id, {})]

        if isinstance(stmt, Return):
            node_id = self._node(CfgNodeKind.STATEMENT, stmt, stmt.span, _describe(stmt), pending)
            for target in self._return_targets(len(self.frames)):
                self.graph.add_edge(node_id, target, kind=EdgeKind.NORMAL, branch=None)
            return []

        if isinstance(stmt, Throw):
            node_id = self._add(CfgNodeKind.STATEMENT, stmt, stmt.span, _describe(stmt))
            self._connect(pending, node_id)
            for target in self._exception_targets(len(self.frames)):
                self.graph.add_edge(node_id, target, kind=EdgeKind.EXCEPTIONAL, branch=None)
            return []

        if isinstance(stmt, If):
            cond = self._node(
                CfgNodeKind.EXPRESSION, stmt.cond, stmt.span, f"if {format_expr(stmt.cond)}", pending
            )
            out = self._block(stmt.then, [(cond, {"branch": True})])
            if stmt.orelse is not None:
                out += self._block(stmt.orelse, [(cond, {"branch": False})])
            else:
                out.append((cond, {"branch": False}))
            return out

        if isinstance(stmt, While):
            cond = self._node(
                CfgNodeKind.EXPRESSION,
                stmt.cond,
                stmt.span,
                f"while {format_expr(stmt.cond)}",
                pending,
            )
            body_out = self._block(stmt.body, [(cond, {"branch": True})])
            self._connect(body_out, cond)
            return [(cond, {"branch": False})]

        if isinstance(stmt, Try):
            return self._try(stmt, pending)

        if isinstance(stmt, Using):
            return self._stmt(desugar_using(stmt), pending)

        raise TypeError(f"unexpected statement {stmt!r}")

    def _try(self, stmt: Try, pending: Pending) -> Pending:
        entries = [
            self._add(CfgNodeKind.STATEMENT, clause, clause.span, "catch")
            for clause in stmt.catches
        ]
        frame = _TryFrame(stmt, entries)
        self.frames.append(frame)
        out = self._block(stmt.body, pending)
        frame.mode = "catch"
        for clause, entry in zip(stmt.catches, entries):
            out += self._block(clause.body, [(entry, {})])
        self.frames.pop()

        if stmt.finally_ is not None:
            out = self._block(stmt.finally_, out)
        return out

    # Finishing

    def build(self, body: Block) -> Cfg:
        out = self._block(body, [(self.entry, {})])
        self._connect(out, self.exit)

        graph = self.graph
        keep = ({self.entry} | nx.descendants(graph, self.entry)) & (
            {self.exit} | nx.ancestors(graph, self.exit)
        )
        pruned = graph.subgraph(keep).copy()

        order = sorted(node_id for node_id in pruned if node_id != self.exit) + [self.exit]
        mapping = {old: new for new, old in enumerate(order)}
        relabeled = nx.relabel_nodes(pruned, mapping, copy=True)
        for old, new in mapping.items():
            relabeled.nodes[new]["info"] = dataclasses.replace(
                pruned.nodes[old]["info"], id=new
            )

        cfg = Cfg(self.method_key, relabeled, mapping[self.entry], mapping[self.exit])
        logger.debug(
            "Built CFG for %s: %d nodes, %d edges (%d pruned)",
            self.method_key,
            relabeled.number_of_nodes(),
            relabeled.number_of_edges(),
            graph.number_of_nodes() - pruned.number_of_nodes(),
        )
        return cfg


def build_cfg(body: Block, method_key: str = "<method>") -> Cfg:
    """Build the CFG of a method body; using-blocks are desugared first."""
    return _CfgBuilder(method_key).build(desugar_body(body))
