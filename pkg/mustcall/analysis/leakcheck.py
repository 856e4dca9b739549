"""
Leak checking over sources, sinks and the alias relation.

A source starts an obligation to call a release method on a resource. A sink
discharges the obligations of every source it is aliased to. A source leaks
when its CFG node can reach the method exit once every node holding a
discharging sink and every edge on which the resource is known to be null
has been removed.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

import networkx as nx

from mustcall.analysis.alias import AliasRelation, FlowNode, MethodFlow, close_aliases
from mustcall.analysis.cfg import Cfg, CfgNodeKind, build_cfg
from mustcall.analysis.model import FieldInfo, MethodInfo, SemanticModel, TypeInfo, resolve_call
from mustcall.config import Config
from mustcall.constants import Constants
from mustcall.frontend.ast_nodes import (
    Assign,
    AttributeKind,
    CallExpr,
    Expr,
    NewExpr,
    NullCompare,
    NullLiteral,
    Return,
    Span,
    ThisExpr,
    find_attribute,
    iter_expressions,
)

logger = logging.getLogger(__name__)

Edge = Tuple[int, int, int]


class SourceKind(str, Enum):
    OBJECT_CREATION = "ObjectCreation"
    OWNING_RETURN_CALL = "OwningReturnCall"
    CREATE_MUST_CALL_FOR_CALL = "CreateMustCallForCall"
    OWNING_PARAMETER = "OwningParameter"

    def __str__(self) -> str:
        return self.value


class SinkKind(str, Enum):
    CLOSE_DISPOSE_CALL = "CloseDisposeCall"
    OWNING_RETURN_EXPR = "OwningReturnExpr"
    OWNING_ARGUMENT_CALL = "OwningArgumentCall"
    ENSURES_CALLED_METHODS_CALL = "EnsuresCalledMethodsCall"
    USING_DISPOSE = "UsingDispose"
    NULL_DISCHARGE = "NullDischarge"
    OWNING_FIELD_WRITE = "OwningFieldWrite"

    def __str__(self) -> str:
        return self.value


OWNING_FIELD_KIND = "OwningField"
CREATE_MUST_CALL_FOR_KIND = "CreateMustCallFor"


@dataclass(frozen=True)
class SourceObligation:
    kind: SourceKind
    node: FlowNode
    release_method: str
    span: Span
    type_name: Optional[str] = None
    # Field key of a CreateMustCallFor obligation
    field: Optional[str] = None
    callee: Optional[str] = None
    param: Optional[str] = None

    @property
    def cfg_node(self) -> int:
        return self.node.cfg_node


@dataclass(frozen=True)
class SinkDischarge:
    kind: SinkKind
    node: FlowNode
    cfg_node: int
    field: Optional[str] = None
    # Set for null discharges, which live on a branch edge rather than a node
    edge: Optional[Edge] = None


@dataclass(frozen=True)
class LeakReport:
    file: str
    line: int
    kind: str
    message: str
    witness: Optional[Tuple[int, ...]] = field(default=None, compare=False)

    def sort_key(self) -> Tuple[str, int, int, str]:
        order = (
            Constants.SOURCE_KIND_ORDER.index(self.kind)
            if self.kind in Constants.SOURCE_KIND_ORDER
            else len(Constants.SOURCE_KIND_ORDER)
        )
        return (self.file, self.line, order, self.message)

    @property
    def triple(self) -> Tuple[str, int, str]:
        return (self.file, self.line, self.kind)


def sort_reports(reports: Iterable[LeakReport]) -> List[LeakReport]:
    """Order by (file, line, kind, message) and drop duplicates of the same finding."""
    unique: Dict[Tuple[str, int, str, str], LeakReport] = {}
    for report in sorted(reports, key=LeakReport.sort_key):
        unique.setdefault((report.file, report.line, report.kind, report.message), report)
    return list(unique.values())


@dataclass
class MethodContext:
    """Everything the per-method checks need about one method."""

    model: SemanticModel
    method: MethodInfo
    cfg: Cfg
    flow: MethodFlow
    aliases: AliasRelation
    config: Config


def analyze_method(
    model: SemanticModel, method: MethodInfo, config: Optional[Config] = None
) -> MethodContext:
    config = config or Config()
    cfg = build_cfg(method.body, method.key)
    flow = MethodFlow(model, method, cfg)
    return MethodContext(model, method, cfg, flow, close_aliases(flow, config), config)


def _call_sites(ctx: MethodContext) -> Iterable[Tuple[int, Expr]]:
    """(cfg node, expression) for every expression evaluated in the method."""
    for info in ctx.cfg.nodes:
        if info.kind in (CfgNodeKind.ENTRY, CfgNodeKind.EXIT) or info.is_marker:
            continue
        for root in ctx.flow.roots_at(info.id):
            for expr in iter_expressions(root):
                yield info.id, expr


def _explicit_receiver(ctx: MethodContext, cfg_node: int, call: CallExpr) -> Optional[FlowNode]:
    if call.receiver is None or isinstance(call.receiver, ThisExpr):
        return None
    return ctx.flow.node_for(cfg_node, call.receiver)


def _field_key(model: SemanticModel, owner: str, name: str) -> str:
    info = model.lookup_field(owner, name)
    return info.key if info is not None else f"{owner}.{name}"


def _is_wrapper_creation(ctx: MethodContext, expr: NewExpr) -> bool:
    if not ctx.config.use_resource_alias:
        return False
    return any(
        target.is_must_call_alias for target in resolve_call(ctx.model, ctx.method, expr)
    )


# Sources


def find_sources(ctx: MethodContext) -> List[SourceObligation]:
    """Resource acquisitions in a method, ordered by source span."""
    model = ctx.model
    sources: List[SourceObligation] = []

    for cfg_node, expr in _call_sites(ctx):
        node = ctx.flow.node_for(cfg_node, expr)
        if isinstance(expr, NewExpr) and node is not None:
            type_name = str(expr.type)
            if model.is_rtype(type_name) and not _is_wrapper_creation(ctx, expr):
                sources.append(
                    SourceObligation(
                        SourceKind.OBJECT_CREATION,
                        node,
                        model.release_method(type_name),
                        expr.span,
                        type_name=type_name,
                    )
                )
        elif isinstance(expr, CallExpr) and node is not None:
            targets = resolve_call(model, ctx.method, expr)
            if any(target.has_return_attribute(AttributeKind.OWNING) for target in targets):
                type_name = node.type_name
                sources.append(
                    SourceObligation(
                        SourceKind.OWNING_RETURN_CALL,
                        node,
                        model.release_method(type_name),
                        expr.span,
                        type_name=type_name,
                        callee=expr.name,
                    )
                )
            receiver = _explicit_receiver(ctx, cfg_node, expr)
            for target in targets:
                field_name = target.create_must_call_for
                if field_name is None or receiver is None:
                    continue
                info = model.lookup_field(target.owner, field_name)
                type_name = str(info.type) if info is not None else None
                sources.append(
                    SourceObligation(
                        SourceKind.CREATE_MUST_CALL_FOR_CALL,
                        receiver,
                        model.release_method(type_name),
                        expr.span,
                        type_name=type_name,
                        field=_field_key(model, target.owner, field_name),
                        callee=expr.name,
                    )
                )
                break

    for param in ctx.method.params:
        if param.has(AttributeKind.OWNING):
            type_name = str(param.type)
            sources.append(
                SourceObligation(
                    SourceKind.OWNING_PARAMETER,
                    ctx.flow.params[param.name],
                    model.release_method(type_name),
                    param.span,
                    type_name=type_name,
                    param=param.name,
                )
            )

    sources.sort(key=lambda source: (source.span, source.kind.value, source.cfg_node))
    return sources


# Sinks


def _release_call(model: SemanticModel, call: CallExpr, receiver: FlowNode) -> bool:
    if call.name in Constants.RELEASE_METHOD_NAMES:
        return True
    return call.name == model.effective_must_call(receiver.type_name)


def discharge_on_null_edge(ctx: MethodContext) -> List[SinkDischarge]:
    """Pseudo-sinks on the branch edges where a compared reference is null."""
    sinks = []
    for info in ctx.cfg.nodes:
        cond = info.ast
        if info.kind != CfgNodeKind.EXPRESSION or not isinstance(cond, NullCompare):
            continue
        operand = ctx.flow.node_for(info.id, cond.operand)
        if operand is None:
            continue
        for u, v, key, data in ctx.cfg.graph.out_edges(info.id, keys=True, data=True):
            if data.get("branch") is cond.is_equal:
                sinks.append(
                    SinkDischarge(
                        SinkKind.NULL_DISCHARGE,
                        operand,
                        info.id,
                        field=operand.field_key,
                        edge=(u, v, key),
                    )
                )
    return sinks


def find_sinks(ctx: MethodContext) -> List[SinkDischarge]:
    """Every discharging occurrence in a method, null-edge pseudo-sinks included."""
    model = ctx.model
    sinks: List[SinkDischarge] = []

    for cfg_node, expr in _call_sites(ctx):
        if isinstance(expr, CallExpr):
            receiver = _explicit_receiver(ctx, cfg_node, expr)
            if receiver is not None and _release_call(model, expr, receiver):
                kind = SinkKind.USING_DISPOSE if expr.synthesized else SinkKind.CLOSE_DISPOSE_CALL
                sinks.append(SinkDischarge(kind, receiver, cfg_node))
        if not isinstance(expr, (CallExpr, NewExpr)):
            continue

        targets = resolve_call(model, ctx.method, expr)
        owning_positions = {
            index
            for target in targets
            for index, param in enumerate(target.params)
            if param.has(AttributeKind.OWNING)
        }
        for index in sorted(owning_positions):
            if index < len(expr.args):
                argument = ctx.flow.node_for(cfg_node, expr.args[index])
                if argument is not None:
                    sinks.append(SinkDischarge(SinkKind.OWNING_ARGUMENT_CALL, argument, cfg_node))

        if isinstance(expr, CallExpr):
            receiver = _explicit_receiver(ctx, cfg_node, expr)
            for target in targets:
                ensures = target.ensures_called_methods
                if ensures is None or receiver is None:
                    continue
                sinks.append(
                    SinkDischarge(
                        SinkKind.ENSURES_CALLED_METHODS_CALL,
                        receiver,
                        cfg_node,
                        field=_field_key(model, target.owner, ensures[0]),
                    )
                )

    for info in ctx.cfg.nodes:
        ast = info.ast
        if (
            isinstance(ast, Return)
            and ast.value is not None
            and ctx.method.has_return_attribute(AttributeKind.OWNING)
        ):
            value = ctx.flow.node_for(info.id, ast.value)
            if value is not None:
                sinks.append(SinkDischarge(SinkKind.OWNING_RETURN_EXPR, value, info.id))
        if isinstance(ast, Assign):
            write = ctx.flow.field_write_at(info.id)
            value = ctx.flow.node_for(info.id, ast.value)
            target_field = model.field_by_key(write.field_key) if write and write.field_key else None
            if value is not None and target_field is not None and target_field.is_owning:
                sinks.append(
                    SinkDischarge(
                        SinkKind.OWNING_FIELD_WRITE, value, info.id, field=target_field.key
                    )
                )

    if ctx.config.null_discharge:
        sinks.extend(discharge_on_null_edge(ctx))
    return sinks


# Reachability


def _discharges(source: SourceObligation, sink: SinkDischarge) -> bool:
    """Whether a sink of this kind can discharge this kind of obligation."""
    if sink.kind == SinkKind.NULL_DISCHARGE:
        return True
    if source.kind == SourceKind.CREATE_MUST_CALL_FOR_CALL:
        return sink.kind == SinkKind.ENSURES_CALLED_METHODS_CALL and sink.field == source.field
    return sink.kind != SinkKind.ENSURES_CALLED_METHODS_CALL


def _leak_path(
    cfg: Cfg,
    start: int,
    target: int,
    removed_nodes: Set[int],
    removed_edges: Set[Edge],
) -> Optional[List[int]]:
    view = nx.subgraph_view(
        cfg.graph,
        filter_node=lambda n: n not in removed_nodes,
        filter_edge=lambda u, v, k: (u, v, k) not in removed_edges,
    )
    if start not in view or target not in view or not nx.has_path(view, start, target):
        return None
    return nx.shortest_path(view, start, target)


def discharging_sinks(
    ctx: MethodContext, source: SourceObligation, sinks: Iterable[SinkDischarge]
) -> List[SinkDischarge]:
    """The sinks that discharge `source`: right kind and aliased to it."""
    return [
        sink
        for sink in sinks
        if _discharges(source, sink) and ctx.aliases.contains(source.node, sink.node)
    ]


def not_disposed(
    ctx: MethodContext, source: SourceObligation, sinks: Iterable[SinkDischarge]
) -> Optional[List[int]]:
    """A sink-free path from the source to the exit, or None when the source is discharged."""
    relevant = discharging_sinks(ctx, source, sinks)
    removed_nodes = {sink.cfg_node for sink in relevant if sink.edge is None}
    removed_edges = {sink.edge for sink in relevant if sink.edge is not None}
    if source.cfg_node in removed_nodes:
        return None
    return _leak_path(ctx.cfg, source.cfg_node, ctx.cfg.exit, removed_nodes, removed_edges)


def _message(source: SourceObligation) -> str:
    if source.kind == SourceKind.OWNING_PARAMETER:
        return (
            f"owning parameter {source.param} of type {source.type_name} "
            "may not be released on all paths"
        )
    if source.kind == SourceKind.CREATE_MUST_CALL_FOR_CALL:
        field_name = (source.field or "").rsplit(".", 1)[-1]
        return (
            f"resource in field {field_name} acquired by call to {source.callee} "
            "may not be released on all paths"
        )
    return f"resource of type {source.type_name} may not be released on all paths"


def _report(
    source: SourceObligation, kind: str, message: str, path: Optional[List[int]], limit: int
) -> LeakReport:
    witness = tuple(path) if path is not None and len(path) <= limit else None
    return LeakReport(source.span.file, source.span.line, kind, message, witness)


def check_method(
    ctx: MethodContext,
    sources: Optional[List[SourceObligation]] = None,
    sinks: Optional[List[SinkDischarge]] = None,
) -> List[LeakReport]:
    """One report per source that can reach the exit without being discharged."""
    sources = find_sources(ctx) if sources is None else sources
    sinks = find_sinks(ctx) if sinks is None else sinks
    reports = []
    for source in sources:
        path = not_disposed(ctx, source, sinks)
        if path is not None:
            reports.append(
                _report(
                    source, source.kind.value, _message(source), path, ctx.config.witness_max_nodes
                )
            )
    logger.debug(
        "Checked %s: %d sources, %d sinks, %d reports",
        ctx.method.key,
        len(sources),
        len(sinks),
        len(reports),
    )
    return reports


# Field-level obligations


def _field_valued(ctx: MethodContext, field_key: str) -> Set[FlowNode]:
    """Flow nodes that hold the value of a field read in this method."""
    valued: Set[FlowNode] = set()
    for read in ctx.flow.field_reads(field_key):
        valued |= ctx.aliases.aliases_of(read)
    return valued


def _null_edges(ctx: MethodContext, nodes: Set[FlowNode]) -> Set[Edge]:
    return {
        sink.edge
        for sink in discharge_on_null_edge(ctx)
        if sink.edge is not None and sink.node in nodes
    }


def _release_nodes(
    ctx: MethodContext, nodes: Set[FlowNode], accepts: Callable[[str], bool]
) -> Set[int]:
    """CFG nodes calling an accepted method on one of `nodes`."""
    found = set()
    for cfg_node, expr in _call_sites(ctx):
        if isinstance(expr, CallExpr) and accepts(expr.name):
            receiver = _explicit_receiver(ctx, cfg_node, expr)
            if receiver is not None and receiver in nodes:
                found.add(cfg_node)
    return found


def _chain_must_call(model: SemanticModel, type_info: TypeInfo) -> Optional[str]:
    for info in model.supertype_chain(type_info.name):
        attribute = find_attribute(info.attributes, AttributeKind.MUST_CALL)
        if attribute is not None:
            return attribute.args[0]
    return None


def _owning_field_failure(
    model: SemanticModel, type_info: TypeInfo, info: FieldInfo, config: Config
) -> Optional[str]:
    must_call = _chain_must_call(model, type_info)
    if must_call is None:
        return f"owning field {info.name}: class {type_info.name} has no MustCall attribute"

    method = model.lookup_method(type_info.name, must_call)
    if method is None:
        return (
            f"owning field {info.name}: MustCall method {must_call} "
            f"is not declared on {type_info.name}"
        )

    ensures = method.ensures_called_methods
    if ensures is None or ensures[0] != info.name:
        return (
            f"owning field {info.name}: {method.key} does not carry "
            f"EnsuresCalledMethods({info.name}, ...)"
        )

    release = ensures[1]
    failure = (
        f"owning field {info.name}: {method.key} may not call {release} "
        f"on {info.name} on all paths"
    )
    if method.resolution is None:
        return failure

    ctx = analyze_method(model, method, config)
    valued = _field_valued(ctx, info.key)
    removed_nodes = _release_nodes(ctx, valued, lambda name: name == release)
    removed_edges = _null_edges(ctx, valued) if config.null_discharge else set()
    if _leak_path(ctx.cfg, ctx.cfg.entry, ctx.cfg.exit, removed_nodes, removed_edges) is not None:
        return failure
    return None


def check_owning_field(
    model: SemanticModel, type_info: TypeInfo, config: Optional[Config] = None
) -> List[LeakReport]:
    """Every Owning field must be released by the class's MustCall method."""
    config = config or Config()
    reports = []
    for info in type_info.fields:
        if not info.is_owning:
            continue
        failure = _owning_field_failure(model, type_info, info, config)
        if failure is not None:
            reports.append(LeakReport(info.span.file, info.span.line, OWNING_FIELD_KIND, failure))
    return reports


def check_create_must_call_for(ctx: MethodContext) -> List[LeakReport]:
    """Each reassignment of the named field must follow a release of its old value."""
    field_name = ctx.method.create_must_call_for
    if field_name is None:
        return []
    model = ctx.model
    field_info = model.lookup_field(ctx.method.owner, field_name)
    if field_info is None:
        return []

    release = model.release_method(str(field_info.type))
    valued = _field_valued(ctx, field_info.key)
    removed_nodes = _release_nodes(
        ctx, valued, lambda name: name == release or name in Constants.RELEASE_METHOD_NAMES
    )
    assignments = []
    for info in ctx.cfg.nodes:
        write = ctx.flow.field_write_at(info.id)
        if write is None or write.field_key != field_info.key:
            continue
        if isinstance(info.ast, Assign) and isinstance(info.ast.value, NullLiteral):
            removed_nodes.add(info.id)
        else:
            assignments.append(info)
    removed_edges = _null_edges(ctx, valued) if ctx.config.null_discharge else set()

    reports = []
    for info in assignments:
        if info.id in removed_nodes:
            continue
        if _leak_path(ctx.cfg, ctx.cfg.entry, info.id, removed_nodes, removed_edges) is not None:
            reports.append(
                LeakReport(
                    info.span.file,
                    info.span.line,
                    CREATE_MUST_CALL_FOR_KIND,
                    f"field {field_name} may be reassigned before its previous resource is released",
                )
            )
    return reports


# Attribute-blind baseline


def naive_sources(ctx: MethodContext) -> List[SourceObligation]:
    """Every creation of a disposable type, attributes ignored."""
    sources = []
    for cfg_node, expr in _call_sites(ctx):
        node = ctx.flow.node_for(cfg_node, expr)
        if isinstance(expr, NewExpr) and node is not None:
            type_name = str(expr.type)
            if ctx.model.is_disposable(type_name):
                sources.append(
                    SourceObligation(
                        SourceKind.OBJECT_CREATION,
                        node,
                        Constants.DEFAULT_RELEASE_METHOD,
                        expr.span,
                        type_name=type_name,
                    )
                )
    sources.sort(key=lambda source: (source.span, source.cfg_node))
    return sources


def naive_sinks(ctx: MethodContext) -> List[SinkDischarge]:
    """Only direct Close/Dispose calls and using-block disposal."""
    sinks = []
    for cfg_node, expr in _call_sites(ctx):
        if isinstance(expr, CallExpr) and expr.name in Constants.RELEASE_METHOD_NAMES:
            receiver = _explicit_receiver(ctx, cfg_node, expr)
            if receiver is not None:
                kind = SinkKind.USING_DISPOSE if expr.synthesized else SinkKind.CLOSE_DISPOSE_CALL
                sinks.append(SinkDischarge(kind, receiver, cfg_node))
    return sinks


def check_naive(ctx: MethodContext) -> List[LeakReport]:
    return check_method(ctx, naive_sources(ctx), naive_sinks(ctx))


# Whole program


@dataclass
class ProgramResult:
    reports: List[LeakReport]
    sources: Dict[str, int]
    sinks: Dict[str, int]
    methods: int
    contexts: List[MethodContext] = field(default_factory=list, repr=False)


def analyze_program(model: SemanticModel, config: Optional[Config] = None) -> ProgramResult:
    """Run the per-method checks and then the class-level checks over all user code."""
    config = config or Config()
    reports: List[LeakReport] = []
    source_counts: Counter = Counter()
    sink_counts: Counter = Counter()
    contexts: List[MethodContext] = []

    for method in model.user_methods():
        if method.resolution is None:
            continue
        ctx = analyze_method(model, method, config)
        contexts.append(ctx)
        if config.naive:
            sources, sinks = naive_sources(ctx), naive_sinks(ctx)
        else:
            sources, sinks = find_sources(ctx), find_sinks(ctx)
        # Finally copies repeat an occurrence; count each source location once
        source_counts.update(str(kind) for kind, _ in {(s.kind, s.span) for s in sources})
        sink_counts.update(str(kind) for kind, _, _ in {(s.kind, s.node.uid, s.node.span) for s in sinks})
        reports.extend(check_method(ctx, sources, sinks))
        if config.check_create_must_call_for:
            reports.extend(check_create_must_call_for(ctx))

    if config.check_owning_fields:
        for type_info in model.user_types():
            reports.extend(check_owning_field(model, type_info, config))

    ordered = sort_reports(reports)
    logger.info(
        "Analyzed %d methods in %s mode: %d reports",
        len(contexts),
        config.mode_name,
        len(ordered),
    )
    return ProgramResult(
        reports=ordered,
        sources=dict(sorted(source_counts.items())),
        sinks=dict(sorted(sink_counts.items())),
        methods=len(contexts),
        contexts=contexts,
    )
