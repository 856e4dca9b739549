"""
Brute-force path enumeration oracle for the leak check.

Enumerates entry-to-exit paths of a method's CFG, taking each back edge at
most once, and looks for a path suffix that starts at the source and avoids
every discharging sink. It shares source, sink and alias classification with
the engine and replaces only the reachability question, so the two can be
compared on generated programs.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Set, Tuple

import networkx as nx

from mustcall.analysis.cfg import Cfg
from mustcall.analysis.leakcheck import (
    Edge,
    MethodContext,
    SinkDischarge,
    SourceObligation,
    analyze_method,
    discharging_sinks,
    find_sinks,
    find_sources,
    naive_sinks,
    naive_sources,
)
from mustcall.analysis.model import build_model
from mustcall.config import Config
from mustcall.constants import Constants
from mustcall.frontend.ast_nodes import SourceUnit, Span
from mustcall.frontend.parser import parse_source

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleVerdict:
    location: Span
    leaking: bool
    path_count: int
    witness: Optional[Tuple[int, ...]] = None
    # False when enumeration hit the path cap
    applicable: bool = True


class _PathCapExceeded(Exception):
    pass


def back_edges(cfg: Cfg) -> Set[Edge]:
    """Edges whose target dominates their source."""
    dominators = nx.immediate_dominators(cfg.graph, cfg.entry)

    def dominates(a: int, b: int) -> bool:
        while True:
            if a == b:
                return True
            parent = dominators.get(b)
            if parent is None or parent == b:
                return False
            b = parent

    return {(u, v, k) for u, v, k in cfg.graph.edges(keys=True) if dominates(v, u)}


def path_oracle(
    ctx: MethodContext,
    source: SourceObligation,
    sinks: List[SinkDischarge],
    cap: int = Constants.ORACLE_PATH_CAP,
) -> OracleVerdict:
    """Leak verdict for one source by exhaustive bounded path enumeration."""
    cfg = ctx.cfg
    relevant = discharging_sinks(ctx, source, sinks)
    removed_nodes = {sink.cfg_node for sink in relevant if sink.edge is None}
    removed_edges = {sink.edge for sink in relevant if sink.edge is not None}
    loops = back_edges(cfg)
    max_length = 4 * len(cfg) + 4

    nodes: List[int] = [cfg.entry]
    edges: List[Edge] = []
    taken: Dict[Edge, int] = {}
    state = {"count": 0, "witness": None}

    def leaking_suffix() -> Optional[Tuple[int, ...]]:
        for index, node in enumerate(nodes):
            if node != source.cfg_node:
                continue
            if any(n in removed_nodes for n in nodes[index:]):
                continue
            if any(e in removed_edges for e in edges[index:]):
                continue
            return tuple(nodes[index:])
        return None

    def walk(node: int) -> None:
        if node == cfg.exit:
            state["count"] += 1
            if state["count"] > cap:
                raise _PathCapExceeded()
            if state["witness"] is None:
                state["witness"] = leaking_suffix()
            return
        if len(nodes) > max_length:
            raise _PathCapExceeded()
        for u, v, k in sorted(cfg.graph.out_edges(node, keys=True)):
            edge = (u, v, k)
            if edge in loops and taken.get(edge, 0) >= Constants.ORACLE_BACK_EDGE_BOUND:
                continue
            taken[edge] = taken.get(edge, 0) + 1
            nodes.append(v)
            edges.append(edge)
            walk(v)
            nodes.pop()
            edges.pop()
            taken[edge] -= 1

    try:
        walk(cfg.entry)
    except _PathCapExceeded:
        logger.debug("Oracle inapplicable for source at %s", source.span)
        return OracleVerdict(source.span, False, state["count"], None, applicable=False)

    witness = state["witness"]
    return OracleVerdict(source.span, witness is not None, state["count"], witness)


def oracle_verdicts(ctx: MethodContext) -> List[Tuple[SourceObligation, OracleVerdict]]:
    if ctx.config.naive:
        sources, sinks = naive_sources(ctx), naive_sinks(ctx)
    else:
        sources, sinks = find_sources(ctx), find_sinks(ctx)
    return [(source, path_oracle(ctx, source, sinks)) for source in sources]


def oracle_reports(
    files: Mapping[str, str], config: Optional[Config] = None
) -> Tuple[List[Tuple[str, int, str]], bool]:
    """Expected (file, line, kind) triples of per-method leaks, and whether every verdict applied."""
    config = config or Config()
    model = build_model([parse_source(SourceUnit(path, text)) for path, text in files.items()])
    triples = set()
    applicable = True
    for method in model.user_methods():
        if method.resolution is None:
            continue
        ctx = analyze_method(model, method, config)
        for source, verdict in oracle_verdicts(ctx):
            applicable = applicable and verdict.applicable
            if verdict.leaking:
                triples.add((source.span.file, source.span.line, source.kind.value))
    return sorted(triples), applicable
