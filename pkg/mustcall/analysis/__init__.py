# Semantic model, control flow, aliasing and the leak checks
from mustcall.analysis.alias import AliasRelation, FlowKind, FlowNode, MethodFlow, close_aliases
from mustcall.analysis.cfg import Cfg, CfgNode, CfgNodeKind, EdgeKind, build_cfg, desugar_using
from mustcall.analysis.leakcheck import (
    LeakReport,
    SinkDischarge,
    SinkKind,
    SourceKind,
    SourceObligation,
    analyze_method,
    analyze_program,
)
from mustcall.analysis.model import SemanticModel, apply_overlay, build_model

__all__ = [
    "AliasRelation",
    "Cfg",
    "CfgNode",
    "CfgNodeKind",
    "EdgeKind",
    "FlowKind",
    "FlowNode",
    "LeakReport",
    "MethodFlow",
    "SemanticModel",
    "SinkDischarge",
    "SinkKind",
    "SourceKind",
    "SourceObligation",
    "analyze_method",
    "analyze_program",
    "apply_overlay",
    "build_cfg",
    "build_model",
    "close_aliases",
    "desugar_using",
]
