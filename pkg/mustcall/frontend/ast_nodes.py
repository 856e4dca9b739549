"""
Abstract syntax tree for MiniOO.

Spans and node ids are excluded from equality, so two trees compare equal
when they have the same structure regardless of where they were parsed from.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterator, Optional, Tuple


@dataclass(frozen=True, order=True)
class Span:
    """Source location of a node (1-based line and column)."""

    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = Span("<none>", 0, 0)


@dataclass(frozen=True)
class SourceUnit:
    """A MiniOO file handed to the front end."""

    path: str
    text: str


class AttributeKind(str, Enum):
    """Resource-management attributes."""

    MUST_CALL = "MustCall"
    OWNING = "Owning"
    MUST_CALL_ALIAS = "MustCallAlias"
    ENSURES_CALLED_METHODS = "EnsuresCalledMethods"
    CREATE_MUST_CALL_FOR = "CreateMustCallFor"

    def __str__(self) -> str:
        return self.value


class ElementKind(str, Enum):
    """Program elements an attribute can be attached to."""

    TYPE = "Type"
    FIELD = "Field"
    METHOD = "Method"
    RETURN_TYPE = "ReturnType"
    PARAMETER = "Parameter"

    def __str__(self) -> str:
        return self.value


ATTRIBUTE_ARITY: Dict[AttributeKind, int] = {
    AttributeKind.MUST_CALL: 1,
    AttributeKind.OWNING: 0,
    AttributeKind.MUST_CALL_ALIAS: 0,
    AttributeKind.ENSURES_CALLED_METHODS: 2,
    AttributeKind.CREATE_MUST_CALL_FOR: 1,
}

ATTRIBUTE_PLACEMENT: Dict[ElementKind, FrozenSet[AttributeKind]] = {
    ElementKind.TYPE: frozenset({AttributeKind.MUST_CALL}),
    ElementKind.FIELD: frozenset({AttributeKind.OWNING}),
    ElementKind.PARAMETER: frozenset(
        {AttributeKind.OWNING, AttributeKind.MUST_CALL_ALIAS}
    ),
    ElementKind.RETURN_TYPE: frozenset(
        {AttributeKind.OWNING, AttributeKind.MUST_CALL_ALIAS}
    ),
    ElementKind.METHOD: frozenset(
        {AttributeKind.ENSURES_CALLED_METHODS, AttributeKind.CREATE_MUST_CALL_FOR}
    ),
}


@dataclass(frozen=True)
class AttributeSpec:
    """A parsed `[Kind(args)]` attribute."""

    kind: AttributeKind
    args: Tuple[str, ...] = ()
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __str__(self) -> str:
        if not self.args:
            return f"[{self.kind.value}]"
        return f"[{self.kind.value}({', '.join(self.args)})]"


def has_attribute(attributes: Tuple[AttributeSpec, ...], kind: AttributeKind) -> bool:
    return any(attribute.kind == kind for attribute in attributes)


def find_attribute(
    attributes: Tuple[AttributeSpec, ...], kind: AttributeKind
) -> Optional[AttributeSpec]:
    for attribute in attributes:
        if attribute.kind == kind:
            return attribute
    return None


@dataclass(frozen=True)
class TypeRef:
    """A named type, optionally instantiated with one element type."""

    name: str
    arg: Optional["TypeRef"] = None
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __str__(self) -> str:
        if self.arg is None:
            return self.name
        return f"{self.name}<{self.arg}>"


@dataclass(frozen=True)
class Node:
    """Base of statements and expressions."""

    span: Span = field(default=NO_SPAN, compare=False, repr=False, kw_only=True)
    uid: int = field(default=0, compare=False, repr=False, kw_only=True)


# Expressions


@dataclass(frozen=True)
class Expr(Node):
    pass


@dataclass(frozen=True)
class NewExpr(Expr):
    type: TypeRef
    args: Tuple[Expr, ...] = ()


@dataclass(frozen=True)
class CallExpr(Expr):
    receiver: Optional[Expr]
    name: str
    args: Tuple[Expr, ...] = ()
    # Dispose call introduced by using-block desugaring
    synthesized: bool = field(default=False, compare=False, kw_only=True)


@dataclass(frozen=True)
class FieldAccess(Expr):
    receiver: Expr
    name: str


@dataclass(frozen=True)
class NameRef(Expr):
    """A bare identifier: local, parameter, implicit this-field or type name."""

    name: str


@dataclass(frozen=True)
class ThisExpr(Expr):
    pass


@dataclass(frozen=True)
class NullLiteral(Expr):
    pass


@dataclass(frozen=True)
class NullCompare(Expr):
    """`operand == null` (is_equal) or `operand != null`."""

    operand: Expr
    is_equal: bool
    null_on_left: bool = False


@dataclass(frozen=True)
class ScalarExpr(Expr):
    """Opaque scalar computation; carries no resource value."""

    op: str
    operands: Tuple[Expr, ...] = ()
    literal: Optional[str] = None


def child_expressions(expr: Expr) -> Tuple[Expr, ...]:
    """Direct sub-expressions in evaluation order."""
    if isinstance(expr, NewExpr):
        return expr.args
    if isinstance(expr, CallExpr):
        if expr.receiver is None:
            return expr.args
        return (expr.receiver,) + expr.args
    if isinstance(expr, FieldAccess):
        return (expr.receiver,)
    if isinstance(expr, NullCompare):
        return (expr.operand,)
    if isinstance(expr, ScalarExpr):
        return expr.operands
    return ()


def iter_expressions(expr: Expr) -> Iterator[Expr]:
    """All expressions of a tree in evaluation (post-) order."""
    for child in child_expressions(expr):
        yield from iter_expressions(child)
    yield expr


# Statements


@dataclass(frozen=True)
class Stmt(Node):
    pass


@dataclass(frozen=True)
class Block(Stmt):
    stmts: Tuple[Stmt, ...] = ()


@dataclass(frozen=True)
class LocalDecl(Stmt):
    type: TypeRef
    name: str
    init: Optional[Expr] = None
    # Resource declaration of a desugared using-block
    using_resource: bool = field(default=False, compare=False, kw_only=True)


@dataclass(frozen=True)
class Assign(Stmt):
    """Assignment to a local (NameRef) or a field (FieldAccess or NameRef)."""

    target: Expr
    value: Expr


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Optional[Block] = None


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Block


@dataclass(frozen=True)
class CatchClause(Stmt):
    type: Optional[TypeRef]
    name: Optional[str]
    body: Block


@dataclass(frozen=True)
class Try(Stmt):
    body: Block
    catches: Tuple[CatchClause, ...] = ()
    finally_: Optional[Block] = None


@dataclass(frozen=True)
class Using(Stmt):
    type: TypeRef
    name: str
    init: Expr
    body: Block


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass(frozen=True)
class Throw(Stmt):
    """`throw e;` or, with no value, a bare rethrow."""

    value: Optional[Expr] = None


# Declarations


@dataclass(frozen=True)
class Param:
    type: TypeRef
    name: str
    attributes: Tuple[AttributeSpec, ...] = ()
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class FieldDecl:
    type: TypeRef
    name: str
    modifiers: Tuple[str, ...] = ()
    attributes: Tuple[AttributeSpec, ...] = ()
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    @property
    def is_readonly(self) -> bool:
        return "readonly" in self.modifiers


@dataclass(frozen=True)
class MethodDecl:
    name: str
    return_type: Optional[TypeRef]
    params: Tuple[Param, ...]
    body: Block
    modifiers: Tuple[str, ...] = ()
    # EnsuresCalledMethods / CreateMustCallFor
    attributes: Tuple[AttributeSpec, ...] = ()
    # Owning / MustCallAlias on the return position
    return_attributes: Tuple[AttributeSpec, ...] = ()
    is_constructor: bool = False
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    supertype: Optional[str] = None
    interface: Optional[str] = None
    fields: Tuple[FieldDecl, ...] = ()
    constructors: Tuple[MethodDecl, ...] = ()
    methods: Tuple[MethodDecl, ...] = ()
    attributes: Tuple[AttributeSpec, ...] = ()
    modifiers: Tuple[str, ...] = ()
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class CompilationUnit:
    path: str
    classes: Tuple[ClassDecl, ...] = ()
