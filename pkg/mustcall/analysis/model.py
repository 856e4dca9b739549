"""
Semantic program model.

Resolves types, fields and call targets for a set of compilation units plus
the built-in library prelude, computes the resource-type set and applies
overlay annotations.
"""

import dataclasses
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import (
    TYPE_CHECKING,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from mustcall.analysis.cfg import desugar_body
from mustcall.constants import Constants
from mustcall.errors import MustCallError, OverlayError, ResolutionError
from mustcall.frontend.ast_nodes import (
    ATTRIBUTE_PLACEMENT,
    Assign,
    AttributeKind,
    AttributeSpec,
    Block,
    CallExpr,
    ClassDecl,
    CompilationUnit,
    ElementKind,
    Expr,
    ExprStmt,
    FieldAccess,
    If,
    LocalDecl,
    MethodDecl,
    NameRef,
    NewExpr,
    NullCompare,
    NullLiteral,
    Return,
    ScalarExpr,
    SourceUnit,
    Span,
    Stmt,
    ThisExpr,
    Throw,
    Try,
    TypeRef,
    Using,
    While,
    child_expressions,
    find_attribute,
    has_attribute,
)
from mustcall.frontend.parser import parse_source

if TYPE_CHECKING:
    from mustcall.diagnostics.overlay import OverlayEntry

logger = logging.getLogger(__name__)


# Domain types


@dataclass(frozen=True)
class ParamInfo:
    name: str
    type: TypeRef
    attributes: Tuple[AttributeSpec, ...] = ()
    span: Span = field(default=Span("<none>", 0, 0), compare=False)

    def has(self, kind: AttributeKind) -> bool:
        return has_attribute(self.attributes, kind)


@dataclass(frozen=True)
class FieldInfo:
    name: str
    owner: str
    type: TypeRef
    readonly: bool = False
    attributes: Tuple[AttributeSpec, ...] = ()
    span: Span = field(default=Span("<none>", 0, 0), compare=False)

    @property
    def key(self) -> str:
        return f"{self.owner}.{self.name}"

    @property
    def is_owning(self) -> bool:
        return has_attribute(self.attributes, AttributeKind.OWNING)


class Binding(NamedTuple):
    """What a bare name refers to: a local, a parameter, a field or a type."""

    kind: str
    name: str


@dataclass(frozen=True)
class MethodResolution:
    """Per-expression facts computed while resolving a method body."""

    expr_types: Dict[int, Optional[str]]
    call_targets: Dict[int, Tuple[str, ...]]
    bindings: Dict[int, Binding]
    field_keys: Dict[int, str]

    def type_of(self, expr: Expr) -> Optional[str]:
        return self.expr_types.get(expr.uid)

    def targets_of(self, expr: Expr) -> Tuple[str, ...]:
        return self.call_targets.get(expr.uid, ())

    def binding_of(self, expr: Expr) -> Optional[Binding]:
        return self.bindings.get(expr.uid)

    def field_of(self, expr: Expr) -> Optional[str]:
        return self.field_keys.get(expr.uid)


@dataclass(frozen=True)
class MethodInfo:
    name: str
    owner: str
    params: Tuple[ParamInfo, ...]
    return_type: Optional[TypeRef]
    body: Block
    return_attributes: Tuple[AttributeSpec, ...] = ()
    attributes: Tuple[AttributeSpec, ...] = ()
    is_constructor: bool = False
    is_builtin: bool = False
    is_implicit: bool = False
    span: Span = field(default=Span("<none>", 0, 0), compare=False)
    resolution: Optional[MethodResolution] = field(
        default=None, compare=False, repr=False
    )

    @property
    def key(self) -> str:
        if self.is_constructor:
            return f"{self.owner}.{Constants.CONSTRUCTOR_NAME}"
        return f"{self.owner}.{self.name}"

    @property
    def file(self) -> str:
        return self.span.file

    def has_return_attribute(self, kind: AttributeKind) -> bool:
        return has_attribute(self.return_attributes, kind)

    @property
    def ensures_called_methods(self) -> Optional[Tuple[str, str]]:
        attribute = find_attribute(self.attributes, AttributeKind.ENSURES_CALLED_METHODS)
        if attribute is None:
            return None
        return attribute.args[0], attribute.args[1]

    @property
    def create_must_call_for(self) -> Optional[str]:
        attribute = find_attribute(self.attributes, AttributeKind.CREATE_MUST_CALL_FOR)
        return None if attribute is None else attribute.args[0]

    @property
    def is_must_call_alias(self) -> bool:
        """Return position and some parameter both carry MustCallAlias."""
        return self.has_return_attribute(AttributeKind.MUST_CALL_ALIAS) and any(
            param.has(AttributeKind.MUST_CALL_ALIAS) for param in self.params
        )

    def all_attributes(self) -> Iterable[AttributeSpec]:
        yield from self.attributes
        yield from self.return_attributes
        for param in self.params:
            yield from param.attributes


@dataclass(frozen=True)
class TypeInfo:
    name: str
    declared_supertype: Optional[str] = None
    implements_disposable: bool = False
    is_collection_of: Optional[str] = None
    fields: Tuple[FieldInfo, ...] = ()
    methods: Tuple[MethodInfo, ...] = ()
    attributes: Tuple[AttributeSpec, ...] = ()
    builtin: bool = False
    span: Span = field(default=Span("<none>", 0, 0), compare=False)

    @property
    def must_call(self) -> Optional[str]:
        attribute = find_attribute(self.attributes, AttributeKind.MUST_CALL)
        return None if attribute is None else attribute.args[0]

    @property
    def has_owning_field(self) -> bool:
        return any(info.is_owning for info in self.fields)

    def field_named(self, name: str) -> Optional[FieldInfo]:
        for info in self.fields:
            if info.name == name:
                return info
        return None

    def method_named(self, name: str) -> Optional[MethodInfo]:
        for method in self.methods:
            if not method.is_constructor and method.name == name:
                return method
        return None

    @property
    def constructor(self) -> Optional[MethodInfo]:
        for method in self.methods:
            if method.is_constructor:
                return method
        return None

    def all_attributes(self) -> Iterable[AttributeSpec]:
        yield from self.attributes
        for info in self.fields:
            yield from info.attributes
        for method in self.methods:
            yield from method.all_attributes()


@dataclass(frozen=True)
class OverlayProvenance:
    """One attribute attached from an overlay file."""

    element_type: ElementKind
    element: str
    attribute: AttributeSpec

    def __str__(self) -> str:
        return f"{self.element_type.value} {self.element}: {self.attribute}"


@dataclass(frozen=True)
class SemanticModel:
    types: Mapping[str, TypeInfo]
    rtype: FrozenSet[str] = frozenset()
    overlay_provenance: Tuple[OverlayProvenance, ...] = ()
    errors: Tuple[MustCallError, ...] = ()
    files: Tuple[str, ...] = ()

    @cached_property
    def methods(self) -> Dict[str, MethodInfo]:
        return {
            method.key: method
            for type_info in self.types.values()
            for method in type_info.methods
        }

    @cached_property
    def _direct_subtypes(self) -> Dict[str, List[str]]:
        children: Dict[str, List[str]] = defaultdict(list)
        for type_info in self.types.values():
            if type_info.declared_supertype is not None:
                children[type_info.declared_supertype].append(type_info.name)
        return children

    def user_types(self) -> List[TypeInfo]:
        return [info for info in self.types.values() if not info.builtin]

    def user_methods(self) -> List[MethodInfo]:
        """Entry set: every method of the analysed program, in declaration order."""
        return [
            method
            for type_info in self.user_types()
            for method in type_info.methods
            if not method.is_implicit
        ]

    def method(self, key: str) -> MethodInfo:
        return self.methods[key]

    def supertype_chain(self, name: Optional[str]) -> List[TypeInfo]:
        chain: List[TypeInfo] = []
        seen: Set[str] = set()
        while name is not None and name in self.types and name not in seen:
            seen.add(name)
            info = self.types[name]
            chain.append(info)
            name = info.declared_supertype
        return chain

    def subtypes(self, name: str) -> List[str]:
        """Transitive subtypes of a type, excluding the type itself."""
        found: List[str] = []
        queue = deque(self._direct_subtypes.get(name, []))
        while queue:
            child = queue.popleft()
            if child in found:
                continue
            found.append(child)
            queue.extend(self._direct_subtypes.get(child, []))
        return sorted(found)

    def lookup_field(self, type_name: Optional[str], name: str) -> Optional[FieldInfo]:
        for info in self.supertype_chain(type_name):
            found = info.field_named(name)
            if found is not None:
                return found
        return None

    def lookup_method(
        self, type_name: Optional[str], name: str
    ) -> Optional[MethodInfo]:
        for info in self.supertype_chain(type_name):
            found = info.method_named(name)
            if found is not None:
                return found
        return None

    def field_by_key(self, key: str) -> Optional[FieldInfo]:
        owner, _, name = key.rpartition(".")
        if owner not in self.types:
            return None
        return self.types[owner].field_named(name)

    def is_rtype(self, type_name: Optional[str]) -> bool:
        return type_name is not None and type_name in self.rtype

    def is_disposable(self, type_name: Optional[str]) -> bool:
        """Implements IDisposable directly or through its supertype chain."""
        return any(info.implements_disposable for info in self.supertype_chain(type_name))

    def effective_must_call(self, type_name: Optional[str]) -> Optional[str]:
        """MustCall method of a type, including the implicit Dispose of IDisposable."""
        for info in self.supertype_chain(type_name):
            if info.must_call is not None:
                return info.must_call
            if info.implements_disposable:
                return Constants.DEFAULT_RELEASE_METHOD
        return None

    def release_method(self, type_name: Optional[str]) -> str:
        """Method that discharges an obligation on a value of this type."""
        must_call = self.effective_must_call(type_name)
        if must_call is not None:
            return must_call
        if type_name in self.types:
            element = self.types[type_name].is_collection_of
            if element is not None:
                return self.release_method(element)
        return Constants.DEFAULT_RELEASE_METHOD

    def attribute_counts(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in AttributeKind}
        for type_info in self.user_types():
            for attribute in type_info.all_attributes():
                counts[attribute.kind.value] += 1
        return counts


# RType


def compute_rtype(model: SemanticModel) -> FrozenSet[str]:
    """Least set of type names closed under the five resource-type rules."""
    rtype: Set[str] = set()
    changed = True
    while changed:
        changed = False
        for info in model.types.values():
            if info.name in rtype:
                continue
            if (
                info.implements_disposable
                or info.has_owning_field
                or info.must_call is not None
                or (info.is_collection_of is not None and info.is_collection_of in rtype)
                or (info.declared_supertype is not None and info.declared_supertype in rtype)
            ):
                rtype.add(info.name)
                changed = True
    return frozenset(rtype)


# Building


@lru_cache(maxsize=1)
def builtin_unit() -> CompilationUnit:
    return parse_source(SourceUnit(Constants.BUILTIN_PATH, Constants.BUILTIN_PRELUDE))


def _param_info(param) -> ParamInfo:
    return ParamInfo(param.name, param.type, param.attributes, param.span)


def _method_info(owner: str, decl: MethodDecl, builtin: bool) -> MethodInfo:
    return MethodInfo(
        name=decl.name,
        owner=owner,
        params=tuple(_param_info(param) for param in decl.params),
        return_type=decl.return_type,
        body=desugar_body(decl.body),
        return_attributes=decl.return_attributes,
        attributes=decl.attributes,
        is_constructor=decl.is_constructor,
        is_builtin=builtin,
        span=decl.span,
    )


def _type_info(decl: ClassDecl, builtin: bool) -> TypeInfo:
    methods = [_method_info(decl.name, ctor, builtin) for ctor in decl.constructors]
    if not decl.constructors:
        methods.append(
            MethodInfo(
                name=decl.name,
                owner=decl.name,
                params=(),
                return_type=None,
                body=Block(),
                is_constructor=True,
                is_builtin=builtin,
                is_implicit=True,
                span=decl.span,
            )
        )
    methods.extend(_method_info(decl.name, method, builtin) for method in decl.methods)
    return TypeInfo(
        name=decl.name,
        declared_supertype=decl.supertype,
        implements_disposable=decl.interface == Constants.DISPOSABLE_INTERFACE,
        fields=tuple(
            FieldInfo(
                name=field_decl.name,
                owner=decl.name,
                type=field_decl.type,
                readonly=field_decl.is_readonly,
                attributes=field_decl.attributes,
                span=field_decl.span,
            )
            for field_decl in decl.fields
        ),
        methods=tuple(methods),
        attributes=decl.attributes,
        builtin=builtin,
        span=decl.span,
    )


def _substitute(type_ref: Optional[TypeRef], element: TypeRef) -> Optional[TypeRef]:
    if type_ref is None:
        return None
    if type_ref.name == Constants.COLLECTION_TYPE_PARAMETER and type_ref.arg is None:
        return element
    return dataclasses.replace(type_ref, arg=_substitute(type_ref.arg, element))


def _instantiate_collection(generic: TypeInfo, element: TypeRef) -> TypeInfo:
    name = str(TypeRef(Constants.COLLECTION_TYPE, element))
    methods = []
    for method in generic.methods:
        methods.append(
            dataclasses.replace(
                method,
                owner=name,
                name=name if method.is_constructor else method.name,
                params=tuple(
                    dataclasses.replace(param, type=_substitute(param.type, element))
                    for param in method.params
                ),
                return_type=_substitute(method.return_type, element),
            )
        )
    return dataclasses.replace(
        generic, name=name, is_collection_of=str(element), methods=tuple(methods)
    )


def _collect_type_refs(unit: CompilationUnit) -> List[TypeRef]:
    refs: List[TypeRef] = []

    def from_expr(expr: Optional[Expr]) -> None:
        if expr is None:
            return
        if isinstance(expr, NewExpr):
            refs.append(expr.type)
        for child in child_expressions(expr):
            from_expr(child)

    def from_stmt(stmt: Stmt) -> None:
        if isinstance(stmt, Block):
            for inner in stmt.stmts:
                from_stmt(inner)
        elif isinstance(stmt, LocalDecl):
            refs.append(stmt.type)
            from_expr(stmt.init)
        elif isinstance(stmt, Assign):
            from_expr(stmt.target)
            from_expr(stmt.value)
        elif isinstance(stmt, ExprStmt):
            from_expr(stmt.expr)
        elif isinstance(stmt, If):
            from_expr(stmt.cond)
            from_stmt(stmt.then)
            if stmt.orelse is not None:
                from_stmt(stmt.orelse)
        elif isinstance(stmt, While):
            from_expr(stmt.cond)
            from_stmt(stmt.body)
        elif isinstance(stmt, Try):
            from_stmt(stmt.body)
            for clause in stmt.catches:
                if clause.type is not None:
                    refs.append(clause.type)
                from_stmt(clause.body)
            if stmt.finally_ is not None:
                from_stmt(stmt.finally_)
        elif isinstance(stmt, Using):
            refs.append(stmt.type)
            from_expr(stmt.init)
            from_stmt(stmt.body)
        elif isinstance(stmt, (Return, Throw)):
            from_expr(stmt.value)

    for decl in unit.classes:
        for field_decl in decl.fields:
            refs.append(field_decl.type)
        for method in decl.constructors + decl.methods:
            if method.return_type is not None:
                refs.append(method.return_type)
            for param in method.params:
                refs.append(param.type)
            from_stmt(method.body)
    return refs


def build_model(units: Sequence[CompilationUnit]) -> SemanticModel:
    """Resolve a program against the built-in prelude; errors are collected."""
    errors: List[MustCallError] = []
    types: Dict[str, TypeInfo] = {}

    for decl in builtin_unit().classes:
        types[decl.name] = _type_info(decl, builtin=True)

    user_names: Dict[str, Span] = {}
    for unit in units:
        for decl in unit.classes:
            if decl.name in user_names:
                errors.append(
                    ResolutionError(
                        f"duplicate type {decl.name} (first declared at {user_names[decl.name]})",
                        decl.span,
                    )
                )
                continue
            if decl.name in types:
                logger.debug("User type %s shadows the built-in declaration", decl.name)
            user_names[decl.name] = decl.span
            types[decl.name] = _type_info(decl, builtin=False)

    # Collection instantiations used anywhere in the program
    generic = types.get(Constants.COLLECTION_TYPE)
    if generic is not None:
        pending = [ref for unit in units for ref in _collect_type_refs(unit)]
        while pending:
            ref = pending.pop()
            if ref.arg is None:
                continue
            pending.append(ref.arg)
            name = str(ref)
            if ref.name == Constants.COLLECTION_TYPE and name not in types:
                types[name] = _instantiate_collection(generic, ref.arg)

    errors.extend(_check_declarations(types))

    resolved: Dict[str, TypeInfo] = {}
    for name, info in types.items():
        if info.builtin:
            resolved[name] = info
            continue
        methods = []
        for method in info.methods:
            resolution = None
            try:
                resolution = _Resolver(types, info, method).resolve()
            except ResolutionError as exc:
                errors.append(exc)
                logger.warning("Skipping method %s: %s", method.key, exc)
            methods.append(dataclasses.replace(method, resolution=resolution))
        resolved[name] = dataclasses.replace(info, methods=tuple(methods))

    model = SemanticModel(
        types=resolved,
        errors=tuple(errors),
        files=tuple(unit.path for unit in units),
    )
    model = dataclasses.replace(model, rtype=compute_rtype(model))
    logger.info(
        "Built model: %d user types, %d resource types, %d errors",
        len(model.user_types()),
        len(model.rtype),
        len(errors),
    )
    return model


def _known_type(types: Mapping[str, TypeInfo], ref: TypeRef) -> bool:
    if ref.arg is not None:
        return ref.name == Constants.COLLECTION_TYPE and _known_type(types, ref.arg)
    return ref.name in types or ref.name in Constants.SCALAR_TYPES


def _check_declarations(types: Mapping[str, TypeInfo]) -> List[MustCallError]:
    errors: List[MustCallError] = []
    for info in types.values():
        if info.builtin:
            continue

        if info.declared_supertype is not None:
            if info.declared_supertype not in types:
                errors.append(
                    ResolutionError(
                        f"unknown supertype {info.declared_supertype} of {info.name}",
                        info.span,
                    )
                )
            else:
                seen = {info.name}
                current = types[info.declared_supertype]
                while True:
                    if current.name in seen:
                        errors.append(
                            ResolutionError(
                                f"type {info.name} is its own supertype", info.span
                            )
                        )
                        break
                    seen.add(current.name)
                    if current.declared_supertype not in types:
                        break
                    current = types[current.declared_supertype]

        names: Set[str] = set()
        constructors = 0
        for method in info.methods:
            if method.is_constructor:
                constructors += 1
                if constructors > 1:
                    errors.append(
                        ResolutionError(
                            f"type {info.name} declares more than one constructor",
                            method.span,
                        )
                    )
            elif method.name in names:
                errors.append(
                    ResolutionError(
                        f"duplicate method {info.name}.{method.name}", method.span
                    )
                )
            names.add(method.name)

            for kind in (
                AttributeKind.ENSURES_CALLED_METHODS,
                AttributeKind.CREATE_MUST_CALL_FOR,
            ):
                found = [a for a in method.attributes if a.kind == kind]
                if len(found) > 1:
                    errors.append(
                        ResolutionError(
                            f"method {method.key} carries {kind} more than once",
                            found[1].span,
                        )
                    )
                for attribute in found:
                    field_name = attribute.args[0]
                    if _lookup_field(types, info.name, field_name) is None:
                        errors.append(
                            ResolutionError(
                                f"{kind} names unknown field {field_name}", attribute.span
                            )
                        )

            refs = [param.type for param in method.params]
            if method.return_type is not None:
                refs.append(method.return_type)
            for ref in refs:
                if not _known_type(types, ref):
                    errors.append(ResolutionError(f"unknown type {ref}", ref.span))

        for info_field in info.fields:
            if not _known_type(types, info_field.type):
                errors.append(
                    ResolutionError(f"unknown type {info_field.type}", info_field.type.span)
                )
    return errors


def _chain(types: Mapping[str, TypeInfo], name: Optional[str]) -> List[TypeInfo]:
    chain: List[TypeInfo] = []
    while name is not None and name in types and types[name] not in chain:
        chain.append(types[name])
        name = types[name].declared_supertype
    return chain


def _lookup_field(
    types: Mapping[str, TypeInfo], type_name: Optional[str], name: str
) -> Optional[FieldInfo]:
    for info in _chain(types, type_name):
        found = info.field_named(name)
        if found is not None:
            return found
    return None


class _Resolver:
    """Resolves the names, types and call targets of one method body."""

    def __init__(self, types: Mapping[str, TypeInfo], owner: TypeInfo, method: MethodInfo):
        self.types = types
        self.owner = owner
        self.method = method
        self.scope: Dict[str, Tuple[str, Optional[str]]] = {
            param.name: ("param", _type_name(param.type)) for param in method.params
        }
        self.expr_types: Dict[int, Optional[str]] = {}
        self.call_targets: Dict[int, Tuple[str, ...]] = {}
        self.bindings: Dict[int, Binding] = {}
        self.field_keys: Dict[int, str] = {}

    def resolve(self) -> MethodResolution:
        self.stmt(self.method.body)
        return MethodResolution(
            self.expr_types, self.call_targets, self.bindings, self.field_keys
        )

    def check_type(self, ref: TypeRef) -> None:
        if ref.name == Constants.INFERRED_TYPE and ref.arg is None:
            return
        if not _known_type(self.types, ref):
            raise ResolutionError(f"unknown type {ref}", ref.span)

    # Statements

    def stmt(self, stmt: Stmt) -> None:
        if isinstance(stmt, Block):
            for inner in stmt.stmts:
                self.stmt(inner)
        elif isinstance(stmt, LocalDecl):
            self.check_type(stmt.type)
            init_type = self.expr(stmt.init) if stmt.init is not None else None
            declared = _type_name(stmt.type)
            if declared == Constants.INFERRED_TYPE:
                declared = init_type
            self.scope[stmt.name] = ("local", declared)
        elif isinstance(stmt, Assign):
            self.assign_target(stmt.target)
            self.expr(stmt.value)
        elif isinstance(stmt, ExprStmt):
            self.expr(stmt.expr)
        elif isinstance(stmt, If):
            self.expr(stmt.cond)
            self.stmt(stmt.then)
            if stmt.orelse is not None:
                self.stmt(stmt.orelse)
        elif isinstance(stmt, While):
            self.expr(stmt.cond)
            self.stmt(stmt.body)
        elif isinstance(stmt, Try):
            self.stmt(stmt.body)
            for clause in stmt.catches:
                if clause.type is not None:
                    self.check_type(clause.type)
                if clause.name is not None:
                    catch_type = _type_name(clause.type) if clause.type else "Exception"
                    self.scope[clause.name] = ("local", catch_type)
                self.stmt(clause.body)
            if stmt.finally_ is not None:
                self.stmt(stmt.finally_)
        elif isinstance(stmt, (Return, Throw)):
            if stmt.value is not None:
                self.expr(stmt.value)
        else:
            raise ResolutionError(f"unexpected statement {type(stmt).__name__}", stmt.span)

    def assign_target(self, target: Expr) -> None:
        if isinstance(target, NameRef):
            if target.name in self.scope:
                kind, type_name = self.scope[target.name]
                self.bindings[target.uid] = Binding(kind, target.name)
                self.expr_types[target.uid] = type_name
                return
            info = _lookup_field(self.types, self.owner.name, target.name)
            if info is None:
                raise ResolutionError(f"unknown variable {target.name}", target.span)
            self.bindings[target.uid] = Binding("field", info.key)
            self.field_keys[target.uid] = info.key
            self.expr_types[target.uid] = _type_name(info.type)
        else:
            self.expr(target)

    # Expressions

    def expr(self, expr: Expr) -> Optional[str]:
        result = self._expr(expr)
        self.expr_types[expr.uid] = result
        return result

    def _expr(self, expr: Expr) -> Optional[str]:
        if isinstance(expr, NewExpr):
            self.check_type(expr.type)
            for arg in expr.args:
                self.expr(arg)
            type_name = str(expr.type)
            info = self.types.get(type_name)
            if info is None or info.constructor is None:
                raise ResolutionError(f"cannot construct {type_name}", expr.span)
            self._check_arity(info.constructor, expr.args, expr.span)
            self.call_targets[expr.uid] = (info.constructor.key,)
            return type_name

        if isinstance(expr, CallExpr):
            return self.call(expr)

        if isinstance(expr, FieldAccess):
            receiver_type = self.expr(expr.receiver)
            info = _lookup_field(self.types, receiver_type, expr.name)
            if info is None:
                raise ResolutionError(
                    f"unknown field {expr.name} on {receiver_type}", expr.span
                )
            self.field_keys[expr.uid] = info.key
            return _type_name(info.type)

        if isinstance(expr, NameRef):
            if expr.name in self.scope:
                kind, type_name = self.scope[expr.name]
                self.bindings[expr.uid] = Binding(kind, expr.name)
                return type_name
            info = _lookup_field(self.types, self.owner.name, expr.name)
            if info is not None:
                self.bindings[expr.uid] = Binding("field", info.key)
                self.field_keys[expr.uid] = info.key
                return _type_name(info.type)
            if expr.name in self.types:
                self.bindings[expr.uid] = Binding("type", expr.name)
                return None
            raise ResolutionError(f"unknown name {expr.name}", expr.span)

        if isinstance(expr, ThisExpr):
            return self.owner.name
        if isinstance(expr, NullLiteral):
            return None
        if isinstance(expr, NullCompare):
            self.expr(expr.operand)
            return "bool"
        if isinstance(expr, ScalarExpr):
            for operand in expr.operands:
                self.expr(operand)
            return _scalar_type(expr)
        raise ResolutionError(f"unexpected expression {type(expr).__name__}", expr.span)

    def call(self, expr: CallExpr) -> Optional[str]:
        if expr.receiver is None:
            static_type: Optional[str] = self.owner.name
        else:
            static_type = self.expr(expr.receiver)
            binding = self.bindings.get(expr.receiver.uid)
            if binding is not None and binding.kind == "type":
                static_type = binding.name
        for arg in expr.args:
            self.expr(arg)

        if static_type is None:
            raise ResolutionError(
                f"cannot resolve call to {expr.name} on an untyped receiver", expr.span
            )
        target = None
        for info in _chain(self.types, static_type):
            target = info.method_named(expr.name)
            if target is not None:
                break
        if target is None:
            raise ResolutionError(
                f"unknown method {expr.name} on {static_type}", expr.span
            )
        self._check_arity(target, expr.args, expr.span)

        keys = [target.key]
        for subtype in _transitive_subtypes(self.types, static_type):
            override = self.types[subtype].method_named(expr.name)
            if override is not None and override.key not in keys:
                keys.append(override.key)
        self.call_targets[expr.uid] = tuple(keys)
        return _type_name(target.return_type) if target.return_type else None

    @staticmethod
    def _check_arity(target: MethodInfo, args: Sequence[Expr], span: Span) -> None:
        if len(target.params) != len(args):
            raise ResolutionError(
                f"{target.key} expects {len(target.params)} argument(s), got {len(args)}",
                span,
            )


def _transitive_subtypes(types: Mapping[str, TypeInfo], name: str) -> List[str]:
    found: List[str] = []
    frontier = [name]
    while frontier:
        current = frontier.pop()
        for info in types.values():
            if info.declared_supertype == current and info.name not in found:
                found.append(info.name)
                frontier.append(info.name)
    return sorted(found)


def _type_name(ref: Optional[TypeRef]) -> Optional[str]:
    if ref is None or ref.name == "void":
        return None
    return str(ref)


def _scalar_type(expr: ScalarExpr) -> str:
    if expr.op == "lit":
        literal = expr.literal or ""
        if literal.startswith('"'):
            return "string"
        if literal in ("true", "false"):
            return "bool"
        return "double" if "." in literal else "int"
    if expr.op in ("!", "&&", "||", "==", "!=", "<", ">", "<=", ">="):
        return "bool"
    return "int"


# Call resolution


def resolve_call(model: SemanticModel, method: MethodInfo, call: Expr) -> Tuple[MethodInfo, ...]:
    """Static target plus overrides in subtypes of the receiver's static type."""
    if method.resolution is None:
        return ()
    return tuple(model.method(key) for key in method.resolution.targets_of(call))


# Overlay


def _suffix_match(file_name: str, path: str) -> bool:
    wanted = [part for part in file_name.replace("\\", "/").split("/") if part]
    actual = [part for part in path.replace("\\", "/").split("/") if part]
    return bool(wanted) and actual[-len(wanted):] == wanted


def apply_overlay(
    model: SemanticModel, entries: Sequence["OverlayEntry"]
) -> SemanticModel:
    """Attach overlay attributes to the elements they name; unbound entries are errors."""
    if not entries:
        return model

    types = dict(model.types)
    provenance = list(model.overlay_provenance)
    errors = list(model.errors)

    for entry in entries:
        attribute = AttributeSpec(entry.annotation, tuple(entry.args))
        if entry.annotation not in ATTRIBUTE_PLACEMENT[entry.element_type]:
            errors.append(
                OverlayError(
                    f"annotation {entry.annotation} cannot be attached to a "
                    f"{entry.element_type.value}: {entry}",
                    line_no=entry.source_line,
                )
            )
            continue

        bound = False
        for name, info in list(types.items()):
            if info.builtin:
                continue
            updated, element = _bind_entry(info, entry, attribute)
            if updated is not None:
                types[name] = updated
                provenance.append(OverlayProvenance(entry.element_type, element, attribute))
                bound = True
        if not bound:
            errors.append(
                OverlayError(f"overlay entry matches no element: {entry}", line_no=entry.source_line)
            )

    # Overlay attributes obey the same declaration rules as inline ones
    known = {str(error) for error in _check_declarations(model.types)}
    for error in _check_declarations(types):
        if str(error) not in known:
            errors.append(error)
            logger.warning("Overlay breaks a declaration rule: %s", error)

    updated_model = SemanticModel(
        types=types,
        overlay_provenance=tuple(provenance),
        errors=tuple(errors),
        files=model.files,
    )
    updated_model = dataclasses.replace(updated_model, rtype=compute_rtype(updated_model))
    logger.info("Applied %d overlay entries", len(provenance) - len(model.overlay_provenance))
    return updated_model


def _at(span: Span, entry: "OverlayEntry") -> bool:
    return span.line == entry.line_no and _suffix_match(entry.file_name, span.file)


def _bind_entry(
    info: TypeInfo, entry: "OverlayEntry", attribute: AttributeSpec
) -> Tuple[Optional[TypeInfo], str]:
    kind = entry.element_type

    if kind == ElementKind.TYPE:
        if info.name == entry.element_name and _at(info.span, entry):
            return dataclasses.replace(info, attributes=info.attributes + (attribute,)), info.name
        return None, ""

    if kind == ElementKind.FIELD:
        for index, info_field in enumerate(info.fields):
            if info_field.name == entry.element_name and _at(info_field.span, entry):
                fields = list(info.fields)
                fields[index] = dataclasses.replace(
                    info_field, attributes=info_field.attributes + (attribute,)
                )
                return dataclasses.replace(info, fields=tuple(fields)), info_field.key
        return None, ""

    for index, method in enumerate(info.methods):
        if method.is_implicit:
            continue
        updated: Optional[MethodInfo] = None
        element = ""
        if kind == ElementKind.PARAMETER:
            for position, param in enumerate(method.params):
                if param.name == entry.element_name and _at(param.span, entry):
                    params = list(method.params)
                    params[position] = dataclasses.replace(
                        param, attributes=param.attributes + (attribute,)
                    )
                    updated = dataclasses.replace(method, params=tuple(params))
                    element = f"{method.key}({param.name})"
                    break
        elif method.name == entry.element_name and _at(method.span, entry):
            element = method.key
            if kind == ElementKind.RETURN_TYPE:
                updated = dataclasses.replace(
                    method, return_attributes=method.return_attributes + (attribute,)
                )
            else:
                updated = dataclasses.replace(
                    method, attributes=method.attributes + (attribute,)
                )
        if updated is not None:
            methods = list(info.methods)
            methods[index] = updated
            return dataclasses.replace(info, methods=tuple(methods)), element
    return None, ""
