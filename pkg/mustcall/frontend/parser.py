"""
Recursive-descent parser for MiniOO.

Parsing stops at the first syntax error. Attributes are validated for name,
arity and placement while parsing, so every AttributeSpec in a returned tree
is well formed.
"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

from mustcall.constants import Constants
from mustcall.errors import ParseError
from mustcall.frontend.ast_nodes import (
    ATTRIBUTE_ARITY,
    ATTRIBUTE_PLACEMENT,
    Assign,
    AttributeKind,
    AttributeSpec,
    Block,
    CallExpr,
    CatchClause,
    ClassDecl,
    CompilationUnit,
    ElementKind,
    Expr,
    ExprStmt,
    FieldAccess,
    FieldDecl,
    If,
    LocalDecl,
    MethodDecl,
    NameRef,
    NewExpr,
    NullCompare,
    NullLiteral,
    Param,
    Return,
    ScalarExpr,
    SourceUnit,
    Stmt,
    ThisExpr,
    Throw,
    Try,
    TypeRef,
    Using,
    While,
)
from mustcall.frontend.lexer import Token, TokenKind, lex

logger = logging.getLogger(__name__)

MODIFIERS = frozenset(
    {
        "public",
        "private",
        "protected",
        "internal",
        "static",
        "readonly",
        "virtual",
        "override",
        "abstract",
        "sealed",
    }
)

BINARY_LEVELS: Tuple[Tuple[TokenKind, ...], ...] = (
    (TokenKind.OR,),
    (TokenKind.AND,),
    (TokenKind.EQ, TokenKind.NEQ),
    (TokenKind.LT, TokenKind.GT, TokenKind.LE, TokenKind.GE),
    (TokenKind.PLUS, TokenKind.MINUS),
    (TokenKind.STAR, TokenKind.SLASH, TokenKind.PERCENT),
)

LITERAL_KINDS = (TokenKind.INT, TokenKind.STRING, TokenKind.TRUE, TokenKind.FALSE)


def check_placement(attributes: Iterable[AttributeSpec], element: ElementKind) -> None:
    """Raise ParseError for an attribute that cannot sit on this element kind."""
    for attribute in attributes:
        if attribute.kind not in ATTRIBUTE_PLACEMENT[element]:
            raise ParseError(
                f"attribute {attribute.kind} is not allowed on a {element.value.lower()}",
                attribute.span,
            )


class Parser:
    """Parses one token sequence into a compilation unit."""

    def __init__(self, tokens: Sequence[Token]):
        if not tokens or tokens[-1].kind != TokenKind.EOF:
            raise ParseError("token sequence must end with EOF")
        self._tokens = tokens
        self._pos = 0
        self._next_uid = 1
        self._catch_depth = 0
        self.path = tokens[-1].span.file

    # Token helpers

    def _peek(self, offset: int = 0) -> Token:
        index = min(self._pos + offset, len(self._tokens) - 1)
        return self._tokens[index]

    def _at(self, kind: TokenKind, offset: int = 0) -> bool:
        return self._peek(offset).kind == kind

    def _advance(self) -> Token:
        token = self._peek()
        if token.kind != TokenKind.EOF:
            self._pos += 1
        return token

    def _accept(self, kind: TokenKind) -> Optional[Token]:
        if self._at(kind):
            return self._advance()
        return None

    def _expect(self, kind: TokenKind, what: Optional[str] = None) -> Token:
        token = self._peek()
        if token.kind != kind:
            raise ParseError(
                f"expected {what or kind.value}, found {token}", token.span
            )
        return self._advance()

    def _uid(self) -> int:
        uid = self._next_uid
        self._next_uid += 1
        return uid

    # Declarations

    def parse_unit(self) -> CompilationUnit:
        classes: List[ClassDecl] = []
        while not self._at(TokenKind.EOF):
            classes.append(self._class_decl())
        logger.debug("Parsed %d classes from %s", len(classes), self.path)
        return CompilationUnit(self.path, tuple(classes))

    def parse_attribute(self) -> AttributeSpec:
        self._expect(TokenKind.LBRACKET, "'['")
        attribute = self._attribute_body()
        self._expect(TokenKind.RBRACKET, "']'")
        return attribute

    def _attributes(self) -> Tuple[AttributeSpec, ...]:
        attributes: List[AttributeSpec] = []
        while self._accept(TokenKind.LBRACKET):
            attributes.append(self._attribute_body())
            while self._accept(TokenKind.COMMA):
                attributes.append(self._attribute_body())
            self._expect(TokenKind.RBRACKET, "']'")
        return tuple(attributes)

    def _attribute_body(self) -> AttributeSpec:
        name = self._expect(TokenKind.IDENT, "attribute name")
        try:
            kind = AttributeKind(name.text)
        except ValueError:
            raise ParseError(f"unknown attribute {name.text}", name.span) from None

        args: List[str] = []
        if self._accept(TokenKind.LPAREN):
            args.append(self._expect(TokenKind.IDENT, "attribute argument").text)
            while self._accept(TokenKind.COMMA):
                args.append(self._expect(TokenKind.IDENT, "attribute argument").text)
            self._expect(TokenKind.RPAREN, "')'")

        arity = ATTRIBUTE_ARITY[kind]
        if len(args) != arity:
            raise ParseError(
                f"attribute {kind} takes {arity} argument(s), got {len(args)}",
                name.span,
            )
        return AttributeSpec(kind, tuple(args), name.span)

    def _modifiers(self) -> Tuple[str, ...]:
        modifiers: List[str] = []
        while self._at(TokenKind.IDENT) and self._peek().text in MODIFIERS:
            modifiers.append(self._advance().text)
        return tuple(modifiers)

    def _class_decl(self) -> ClassDecl:
        attributes = self._attributes()
        check_placement(attributes, ElementKind.TYPE)
        modifiers = self._modifiers()
        self._expect(TokenKind.CLASS, "'class'")
        name = self._expect(TokenKind.IDENT, "class name")

        supertype: Optional[str] = None
        interface: Optional[str] = None
        if self._accept(TokenKind.COLON):
            bases = [self._expect(TokenKind.IDENT, "base type name")]
            while self._accept(TokenKind.COMMA):
                bases.append(self._expect(TokenKind.IDENT, "base type name"))
            for base in bases:
                if base.text == Constants.DISPOSABLE_INTERFACE:
                    if interface is not None:
                        raise ParseError("interface listed twice", base.span)
                    interface = base.text
                elif supertype is not None:
                    raise ParseError(
                        f"class {name.text} declares more than one supertype", base.span
                    )
                else:
                    supertype = base.text

        fields: List[FieldDecl] = []
        constructors: List[MethodDecl] = []
        methods: List[MethodDecl] = []
        self._expect(TokenKind.LBRACE, "'{'")
        while not self._accept(TokenKind.RBRACE):
            if self._at(TokenKind.EOF):
                raise ParseError("unterminated class body", self._peek().span)
            member = self._member(name.text)
            if isinstance(member, FieldDecl):
                fields.append(member)
            elif member.is_constructor:
                constructors.append(member)
            else:
                methods.append(member)

        return ClassDecl(
            name=name.text,
            supertype=supertype,
            interface=interface,
            fields=tuple(fields),
            constructors=tuple(constructors),
            methods=tuple(methods),
            attributes=attributes,
            modifiers=modifiers,
            span=name.span,
        )

    def _member(self, class_name: str):
        attributes = self._attributes()
        modifiers = self._modifiers()

        if (
            self._at(TokenKind.IDENT)
            and self._peek().text == class_name
            and self._at(TokenKind.LPAREN, 1)
        ):
            name = self._advance()
            method_attributes, return_attributes = _split_method_attributes(attributes)
            params = self._params()
            body = self._block()
            return MethodDecl(
                name=name.text,
                return_type=None,
                params=params,
                body=body,
                modifiers=modifiers,
                attributes=method_attributes,
                return_attributes=return_attributes,
                is_constructor=True,
                span=name.span,
            )

        type_ref = self._type()
        name = self._expect(TokenKind.IDENT, "member name")
        if self._at(TokenKind.LPAREN):
            method_attributes, return_attributes = _split_method_attributes(attributes)
            params = self._params()
            body = self._block()
            return MethodDecl(
                name=name.text,
                return_type=type_ref,
                params=params,
                body=body,
                modifiers=modifiers,
                attributes=method_attributes,
                return_attributes=return_attributes,
                span=name.span,
            )

        self._expect(TokenKind.SEMI, "';' or '('")
        check_placement(attributes, ElementKind.FIELD)
        return FieldDecl(type_ref, name.text, modifiers, attributes, span=name.span)

    def _params(self) -> Tuple[Param, ...]:
        self._expect(TokenKind.LPAREN, "'('")
        params: List[Param] = []
        if not self._at(TokenKind.RPAREN):
            params.append(self._param())
            while self._accept(TokenKind.COMMA):
                params.append(self._param())
        self._expect(TokenKind.RPAREN, "')'")
        return tuple(params)

    def _param(self) -> Param:
        attributes = self._attributes()
        check_placement(attributes, ElementKind.PARAMETER)
        type_ref = self._type()
        name = self._expect(TokenKind.IDENT, "parameter name")
        return Param(type_ref, name.text, attributes, span=name.span)

    def _type(self) -> TypeRef:
        name = self._expect(TokenKind.IDENT, "type name")
        arg: Optional[TypeRef] = None
        if self._accept(TokenKind.LT):
            arg = self._type()
            self._expect(TokenKind.GT, "'>'")
        return TypeRef(name.text, arg, span=name.span)

    # Statements

    def _block(self) -> Block:
        start = self._expect(TokenKind.LBRACE, "'{'")
        stmts: List[Stmt] = []
        while not self._accept(TokenKind.RBRACE):
            if self._at(TokenKind.EOF):
                raise ParseError("unterminated block", self._peek().span)
            stmts.append(self._statement())
        return Block(tuple(stmts), span=start.span, uid=self._uid())

    def _body(self) -> Block:
        """Branch and loop bodies are always blocks."""
        if self._at(TokenKind.LBRACE):
            return self._block()
        stmt = self._statement()
        return Block((stmt,), span=stmt.span, uid=self._uid())

    def _statement(self) -> Stmt:
        token = self._peek()
        kind = token.kind

        if kind == TokenKind.LBRACE:
            return self._block()

        if kind == TokenKind.IF:
            self._advance()
            self._expect(TokenKind.LPAREN, "'('")
            cond = self._expression()
            self._expect(TokenKind.RPAREN, "')'")
            then = self._body()
            orelse = self._body() if self._accept(TokenKind.ELSE) else None
            return If(cond, then, orelse, span=token.span, uid=self._uid())

        if kind == TokenKind.WHILE:
            self._advance()
            self._expect(TokenKind.LPAREN, "'('")
            cond = self._expression()
            self._expect(TokenKind.RPAREN, "')'")
            body = self._body()
            return While(cond, body, span=token.span, uid=self._uid())

        if kind == TokenKind.TRY:
            return self._try()

        if kind == TokenKind.USING:
            self._advance()
            self._expect(TokenKind.LPAREN, "'('")
            type_ref = self._type()
            name = self._expect(TokenKind.IDENT, "variable name")
            self._expect(TokenKind.ASSIGN, "'='")
            init = self._expression()
            self._expect(TokenKind.RPAREN, "')'")
            body = self._body()
            return Using(type_ref, name.text, init, body, span=token.span, uid=self._uid())

        if kind == TokenKind.RETURN:
            self._advance()
            value = None if self._at(TokenKind.SEMI) else self._expression()
            self._expect(TokenKind.SEMI, "';'")
            return Return(value, span=token.span, uid=self._uid())

        if kind == TokenKind.THROW:
            self._advance()
            value: Optional[Expr] = None
            if self._at(TokenKind.SEMI):
                if self._catch_depth == 0:
                    raise ParseError(
                        "bare 'throw;' is only allowed inside a catch block", token.span
                    )
            else:
                value = self._expression()
            self._expect(TokenKind.SEMI, "';'")
            return Throw(value, span=token.span, uid=self._uid())

        if self._declaration_ahead():
            type_ref = self._type()
            name = self._expect(TokenKind.IDENT, "variable name")
            init = self._expression() if self._accept(TokenKind.ASSIGN) else None
            self._expect(TokenKind.SEMI, "';'")
            return LocalDecl(type_ref, name.text, init, span=token.span, uid=self._uid())

        expr = self._expression()
        if self._accept(TokenKind.ASSIGN):
            if not isinstance(expr, (NameRef, FieldAccess)):
                raise ParseError("assignment target must be a variable or field", expr.span)
            value = self._expression()
            self._expect(TokenKind.SEMI, "';'")
            return Assign(expr, value, span=token.span, uid=self._uid())
        self._expect(TokenKind.SEMI, "';'")
        return ExprStmt(expr, span=token.span, uid=self._uid())

    def _try(self) -> Try:
        start = self._advance()
        body = self._block()
        catches: List[CatchClause] = []
        while self._at(TokenKind.CATCH):
            catch_token = self._advance()
            catch_type: Optional[TypeRef] = None
            catch_name: Optional[str] = None
            if self._accept(TokenKind.LPAREN):
                catch_type = self._type()
                if self._at(TokenKind.IDENT):
                    catch_name = self._advance().text
                self._expect(TokenKind.RPAREN, "')'")
            self._catch_depth += 1
            try:
                handler = self._block()
            finally:
                self._catch_depth -= 1
            catches.append(
                CatchClause(
                    catch_type, catch_name, handler, span=catch_token.span, uid=self._uid()
                )
            )
        finally_block = self._block() if self._accept(TokenKind.FINALLY) else None
        if not catches and finally_block is None:
            raise ParseError("try needs at least one catch or a finally", start.span)
        return Try(
            body, tuple(catches), finally_block, span=start.span, uid=self._uid()
        )

    def _declaration_ahead(self) -> bool:
        """A statement is a declaration when it starts with `type IDENT`."""
        if not self._at(TokenKind.IDENT):
            return False
        saved = self._pos
        try:
            self._type()
            return self._at(TokenKind.IDENT)
        except ParseError:
            return False
        finally:
            self._pos = saved

    # Expressions

    def _expression(self) -> Expr:
        return self._binary(0)

    def _binary(self, level: int) -> Expr:
        if level == len(BINARY_LEVELS):
            return self._unary()
        left = self._binary(level + 1)
        while self._peek().kind in BINARY_LEVELS[level]:
            operator = self._advance()
            right = self._binary(level + 1)
            left = self._combine(operator, left, right)
        return left

    def _combine(self, operator: Token, left: Expr, right: Expr) -> Expr:
        if operator.kind in (TokenKind.EQ, TokenKind.NEQ):
            is_equal = operator.kind == TokenKind.EQ
            if isinstance(right, NullLiteral) and not isinstance(left, NullLiteral):
                return NullCompare(left, is_equal, span=left.span, uid=self._uid())
            if isinstance(left, NullLiteral) and not isinstance(right, NullLiteral):
                return NullCompare(
                    right, is_equal, null_on_left=True, span=left.span, uid=self._uid()
                )
        return ScalarExpr(operator.text, (left, right), span=left.span, uid=self._uid())

    def _unary(self) -> Expr:
        if self._at(TokenKind.BANG) or self._at(TokenKind.MINUS):
            operator = self._advance()
            operand = self._unary()
            op = "!" if operator.kind == TokenKind.BANG else "neg"
            return ScalarExpr(op, (operand,), span=operator.span, uid=self._uid())
        return self._postfix()

    def _postfix(self) -> Expr:
        expr = self._primary()
        while self._accept(TokenKind.DOT):
            name = self._expect(TokenKind.IDENT, "member name")
            if self._at(TokenKind.LPAREN):
                args = self._args()
                expr = CallExpr(expr, name.text, args, span=name.span, uid=self._uid())
            else:
                expr = FieldAccess(expr, name.text, span=name.span, uid=self._uid())
        return expr

    def _args(self) -> Tuple[Expr, ...]:
        self._expect(TokenKind.LPAREN, "'('")
        args: List[Expr] = []
        if not self._at(TokenKind.RPAREN):
            args.append(self._expression())
            while self._accept(TokenKind.COMMA):
                args.append(self._expression())
        self._expect(TokenKind.RPAREN, "')'")
        return tuple(args)

    def _primary(self) -> Expr:
        token = self._peek()
        kind = token.kind

        if kind == TokenKind.NEW:
            self._advance()
            type_ref = self._type()
            args = self._args()
            return NewExpr(type_ref, args, span=token.span, uid=self._uid())
        if kind == TokenKind.IDENT:
            self._advance()
            if self._at(TokenKind.LPAREN):
                args = self._args()
                return CallExpr(None, token.text, args, span=token.span, uid=self._uid())
            return NameRef(token.text, span=token.span, uid=self._uid())
        if kind == TokenKind.THIS:
            self._advance()
            return ThisExpr(span=token.span, uid=self._uid())
        if kind == TokenKind.NULL:
            self._advance()
            return NullLiteral(span=token.span, uid=self._uid())
        if kind in LITERAL_KINDS:
            self._advance()
            return ScalarExpr("lit", (), token.text, span=token.span, uid=self._uid())
        if kind == TokenKind.LPAREN:
            self._advance()
            expr = self._expression()
            self._expect(TokenKind.RPAREN, "')'")
            return expr
        raise ParseError(f"expected expression, found {token}", token.span)


def _split_method_attributes(
    attributes: Tuple[AttributeSpec, ...],
) -> Tuple[Tuple[AttributeSpec, ...], Tuple[AttributeSpec, ...]]:
    """Separate method-level attributes from return-position ones."""
    method_level: List[AttributeSpec] = []
    return_position: List[AttributeSpec] = []
    for attribute in attributes:
        if attribute.kind in ATTRIBUTE_PLACEMENT[ElementKind.RETURN_TYPE]:
            return_position.append(attribute)
        elif attribute.kind in ATTRIBUTE_PLACEMENT[ElementKind.METHOD]:
            method_level.append(attribute)
        else:
            raise ParseError(
                f"attribute {attribute.kind} is not allowed on a method", attribute.span
            )
    return tuple(method_level), tuple(return_position)


def parse(tokens: Sequence[Token]) -> CompilationUnit:
    """Parse a token sequence produced by lex into a compilation unit."""
    return Parser(tokens).parse_unit()


def parse_attribute(tokens: Sequence[Token]) -> AttributeSpec:
    """Parse a single `[Kind(args)]` attribute starting at LBRACKET."""
    return Parser(tokens).parse_attribute()


def parse_source(unit: SourceUnit) -> CompilationUnit:
    return parse(lex(unit))
