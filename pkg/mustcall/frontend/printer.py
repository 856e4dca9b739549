"""
Pretty printer for MiniOO syntax trees.

The output re-parses to a structurally equal tree: compound operands are
parenthesized and every branch body is printed as a block.
"""

from typing import List

from mustcall.frontend.ast_nodes import (
    Assign,
    Block,
    CallExpr,
    ClassDecl,
    CompilationUnit,
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
    Stmt,
    ThisExpr,
    Throw,
    Try,
    Using,
    While,
)

INDENT = "    "


def format_expr(expr: Expr) -> str:
    if isinstance(expr, NewExpr):
        return f"new {expr.type}({_args(expr.args)})"
    if isinstance(expr, CallExpr):
        if expr.receiver is None:
            return f"{expr.name}({_args(expr.args)})"
        return f"{_operand(expr.receiver)}.{expr.name}({_args(expr.args)})"
    if isinstance(expr, FieldAccess):
        return f"{_operand(expr.receiver)}.{expr.name}"
    if isinstance(expr, NameRef):
        return expr.name
    if isinstance(expr, ThisExpr):
        return "this"
    if isinstance(expr, NullLiteral):
        return "null"
    if isinstance(expr, NullCompare):
        operator = "==" if expr.is_equal else "!="
        if expr.null_on_left:
            return f"null {operator} {_operand(expr.operand)}"
        return f"{_operand(expr.operand)} {operator} null"
    if isinstance(expr, ScalarExpr):
        if expr.op == "lit":
            return expr.literal or ""
        if expr.op == "!":
            return f"!{_operand(expr.operands[0])}"
        if expr.op == "neg":
            return f"-{_operand(expr.operands[0])}"
        left, right = expr.operands
        return f"{_operand(left)} {expr.op} {_operand(right)}"
    raise TypeError(f"cannot print expression {expr!r}")


def _operand(expr: Expr) -> str:
    text = format_expr(expr)
    if isinstance(expr, NullCompare) or (
        isinstance(expr, ScalarExpr) and expr.op != "lit"
    ):
        return f"({text})"
    return text


def _args(args) -> str:
    return ", ".join(format_expr(arg) for arg in args)


def _attributes_inline(attributes) -> str:
    return "".join(f"{attribute} " for attribute in attributes)


class _Printer:
    def __init__(self) -> None:
        self.lines: List[str] = []
        self.depth = 0

    def emit(self, text: str) -> None:
        self.lines.append(f"{INDENT * self.depth}{text}")

    def attributes(self, attributes) -> None:
        for attribute in attributes:
            self.emit(str(attribute))

    def unit(self, unit: CompilationUnit) -> None:
        for index, class_decl in enumerate(unit.classes):
            if index:
                self.lines.append("")
            self.class_decl(class_decl)

    def class_decl(self, decl: ClassDecl) -> None:
        self.attributes(decl.attributes)
        bases = [base for base in (decl.supertype, decl.interface) if base]
        header = _modifiers(decl.modifiers) + f"class {decl.name}"
        if bases:
            header += " : " + ", ".join(bases)
        self.emit(header + " {")
        self.depth += 1
        for field_decl in decl.fields:
            self.field_decl(field_decl)
        for method in decl.constructors + decl.methods:
            self.method_decl(method)
        self.depth -= 1
        self.emit("}")

    def field_decl(self, decl: FieldDecl) -> None:
        self.attributes(decl.attributes)
        self.emit(f"{_modifiers(decl.modifiers)}{decl.type} {decl.name};")

    def method_decl(self, decl: MethodDecl) -> None:
        self.attributes(decl.attributes + decl.return_attributes)
        params = ", ".join(_param(param) for param in decl.params)
        if decl.is_constructor:
            signature = f"{decl.name}({params})"
        else:
            signature = f"{decl.return_type} {decl.name}({params})"
        self.open_block(_modifiers(decl.modifiers) + signature, decl.body)

    def open_block(self, header: str, block: Block) -> None:
        self.emit(f"{header} {{" if header else "{")
        self.depth += 1
        for stmt in block.stmts:
            self.stmt(stmt)
        self.depth -= 1
        self.emit("}")

    def stmt(self, stmt: Stmt) -> None:
        if isinstance(stmt, Block):
            self.open_block("", stmt)
        elif isinstance(stmt, LocalDecl):
            init = "" if stmt.init is None else f" = {format_expr(stmt.init)}"
            self.emit(f"{stmt.type} {stmt.name}{init};")
        elif isinstance(stmt, Assign):
            self.emit(f"{format_expr(stmt.target)} = {format_expr(stmt.value)};")
        elif isinstance(stmt, ExprStmt):
            self.emit(f"{format_expr(stmt.expr)};")
        elif isinstance(stmt, If):
            self.if_stmt(stmt)
        elif isinstance(stmt, While):
            self.open_block(f"while ({format_expr(stmt.cond)})", stmt.body)
        elif isinstance(stmt, Try):
            self.try_stmt(stmt)
        elif isinstance(stmt, Using):
            header = f"using ({stmt.type} {stmt.name} = {format_expr(stmt.init)})"
            self.open_block(header, stmt.body)
        elif isinstance(stmt, Return):
            value = "" if stmt.value is None else f" {format_expr(stmt.value)}"
            self.emit(f"return{value};")
        elif isinstance(stmt, Throw):
            value = "" if stmt.value is None else f" {format_expr(stmt.value)}"
            self.emit(f"throw{value};")
        else:
            raise TypeError(f"cannot print statement {stmt!r}")

    def if_stmt(self, stmt: If) -> None:
        self.open_block(f"if ({format_expr(stmt.cond)})", stmt.then)
        if stmt.orelse is not None:
            self.open_block("else", stmt.orelse)

    def try_stmt(self, stmt: Try) -> None:
        self.open_block("try", stmt.body)
        for clause in stmt.catches:
            header = "catch"
            if clause.type is not None:
                name = f" {clause.name}" if clause.name else ""
                header += f" ({clause.type}{name})"
            self.open_block(header, clause.body)
        if stmt.finally_ is not None:
            self.open_block("finally", stmt.finally_)


def _modifiers(modifiers) -> str:
    return "".join(f"{modifier} " for modifier in modifiers)


def _param(param: Param) -> str:
    return f"{_attributes_inline(param.attributes)}{param.type} {param.name}"


def pretty(unit: CompilationUnit) -> str:
    """Render a compilation unit as MiniOO source text."""
    printer = _Printer()
    printer.unit(unit)
    return "\n".join(printer.lines) + "\n"
