"""Lexer, recursive-descent parser and pretty-printer for ``.tfm`` model files.

Operator precedence, tightest first: ``;`` then ``||`` then ``+``. All three
associate to the right. A guard written after an operand guards that operand,
a guard written after ``+`` guards what follows it::

    x[g1] + [g2] y[g3] + [g4] z   ==   x[g1] + [g2] (y[g3] + [g4] z)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from taskalg.terms import (
    REL_OPS,
    Activity,
    And,
    Assignment,
    BoolLit,
    Call,
    CompoundBody,
    Definition,
    Empty,
    Encapsulated,
    Expr,
    Fail,
    Guard,
    IntLit,
    Model,
    Not,
    Or,
    Par,
    Rel,
    Seq,
    Sel,
    SimpleBody,
    StrLit,
    Succeed,
    TaskRef,
    Until,
    Var,
    While,
)
from taskalg.state import quote


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        text = f"{self.span.line}:{self.span.column}: {self.message}"
        if self.expected:
            text += " (expected " + ", ".join(self.expected) + ")"
        return text


class ParseError(Exception):
    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


KEYWORDS = {"let", "main", "eps", "sigma", "phi", "until", "while", "true", "false"}
GLYPHS = {"ε": "eps", "σ": "sigma", "φ": "phi", "¬": "!"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op>\|\||&&|==|!=|<=|>=|[<>{}()\[\];+=,!])
  | (?P<glyph>[εσφ¬])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, string, op, eof
    text: str
    span: SourceSpan
    value: object = field(default=None, compare=False)


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        span = SourceSpan(line, pos - line_start + 1, 1)
        if m is None:
            raise ParseError(ParseDiagnostic(span, f"unexpected character {text[pos]!r}"))
        kind = m.lastgroup
        lexeme = m.group()
        span = SourceSpan(line, pos - line_start + 1, max(1, len(lexeme.split("\n")[0])))
        if kind == "ident":
            tokens.append(Token("keyword" if lexeme in KEYWORDS else "ident", lexeme, span))
        elif kind == "int":
            tokens.append(Token("int", lexeme, span, int(lexeme)))
        elif kind == "string":
            tokens.append(Token("string", lexeme, span, _unescape(lexeme[1:-1])))
        elif kind == "op":
            tokens.append(Token("op", lexeme, span))
        elif kind == "glyph":
            canon = GLYPHS[lexeme]
            tokens.append(Token("op" if canon == "!" else "keyword", canon, span))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", _eof_span(text)))
    return tokens


def _eof_span(text: str) -> SourceSpan:
    lines = text.split("\n")
    last = lines[-1]
    if last == "" and len(lines) > 1:
        return SourceSpan(len(lines) - 1, len(lines[-2]) + 1, 1)
    return SourceSpan(len(lines), len(last) + 1, 1)


def _describe(token: Token) -> str:
    return "end of input" if token.kind == "eof" else repr(token.text)


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def at(self, *texts: str) -> bool:
        tok = self.current
        return tok.kind in ("op", "keyword") and tok.text in texts

    def advance(self) -> Token:
        tok = self.current
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, expected=()):
        tok = self.current
        raise ParseError(
            ParseDiagnostic(tok.span, f"{message}, found {_describe(tok)}", tuple(expected))
        )

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}", [repr(text)])
        return self.advance()

    def ident(self) -> str:
        if self.current.kind != "ident":
            self.error("expected identifier", ["identifier"])
        return self.advance().text

    # -- model level

    def model(self) -> Model:
        definitions = []
        while self.at("let"):
            definitions.append(self.definition())
        if not self.at("main"):
            self.error("expected 'let' or 'main'", ["'let'", "'main'"])
        self.advance()
        self.expect("=")
        main = self.activity()
        self.end()
        return Model(tuple(definitions), main)

    def definition(self) -> Definition:
        self.expect("let")
        name = self.ident()
        self.expect("=")
        if self.at("{"):
            self.advance()
            body = self.activity()
            self.expect("}")
            return Definition(name, CompoundBody(body))
        if self.at("["):
            self.advance()
            assigns = () if self.at("]") else self.assigns()
            self.expect("]")
            return Definition(name, SimpleBody(assigns))
        self.error("expected '{' or '['", ["'{'", "'['"])

    def end(self) -> None:
        if self.current.kind != "eof":
            self.error("expected end of input", ["end of input"])

    # -- activities

    def activity(self) -> Activity:
        return self.sel()

    def sel(self) -> Activity:
        left = self.par()
        left_guard = self.guard() if self.at("[") else None
        if not self.at("+"):
            if left_guard is not None:
                self.error("a guarded operand must be followed by '+'", ["'+'"])
            return left
        self.advance()
        right_guard = self.guard() if self.at("[") else None
        right = self.sel()
        return Sel(left_guard, left, right_guard, right)

    def par(self) -> Activity:
        left = self.seq()
        if self.at("||"):
            self.advance()
            return Par(left, self.par())
        return left

    def seq(self) -> Activity:
        first = self.atom()
        if self.at(";"):
            self.advance()
            return Seq(first, self.seq())
        return first

    def atom(self) -> Activity:
        tok = self.current
        if self.at("eps"):
            self.advance()
            return Empty()
        if self.at("sigma"):
            self.advance()
            return Succeed()
        if self.at("phi"):
            self.advance()
            return Fail()
        if tok.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                assigns = () if self.at(")") else self.assigns()
                self.expect(")")
                return TaskRef(tok.text, assigns)
            return TaskRef(tok.text)
        if self.at("{"):
            self.advance()
            inner = self.activity()
            self.expect("}")
            return Encapsulated(inner)
        if self.at("("):
            self.advance()
            inner = self.activity()
            self.expect(")")
            return inner
        if self.at("until", "while"):
            kind = self.advance().text
            guard = self.guard() if self.at("[") else None
            self.expect("{")
            body = self.activity()
            self.expect("}")
            return Until(guard, body) if kind == "until" else While(guard, body)
        self.error(
            "expected an activity",
            ["'eps'", "'sigma'", "'phi'", "task name", "'{'", "'('", "'until'", "'while'"],
        )

    def guard(self) -> Guard:
        self.expect("[")
        expr = self.expr()
        self.expect("]")
        return Guard(expr)

    def assigns(self) -> tuple[Assignment, ...]:
        out = [self.assign()]
        while self.at(","):
            self.advance()
            out.append(self.assign())
        return tuple(out)

    def assign(self) -> Assignment:
        target = self.ident()
        self.expect("=")
        return Assignment(target, self.expr())

    # -- expressions

    def expr(self) -> Expr:
        left = self.andx()
        while self.at("||"):
            self.advance()
            left = Or(left, self.andx())
        return left

    def andx(self) -> Expr:
        left = self.notx()
        while self.at("&&"):
            self.advance()
            left = And(left, self.notx())
        return left

    def notx(self) -> Expr:
        if self.at("!"):
            self.advance()
            return Not(self.notx())
        return self.rel()

    def rel(self) -> Expr:
        left = self.prim()
        if self.at(*REL_OPS):
            op = self.advance().text
            return Rel(op, left, self.prim())
        return left

    def prim(self) -> Expr:
        tok = self.current
        if tok.kind == "int":
            self.advance()
            return IntLit(tok.value)
        if tok.kind == "string":
            self.advance()
            return StrLit(tok.value)
        if self.at("true", "false"):
            self.advance()
            return BoolLit(tok.text == "true")
        if tok.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.expr())
                self.expect(")")
                return Call(tok.text, tuple(args))
            return Var(tok.text)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        self.error("expected an expression", ["integer", "string", "'true'", "'false'", "identifier", "'('"])


def parse_model(text: str) -> Model:
    return Parser(text).model()


def parse_activity(text: str) -> Activity:
    parser = Parser(text)
    activity = parser.activity()
    parser.end()
    return activity


def parse_expr(text: str) -> Expr:
    parser = Parser(text)
    expr = parser.expr()
    parser.end()
    return expr


# -- pretty-printing ----------------------------------------------------------

_SEL, _PAR, _SEQ, _ATOM = range(4)


def _level(activity: Activity) -> int:
    if isinstance(activity, Sel):
        return _SEL
    if isinstance(activity, Par):
        return _PAR
    if isinstance(activity, Seq):
        return _SEQ
    return _ATOM


def _wrap(activity: Activity, minimum: int) -> str:
    text = format_activity(activity)
    return f"({text})" if _level(activity) < minimum else text


def format_activity(activity: Activity) -> str:
    if isinstance(activity, Empty):
        return "eps"
    if isinstance(activity, Succeed):
        return "sigma"
    if isinstance(activity, Fail):
        return "phi"
    if isinstance(activity, TaskRef):
        if activity.overrides is None:
            return activity.name
        return f"{activity.name}({format_assigns(activity.overrides)})"
    if isinstance(activity, Encapsulated):
        return "{ " + format_activity(activity.inner) + " }"
    if isinstance(activity, (Until, While)):
        kw = "until" if isinstance(activity, Until) else "while"
        guard = f" [{format_expr(activity.guard.expr)}]" if activity.guard else ""
        return f"{kw}{guard} {{ {format_activity(activity.body)} }}"
    if isinstance(activity, Seq):
        return f"{_wrap(activity.first, _ATOM)} ; {_wrap(activity.rest, _SEQ)}"
    if isinstance(activity, Par):
        return f"{_wrap(activity.left, _SEQ)} || {_wrap(activity.right, _PAR)}"
    if isinstance(activity, Sel):
        left = _wrap(activity.left, _PAR)
        if activity.left_guard is not None:
            left += f"[{format_expr(activity.left_guard.expr)}]"
        right = format_activity(activity.right)
        if activity.right_guard is not None:
            right = f"[{format_expr(activity.right_guard.expr)}] {right}"
        return f"{left} + {right}"
    raise TypeError(f"not an activity: {activity!r}")


def format_assigns(assigns) -> str:
    return ", ".join(f"{a.target}={format_expr(a.value)}" for a in assigns)


_OR, _AND, _NOT, _REL, _PRIM = range(5)


def _expr_level(expr: Expr) -> int:
    if isinstance(expr, Or):
        return _OR
    if isinstance(expr, And):
        return _AND
    if isinstance(expr, Not):
        return _NOT
    if isinstance(expr, Rel):
        return _REL
    return _PRIM


def _ewrap(expr: Expr, minimum: int) -> str:
    text = format_expr(expr)
    return f"({text})" if _expr_level(expr) < minimum else text


def format_expr(expr: Expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, StrLit):
        return quote(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, Not):
        return "!" + _ewrap(expr.operand, _NOT)
    if isinstance(expr, Or):
        return f"{_ewrap(expr.left, _OR)} || {_ewrap(expr.right, _AND)}"
    if isinstance(expr, And):
        return f"{_ewrap(expr.left, _AND)} && {_ewrap(expr.right, _NOT)}"
    if isinstance(expr, Rel):
        return f"{_ewrap(expr.left, _PRIM)} {expr.op} {_ewrap(expr.right, _PRIM)}"
    raise TypeError(f"not an expression: {expr!r}")


def pretty_print(model: Model) -> str:
    lines = []
    for definition in model.definitions:
        if isinstance(definition.body, CompoundBody):
            lines.append(f"let {definition.name} = {{ {format_activity(definition.body.activity)} }}")
        else:
            lines.append(f"let {definition.name} = [{format_assigns(definition.body.assignments)}]")
    lines.append(f"main = {format_activity(model.main)}")
    return "\n".join(lines) + "\n"
