"""Values, environments and three-valued guard evaluation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from taskalg.terms import (
    And,
    Assignment,
    BoolLit,
    Call,
    Expr,
    Guard,
    IntLit,
    Not,
    Or,
    Rel,
    StrLit,
    Var,
)


class SortError(Exception):
    pass


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Unknown:
    """An undetermined value, identified by its symbol."""

    symbol: str


Value = Union[Bool, Int, Str, Unknown]


class _Unbound:
    def __repr__(self) -> str:
        return "Unbound"


Unbound = _Unbound()


class Tri(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __invert__(self) -> "Tri":
        if self is Tri.UNKNOWN:
            return self
        return Tri.FALSE if self is Tri.TRUE else Tri.TRUE

    def __and__(self, other: "Tri") -> "Tri":
        if Tri.FALSE in (self, other):
            return Tri.FALSE
        if Tri.UNKNOWN in (self, other):
            return Tri.UNKNOWN
        return Tri.TRUE

    def __or__(self, other: "Tri") -> "Tri":
        if Tri.TRUE in (self, other):
            return Tri.TRUE
        if Tri.UNKNOWN in (self, other):
            return Tri.UNKNOWN
        return Tri.FALSE


@dataclass(frozen=True)
class Env:
    """Variable bindings plus the per-path counters used to name fresh unknowns.

    Equality only looks at the bindings.
    """

    bindings: tuple[tuple[str, Value], ...] = ()
    counters: tuple[tuple[str, int], ...] = field(default=(), compare=False)

    def lookup(self, name: str):
        for key, value in self.bindings:
            if key == name:
                return value
        return Unbound

    def bind(self, name: str, value: Value) -> "Env":
        rest = tuple((k, v) for k, v in self.bindings if k != name)
        return Env(tuple(sorted(rest + ((name, value),))), self.counters)

    def as_dict(self) -> dict[str, Value]:
        return dict(self.bindings)

    def mint(self, callee: str) -> tuple[Unknown, "Env"]:
        counts = dict(self.counters)
        n = counts.get(callee, 0) + 1
        counts[callee] = n
        return Unknown(f"{callee}#{n}"), Env(self.bindings, tuple(sorted(counts.items())))

    def with_counters(self, other: "Env") -> "Env":
        return Env(self.bindings, other.counters)


# -- static sort checking -----------------------------------------------------

ANY = "any"


def sort_of(expr: Expr) -> str:
    """Return ``bool``, ``int``, ``str`` or ``any`` (not statically known)."""
    if isinstance(expr, IntLit):
        return "int"
    if isinstance(expr, StrLit):
        return "str"
    if isinstance(expr, BoolLit):
        return "bool"
    if isinstance(expr, Var):
        return ANY
    if isinstance(expr, Call):
        for arg in expr.args:
            sort_of(arg)
        return ANY
    if isinstance(expr, Not):
        _expect_bool(sort_of(expr.operand), "!")
        return "bool"
    if isinstance(expr, (And, Or)):
        op = "&&" if isinstance(expr, And) else "||"
        _expect_bool(sort_of(expr.left), op)
        _expect_bool(sort_of(expr.right), op)
        return "bool"
    if isinstance(expr, Rel):
        left, right = sort_of(expr.left), sort_of(expr.right)
        if expr.op not in ("==", "!=") and "bool" in (left, right):
            raise SortError(f"cannot order booleans with {expr.op!r}")
        if ANY not in (left, right) and left != right:
            raise SortError(f"cannot compare {left} with {right}")
        return "bool"
    raise TypeError(f"not an expression: {expr!r}")


def _expect_bool(sort: str, op: str) -> None:
    if sort not in ("bool", ANY):
        raise SortError(f"operand of {op!r} must be boolean, got {sort}")


def check_expr(expr: Expr) -> str:
    return sort_of(expr)


def check_guard(guard: Guard) -> None:
    sort = sort_of(guard.expr)
    if sort not in ("bool", ANY):
        raise SortError(f"guard must be boolean, got {sort}")


# -- evaluation ---------------------------------------------------------------


def _tri_of(value: Value, op: str) -> Tri:
    if isinstance(value, Unknown):
        return Tri.UNKNOWN
    if isinstance(value, Bool):
        return Tri.TRUE if value.value else Tri.FALSE
    raise SortError(f"operand of {op!r} must be boolean, got {render_value(value)}")


def _from_tri(tri: Tri, symbol: str) -> Value:
    if tri is Tri.UNKNOWN:
        return Unknown(symbol)
    return Bool(tri is Tri.TRUE)


def _compare(op: str, left: Value, right: Value) -> Value:
    if isinstance(left, Unknown) or isinstance(right, Unknown):
        if left == right:
            return Bool(op in ("==", "<=", ">="))
        return Unknown(f"({render_value(left)} {op} {render_value(right)})")
    if type(left) is not type(right):
        raise SortError(f"cannot compare {render_value(left)} with {render_value(right)}")
    if op == "==":
        return Bool(left.value == right.value)
    if op == "!=":
        return Bool(left.value != right.value)
    if isinstance(left, Bool):
        raise SortError(f"cannot order booleans with {op!r}")
    a, b = left.value, right.value
    return Bool({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op])


def evaluate(env: Env, expr: Expr) -> tuple[Value, Env]:
    """Evaluate ``expr``, returning the value and the env with bumped counters."""
    if isinstance(expr, IntLit):
        return Int(expr.value), env
    if isinstance(expr, StrLit):
        return Str(expr.value), env
    if isinstance(expr, BoolLit):
        return Bool(expr.value), env
    if isinstance(expr, Var):
        value = env.lookup(expr.name)
        if value is Unbound:
            return Unknown(expr.name), env
        return value, env
    if isinstance(expr, Call):
        for arg in expr.args:
            _, env = evaluate(env, arg)
        return env.mint(expr.name)
    if isinstance(expr, Not):
        value, env = evaluate(env, expr.operand)
        return _from_tri(~_tri_of(value, "!"), f"!{render_value(value)}"), env
    if isinstance(expr, (And, Or)):
        op = "&&" if isinstance(expr, And) else "||"
        left, env = evaluate(env, expr.left)
        right, env = evaluate(env, expr.right)
        a, b = _tri_of(left, op), _tri_of(right, op)
        tri = a & b if isinstance(expr, And) else a | b
        return _from_tri(tri, f"({render_value(left)} {op} {render_value(right)})"), env
    if isinstance(expr, Rel):
        left, env = evaluate(env, expr.left)
        right, env = evaluate(env, expr.right)
        return _compare(expr.op, left, right), env
    raise TypeError(f"not an expression: {expr!r}")


def eval_expr(env: Env, expr: Expr) -> Value:
    return evaluate(env, expr)[0]


def to_tri(value: Value) -> Tri:
    return _tri_of(value, "guard")


def eval_guard(env: Env, guard: Optional[Guard]) -> Tri:
    if guard is None:
        return Tri.TRUE
    return to_tri(eval_expr(env, guard.expr))


def apply_assignments(
    env: Env, assigns: tuple[Assignment, ...] | list[Assignment]
) -> tuple[Env, list[tuple[str, Value]]]:
    applied = []
    for assign in assigns:
        value, env = evaluate(env, assign.value)
        env = env.bind(assign.target, value)
        applied.append((assign.target, value))
    return env, applied


def replay(env: Env, applied) -> Env:
    """Re-apply already evaluated (target, value) pairs."""
    for target, value in applied:
        env = env.bind(target, value)
    return env


def render_value(value: Value) -> str:
    if isinstance(value, Bool):
        return "true" if value.value else "false"
    if isinstance(value, Int):
        return str(value.value)
    if isinstance(value, Str):
        return quote(value.value)
    return value.symbol


def quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def value_sort_key(value: Value) -> tuple:
    order = {Bool: 0, Int: 1, Str: 2, Unknown: 3}[type(value)]
    payload = value.symbol if isinstance(value, Unknown) else value.value
    return (order, payload)
