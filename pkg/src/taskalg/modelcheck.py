"""LTL and CTL checking over enumerated trace sets.

LTL formulas are read over each finite trace and must hold on all of them.
A trace has one position per event plus a final terminal position that
carries the status. CTL formulas are read over the prefix tree of the trace
set, using the same positions: every tree node below the root is the position
of its incoming event, and every node where a trace ends has an extra terminal
position. A formula holds at the root when it holds at the first position of
the tree's paths, existential operators picking some path and universal ones
requiring all.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from taskalg.parser import ParseError, format_expr, parse_expr
from taskalg.semantics import Assume, Event, Status, TaskEvt, Trace, TraceSet
from taskalg.state import Bool, Env, SortError, Unknown, check_expr, eval_expr, replay
from taskalg.terms import Expr, Not as NotExpr, Var


# -- formulas -----------------------------------------------------------------


@dataclass(frozen=True)
class TaskP:
    name: str


@dataclass(frozen=True)
class SucceededP:
    pass


@dataclass(frozen=True)
class FailedP:
    pass


@dataclass(frozen=True)
class AssumedP:
    variable: str
    polarity: bool = True


@dataclass(frozen=True)
class StateP:
    expr: Expr


@dataclass(frozen=True)
class Const:
    value: bool


AtomicProp = Union[TaskP, SucceededP, FailedP, AssumedP, StateP, Const]


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    operand: "Formula"


@dataclass(frozen=True)
class Finally:
    operand: "Formula"


@dataclass(frozen=True)
class Globally:
    operand: "Formula"


@dataclass(frozen=True)
class Until:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class EX:
    operand: "Formula"


@dataclass(frozen=True)
class AX:
    operand: "Formula"


@dataclass(frozen=True)
class EF:
    operand: "Formula"


@dataclass(frozen=True)
class AF:
    operand: "Formula"


@dataclass(frozen=True)
class EG:
    operand: "Formula"


@dataclass(frozen=True)
class AG:
    operand: "Formula"


@dataclass(frozen=True)
class EU:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class AU:
    lhs: "Formula"
    rhs: "Formula"


LtlFormula = Union[AtomicProp, Not, And, Or, Implies, Next, Finally, Globally, Until]
CtlFormula = Union[AtomicProp, Not, And, Or, Implies, EX, AX, EF, AF, EG, AG, EU, AU]
Formula = Union[LtlFormula, CtlFormula]

_ATOMS = (TaskP, SucceededP, FailedP, AssumedP, StateP, Const)
_EXISTENTIAL = (EX, EF, EG, EU)
_UNIVERSAL = (AX, AF, AG, AU)


@dataclass(frozen=True)
class Query:
    logic: str  # "LTL" or "CTL"
    formula: Formula
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class Verdict:
    holds: bool
    evidence: Optional[Trace] = None
    assumption_dependent: bool = False


class QuerySyntaxError(Exception):
    def __init__(self, message: str, position: int):
        super().__init__(f"column {position + 1}: {message}")
        self.position = position


# -- query parsing ------------------------------------------------------------

_QTOKEN = re.compile(r"\s*(->|[()\[\]!&|]|[A-Za-z_][A-Za-z0-9_]*)")
_LTL_OPS = {"X": Next, "F": Finally, "G": Globally}
_CTL_OPS = {"EX": EX, "AX": AX, "EF": EF, "AF": AF, "EG": EG, "AG": AG}


class _QueryParser:
    def __init__(self, text: str, offset: int, logic: str):
        self.text = text
        self.pos = offset
        self.logic = logic
        self.tok: Optional[str] = None
        self.tok_pos = offset
        self.advance()

    def advance(self) -> None:
        m = _QTOKEN.match(self.text, self.pos)
        rest = self.text[self.pos:]
        if m is None:
            if rest.strip():
                stripped = len(rest) - len(rest.lstrip())
                raise QuerySyntaxError(f"unexpected {rest.strip()[0]!r}", self.pos + stripped)
            self.tok, self.tok_pos = None, len(self.text)
            return
        self.tok = m.group(1)
        self.tok_pos = m.start(1)
        self.pos = m.end()

    def fail(self, message: str):
        found = "end of query" if self.tok is None else repr(self.tok)
        raise QuerySyntaxError(f"{message}, found {found}", self.tok_pos)

    def expect(self, tok: str) -> None:
        if self.tok != tok:
            self.fail(f"expected {tok!r}")
        self.advance()

    def parse(self) -> Formula:
        formula = self.implies()
        if self.tok == "U":
            self.fail("infix U is only allowed in LTL; use E[f U g] or A[f U g]")
        if self.tok is not None:
            self.fail("unexpected trailing input")
        return formula

    def implies(self) -> Formula:
        left = self.disj()
        if self.tok == "->":
            self.advance()
            return Implies(left, self.implies())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.tok == "|":
            self.advance()
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.until()
        while self.tok == "&":
            self.advance()
            left = And(left, self.until())
        return left

    def until(self) -> Formula:
        left = self.unary()
        if self.tok == "U" and self.logic == "LTL":
            self.advance()
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        tok = self.tok
        if tok == "!":
            self.advance()
            return Not(self.unary())
        if tok in _LTL_OPS:
            if self.logic != "LTL":
                self.fail(f"LTL operator {tok} in a CTL query")
            self.advance()
            return _LTL_OPS[tok](self.unary())
        if tok in _CTL_OPS:
            if self.logic != "CTL":
                self.fail(f"path quantifier {tok} in an LTL query")
            self.advance()
            return _CTL_OPS[tok](self.unary())
        if tok in ("E", "A"):
            if self.logic != "CTL":
                self.fail(f"path quantifier {tok} in an LTL query")
            self.advance()
            self.expect("[")
            lhs = self.implies()
            self.expect("U")
            rhs = self.implies()
            self.expect("]")
            return EU(lhs, rhs) if tok == "E" else AU(lhs, rhs)
        if tok == "(":
            self.advance()
            inner = self.implies()
            self.expect(")")
            return inner
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tok
        if tok == "true":
            self.advance()
            return Const(True)
        if tok == "false":
            self.advance()
            return Const(False)
        if tok == "succeeded":
            self.advance()
            return SucceededP()
        if tok == "failed":
            self.advance()
            return FailedP()
        if tok == "task":
            self.advance()
            self.expect("(")
            name = self.name()
            self.expect(")")
            return TaskP(name)
        if tok == "assumed":
            self.advance()
            self.expect("(")
            polarity = True
            if self.tok == "!":
                polarity = False
                self.advance()
            name = self.name()
            self.expect(")")
            return AssumedP(name, polarity)
        if tok == "state":
            return self.state_atom()
        self.fail("expected a formula")

    def name(self) -> str:
        if self.tok is None or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", self.tok):
            self.fail("expected an identifier")
        name = self.tok
        self.advance()
        return name

    def state_atom(self) -> Formula:
        start = self.pos
        m = re.compile(r"\s*\(").match(self.text, start)
        if m is None:
            self.advance()
            self.fail("expected '('")
        close = _matching_paren(self.text, m.end() - 1)
        if close is None:
            raise QuerySyntaxError("unbalanced parentheses in state(...)", m.end() - 1)
        body = self.text[m.end():close]
        try:
            expr = parse_expr(body)
            sort = check_expr(expr)
        except ParseError as exc:
            raise QuerySyntaxError(f"in state(...): {exc.diagnostic.message}", m.end()) from exc
        except SortError as exc:
            raise QuerySyntaxError(f"in state(...): {exc}", m.end()) from exc
        if sort not in ("bool", "any"):
            raise QuerySyntaxError("state(...) needs a boolean expression", m.end())
        self.pos = close + 1
        self.advance()
        return StateP(expr)


def _matching_paren(text: str, open_at: int) -> Optional[int]:
    depth = 0
    i = open_at
    in_string = False
    while i < len(text):
        c = text[i]
        if in_string:
            if c == "\\":
                i += 1
            elif c == '"':
                in_string = False
        elif c == '"':
            in_string = True
        elif c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return None


def parse_query(text: str) -> Query:
    m = re.match(r"\s*(LTL|CTL)\s*:", text)
    if m is None:
        raise QuerySyntaxError("query must start with 'LTL:' or 'CTL:'", 0)
    logic = m.group(1)
    formula = _QueryParser(text, m.end(), logic).parse()
    return Query(logic, formula, text.strip())


def format_formula(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, TaskP):
        return f"task({f.name})"
    if isinstance(f, SucceededP):
        return "succeeded"
    if isinstance(f, FailedP):
        return "failed"
    if isinstance(f, AssumedP):
        return f"assumed({'' if f.polarity else '!'}{f.variable})"
    if isinstance(f, StateP):
        return f"state({format_expr(f.expr)})"
    if isinstance(f, Not):
        return f"!({format_formula(f.operand)})"
    for cls, op in ((And, "&"), (Or, "|"), (Implies, "->")):
        if isinstance(f, cls):
            return f"({format_formula(f.left)} {op} {format_formula(f.right)})"
    if isinstance(f, Until):
        return f"({format_formula(f.lhs)} U {format_formula(f.rhs)})"
    for cls, op in ((Next, "X"), (Finally, "F"), (Globally, "G"), *((c, n) for n, c in _CTL_OPS.items())):
        if isinstance(f, cls):
            return f"{op}({format_formula(f.operand)})"
    if isinstance(f, (EU, AU)):
        q = "E" if isinstance(f, EU) else "A"
        return f"{q}[{format_formula(f.lhs)} U {format_formula(f.rhs)}]"
    raise TypeError(f"not a formula: {f!r}")


# -- atomic propositions -------------------------------------------------------


def _normalize_assume(event: Assume) -> tuple[Expr, bool]:
    expr, polarity = event.guard, event.polarity
    while isinstance(expr, NotExpr):
        expr, polarity = expr.operand, not polarity
    return expr, polarity


class _Context:
    """Tracks whether any evaluation depended on undetermined state."""

    def __init__(self):
        self.unknown_state = False

    def atom(self, ap, event: Optional[Event], status: Optional[Status], env: Env) -> bool:
        if isinstance(ap, Const):
            return ap.value
        if isinstance(ap, TaskP):
            return isinstance(event, TaskEvt) and event.name == ap.name
        if isinstance(ap, SucceededP):
            return status is Status.SUCCEEDED
        if isinstance(ap, FailedP):
            return status is Status.FAILED
        if isinstance(ap, AssumedP):
            if not isinstance(event, Assume):
                return False
            expr, polarity = _normalize_assume(event)
            return expr == Var(ap.variable) and polarity == ap.polarity
        if isinstance(ap, StateP):
            value = eval_expr(env, ap.expr)
            if isinstance(value, Unknown):
                self.unknown_state = True
                return False
            if not isinstance(value, Bool):
                raise SortError("state(...) did not evaluate to a boolean")
            return value.value
        raise TypeError(f"not an atomic proposition: {ap!r}")


def _has_assume(trace: Trace) -> bool:
    return any(isinstance(e, Assume) for e in trace.events)


# -- LTL --------------------------------------------------------------------------


def _positions(trace: Trace) -> list[tuple[Optional[Event], Optional[Status], Env]]:
    env = Env()
    out = []
    for event in trace.events:
        if isinstance(event, TaskEvt):
            env = replay(env, event.applied)
        out.append((event, None, env))
    out.append((None, trace.status, env))
    return out


def _ltl_table(f: Formula, positions, ctx: _Context) -> list[bool]:
    """Truth value of ``f`` at every position of one trace."""
    n = len(positions)
    if isinstance(f, _ATOMS):
        return [ctx.atom(f, e, s, env) for e, s, env in positions]
    if isinstance(f, Not):
        return [not v for v in _ltl_table(f.operand, positions, ctx)]
    if isinstance(f, (And, Or, Implies)):
        a = _ltl_table(f.left, positions, ctx)
        b = _ltl_table(f.right, positions, ctx)
        if isinstance(f, And):
            return [x and y for x, y in zip(a, b)]
        if isinstance(f, Or):
            return [x or y for x, y in zip(a, b)]
        return [(not x) or y for x, y in zip(a, b)]
    if isinstance(f, Next):
        a = _ltl_table(f.operand, positions, ctx)
        return a[1:] + [False]
    if isinstance(f, (Finally, Globally)):
        a = _ltl_table(f.operand, positions, ctx)
        out = [False] * n
        acc = isinstance(f, Globally)
        for i in range(n - 1, -1, -1):
            acc = (acc and a[i]) if isinstance(f, Globally) else (acc or a[i])
            out[i] = acc
        return out
    if isinstance(f, Until):
        a = _ltl_table(f.lhs, positions, ctx)
        b = _ltl_table(f.rhs, positions, ctx)
        out = [False] * n
        acc = False
        for i in range(n - 1, -1, -1):
            acc = b[i] or (a[i] and acc)
            out[i] = acc
        return out
    raise ValueError(f"{type(f).__name__} is not an LTL operator")


def trace_satisfies(trace: Trace, f: LtlFormula) -> bool:
    return _ltl_table(f, _positions(trace), _Context())[0]


def check_ltl(ts: TraceSet, f: LtlFormula) -> Verdict:
    """``f`` must hold at position 0 of every trace; the first violating trace
    in canonical order is returned as the counterexample."""
    ctx = _Context()
    counterexample = None
    for trace in ts.traces:
        if not _ltl_table(f, _positions(trace), ctx)[0]:
            counterexample = trace
            break
    dependent = ctx.unknown_state or any(_has_assume(t) for t in ts.traces)
    return Verdict(counterexample is None, counterexample, dependent)


# -- prefix tree ----------------------------------------------------------------


@dataclass
class TreeNode:
    """One prefix of the trace set.

    ``ends`` maps each status with which a trace finishes exactly here to that
    trace. A node can end traces and still have children (``a`` and ``a ; b``
    are both runs of ``a ; (eps + b)``), and ``sigma + phi`` ends two traces
    with different statuses at the root.
    """

    event: Optional[Event]
    env: Env
    children: dict = field(default_factory=dict)
    ends: dict = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def status(self) -> Optional[Status]:
        """The terminal status when exactly one trace ends here."""
        if len(self.ends) == 1:
            return next(iter(self.ends))
        return None


@dataclass
class PrefixTree:
    root: TreeNode
    traces: TraceSet

    def nodes(self) -> list[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(reversed(list(node.children.values())))
        return out

    def flatten(self) -> list[Trace]:
        return [trace for node in self.nodes() for trace in node.ends.values()]


def build_prefix_tree(ts: TraceSet) -> PrefixTree:
    root = TreeNode(None, Env())
    for trace in ts.traces:
        node, env = root, Env()
        for event in trace.events:
            if isinstance(event, TaskEvt):
                env = replay(env, event.applied)
            child = node.children.get(event)
            if child is None:
                child = node.children[event] = TreeNode(event, env)
            node = child
        node.ends[trace.status] = trace
    return PrefixTree(root, ts)


# -- CTL --------------------------------------------------------------------------


class _Kripke:
    """Positions of the prefix tree as a successor graph.

    States are numbered so that every successor has a larger index.
    """

    def __init__(self, tree: PrefixTree):
        self.label: list[tuple[Optional[Event], Optional[Status], Env]] = []
        self.succ: list[list[int]] = []
        self.trace_at: list[Optional[Trace]] = []
        self.initial = self._expand(tree.root, is_root=True)

    def _new(self, event, status, env, trace=None) -> int:
        self.label.append((event, status, env))
        self.succ.append([])
        self.trace_at.append(trace)
        return len(self.label) - 1

    def _expand(self, root: TreeNode, is_root: bool) -> list[int]:
        initial: list[int] = []
        # (tree node, list to receive its successor ids)
        stack = [(root, initial)]
        while stack:
            node, into = stack.pop()
            for status, trace in node.ends.items():
                into.append(self._new(None, status, node.env, trace))
            for child in node.children.values():
                sid = self._new(child.event, None, child.env)
                into.append(sid)
                stack.append((child, self.succ[sid]))
        return initial

    def __len__(self) -> int:
        return len(self.label)


def _ctl_table(f: Formula, k: _Kripke, ctx: _Context, memo: dict) -> list[bool]:
    if f in memo:
        return memo[f]
    n = len(k)
    if isinstance(f, _ATOMS):
        out = [ctx.atom(f, *k.label[s]) for s in range(n)]
    elif isinstance(f, Not):
        out = [not v for v in _ctl_table(f.operand, k, ctx, memo)]
    elif isinstance(f, (And, Or, Implies)):
        a = _ctl_table(f.left, k, ctx, memo)
        b = _ctl_table(f.right, k, ctx, memo)
        if isinstance(f, And):
            out = [x and y for x, y in zip(a, b)]
        elif isinstance(f, Or):
            out = [x or y for x, y in zip(a, b)]
        else:
            out = [(not x) or y for x, y in zip(a, b)]
    elif isinstance(f, (EX, AX)):
        a = _ctl_table(f.operand, k, ctx, memo)
        quant = any if isinstance(f, EX) else all
        out = [quant(a[t] for t in k.succ[s]) for s in range(n)]
    elif isinstance(f, (EF, AF, EG, AG, EU, AU)):
        if isinstance(f, (EU, AU)):
            a = _ctl_table(f.lhs, k, ctx, memo)
            b = _ctl_table(f.rhs, k, ctx, memo)
        else:
            a = b = _ctl_table(f.operand, k, ctx, memo)
        quant = any if isinstance(f, (EF, EG, EU)) else all
        out = [False] * n
        for s in range(n - 1, -1, -1):
            succ = k.succ[s]
            if isinstance(f, (EF, AF)):
                out[s] = a[s] or (bool(succ) and quant(out[t] for t in succ))
            elif isinstance(f, (EG, AG)):
                out[s] = a[s] and (not succ or quant(out[t] for t in succ))
            else:
                out[s] = b[s] or (a[s] and bool(succ) and quant(out[t] for t in succ))
    else:
        raise ValueError(f"{type(f).__name__} is not a CTL operator")
    memo[f] = out
    return out


def _root_value(f: Formula, k: _Kripke, ctx: _Context, memo: dict) -> bool:
    if isinstance(f, Not):
        return not _root_value(f.operand, k, ctx, memo)
    if isinstance(f, (And, Or, Implies)):
        a = _root_value(f.left, k, ctx, memo)
        b = _root_value(f.right, k, ctx, memo)
        if isinstance(f, And):
            return a and b
        if isinstance(f, Or):
            return a or b
        return (not a) or b
    table = _ctl_table(f, k, ctx, memo)
    quant = any if isinstance(f, _EXISTENTIAL) else all
    return quant(table[s] for s in k.initial)


def _extend(k: _Kripke, path: list[int]) -> list[int]:
    while k.succ[path[-1]]:
        path.append(k.succ[path[-1]][0])
    return path


def _walk(k: _Kripke, start: int, good: list[bool], stop) -> list[int]:
    """Follow states where ``good`` holds until ``stop(state)``."""
    path = [start]
    while not stop(path[-1]):
        path.append(next(t for t in k.succ[path[-1]] if good[t]))
    return path


def _witness(f: Formula, k: _Kripke, ctx: _Context, memo: dict) -> Optional[list[int]]:
    """A path from an initial state evidencing existential ``f``."""
    table = _ctl_table(f, k, ctx, memo)
    start = next((s for s in k.initial if table[s]), None)
    if start is None:
        return None
    if isinstance(f, EX):
        inner = _ctl_table(f.operand, k, ctx, memo)
        nxt = next(t for t in k.succ[start] if inner[t])
        return _extend(k, [start, nxt])
    if isinstance(f, EF):
        inner = _ctl_table(f.operand, k, ctx, memo)
        return _extend(k, _walk(k, start, table, lambda s: inner[s]))
    if isinstance(f, EG):
        return _walk(k, start, table, lambda s: not k.succ[s])
    if isinstance(f, EU):
        rhs = _ctl_table(f.rhs, k, ctx, memo)
        return _extend(k, _walk(k, start, table, lambda s: rhs[s]))
    return None


def _dual(f: Formula) -> Formula:
    """Existential formula whose witnesses are counterexamples of universal ``f``."""
    if isinstance(f, AX):
        return EX(Not(f.operand))
    if isinstance(f, AF):
        return EG(Not(f.operand))
    if isinstance(f, AG):
        return EF(Not(f.operand))
    if isinstance(f, AU):
        return _NotAU(f.lhs, f.rhs)
    raise TypeError(f)


@dataclass(frozen=True)
class _NotAU:
    lhs: Formula
    rhs: Formula


def _evidence(f: Formula, holds: bool, k: _Kripke, ctx: _Context, memo: dict) -> Optional[list[int]]:
    if isinstance(f, Not):
        return _evidence(f.operand, not holds, k, ctx, memo)
    if holds and isinstance(f, _EXISTENTIAL):
        return _witness(f, k, ctx, memo)
    if not holds and isinstance(f, _UNIVERSAL):
        if isinstance(f, AU):
            return _not_au_path(f, k, ctx, memo)
        return _witness(_dual(f), k, ctx, memo)
    return None


def _not_au_path(f: AU, k: _Kripke, ctx: _Context, memo: dict) -> Optional[list[int]]:
    table = _ctl_table(f, k, ctx, memo)
    lhs = _ctl_table(f.lhs, k, ctx, memo)
    bad = [not v for v in table]
    start = next((s for s in k.initial if bad[s]), None)
    if start is None:
        return None
    return _extend(k, _walk(k, start, bad, lambda s: not lhs[s] or not k.succ[s]))


def check_ctl(tree: PrefixTree, f: CtlFormula) -> Verdict:
    k = _Kripke(tree)
    ctx = _Context()
    memo: dict = {}
    holds = _root_value(f, k, ctx, memo)
    path = _evidence(f, holds, k, ctx, memo)
    evidence = k.trace_at[path[-1]] if path else None
    dependent = ctx.unknown_state or any(_has_assume(t) for t in tree.traces.traces)
    return Verdict(holds, evidence, dependent)


def check(ts: TraceSet, query: Union[Query, str]) -> Verdict:
    if isinstance(query, str):
        query = parse_query(query)
    if query.logic == "LTL":
        return check_ltl(ts, query.formula)
    return check_ctl(build_prefix_tree(ts), query.formula)
