"""Trace-set enumeration.

Each activity denotes the set of its complete execution paths. A path is an
event list plus a terminal status; the environment is threaded along the path
so guards can be decided against earlier task postconditions. Loops are
unrolled up to a bound, which makes the set finite.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence, Union

from taskalg.state import (
    Env,
    Tri,
    Value,
    apply_assignments,
    evaluate,
    render_value,
    replay,
    to_tri,
    value_sort_key,
)
from taskalg.terms import (
    Activity,
    Compound,
    DeclaredSimple,
    Empty,
    Encapsulated,
    Expr,
    Fail,
    Guard,
    Not,
    Par,
    ResolvedModel,
    Seq,
    Sel,
    Succeed,
    TaskRef,
    Until,
    While,
)


class Status(enum.Enum):
    COMPLETED = "completed"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


_STATUS_RANK = {Status.COMPLETED: 0, Status.SUCCEEDED: 1, Status.FAILED: 2}


@dataclass(frozen=True)
class TaskEvt:
    name: str
    applied: tuple[tuple[str, Value], ...] = ()


@dataclass(frozen=True)
class Assume:
    guard: Expr
    polarity: bool = True


Event = Union[TaskEvt, Assume]


@dataclass(frozen=True)
class Trace:
    events: tuple[Event, ...]
    status: Status
    final_env: Env = field(default_factory=Env, compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return (self.events, self.status)


@dataclass(frozen=True)
class TraceSet:
    traces: tuple[Trace, ...]
    loop_bound_hit: bool = False
    caps_hit: bool = False
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces)

    def keys(self) -> set[tuple]:
        return {t.key for t in self.traces}


@dataclass(frozen=True)
class EnumConfig:
    unroll_bound: int = 3
    max_traces: int = 10000
    max_events_per_trace: int = 1000

    def __post_init__(self):
        if self.unroll_bound < 0:
            raise ValueError("unroll_bound must be >= 0")
        if self.max_traces < 1 or self.max_events_per_trace < 1:
            raise ValueError("trace caps must be positive")


class TraceExplosion(Exception):
    """Raised when an enumeration cap was hit; ``partial`` holds what was kept."""

    def __init__(self, partial: TraceSet, reason: str):
        super().__init__(reason)
        self.partial = partial


def event_sort_key(event: Event) -> tuple:
    from taskalg.parser import format_expr

    if isinstance(event, TaskEvt):
        return (0, event.name, tuple((k, value_sort_key(v)) for k, v in event.applied))
    return (1, format_expr(event.guard), not event.polarity)


def trace_sort_key(trace: Trace) -> tuple:
    return (tuple(event_sort_key(e) for e in trace.events), _STATUS_RANK[trace.status])


def canonical(traces: Sequence[Trace], **flags) -> TraceSet:
    """Deduplicate on (events, status) keeping the first occurrence, then sort."""
    seen = {}
    for trace in traces:
        seen.setdefault(trace.key, trace)
    ordered = sorted(seen.values(), key=trace_sort_key)
    return TraceSet(tuple(ordered), **flags)


def iter_interleavings(xs: Sequence[Event], ys: Sequence[Event]) -> Iterator[tuple[Event, ...]]:
    """Yield every order-preserving merge of ``xs`` and ``ys``."""
    n, total = len(xs), len(xs) + len(ys)
    for slots in itertools.combinations(range(total), n):
        chosen = set(slots)
        it_x, it_y = iter(xs), iter(ys)
        yield tuple(next(it_x) if i in chosen else next(it_y) for i in range(total))


def interleavings(xs: Sequence[Event], ys: Sequence[Event]) -> set[tuple[Event, ...]]:
    return set(iter_interleavings(xs, ys))


def encapsulate(ts: TraceSet) -> TraceSet:
    """Absorb local success: Succeeded becomes Completed, failure propagates."""
    traces = tuple(_absorb(t) for t in ts.traces)
    return replace(ts, traces=traces)


def _absorb(trace: Trace) -> Trace:
    if trace.status is Status.SUCCEEDED:
        return replace(trace, status=Status.COMPLETED)
    return trace


def _join(a: Status, b: Status) -> Status:
    return a if _STATUS_RANK[a] >= _STATUS_RANK[b] else b


class _Enumerator:
    def __init__(self, model: ResolvedModel, config: EnumConfig):
        self.resolved = model.table()
        self.config = config
        self.loop_bound_hit = False
        self.caps_hit = False
        self.cap_reasons: list[str] = []
        self.sel_seen: dict[int, Sel] = {}
        self.sel_live: set[int] = set()

    def cap(self, traces: list[Trace]) -> list[Trace]:
        kept = []
        limit = self.config.max_events_per_trace
        for trace in traces:
            if len(trace.events) > limit:
                self._hit(f"a trace exceeded {limit} events")
                continue
            kept.append(trace)
        if len(kept) > self.config.max_traces:
            self._hit(f"more than {self.config.max_traces} traces")
            kept = kept[: self.config.max_traces]
        return kept

    def _hit(self, reason: str) -> None:
        self.caps_hit = True
        if reason not in self.cap_reasons:
            self.cap_reasons.append(reason)

    def guard(self, guard: Optional[Guard], env: Env) -> tuple[Tri, Env]:
        if guard is None:
            return Tri.TRUE, env
        value, env = evaluate(env, guard.expr)
        return to_tri(value), env

    def prefix(self, events: tuple[Event, ...], traces: list[Trace]) -> list[Trace]:
        if not events:
            return traces
        return self.cap([replace(t, events=events + t.events) for t in traces])

    def then(self, traces: list[Trace], activity: Activity) -> list[Trace]:
        """Sequential composition: run ``activity`` after every Completed trace."""
        out = []
        for trace in traces:
            if trace.status is not Status.COMPLETED:
                out.append(trace)
                continue
            out.extend(self.prefix(trace.events, self.run(activity, trace.final_env)))
            if len(out) > self.config.max_traces:
                out = self.cap(out)
        return self.cap(out)

    def run(self, activity: Activity, env: Env) -> list[Trace]:
        if isinstance(activity, Empty):
            return [Trace((), Status.COMPLETED, env)]
        if isinstance(activity, Succeed):
            return [Trace((), Status.SUCCEEDED, env)]
        if isinstance(activity, Fail):
            return [Trace((), Status.FAILED, env)]
        if isinstance(activity, TaskRef):
            return self.task(activity, env)
        if isinstance(activity, Encapsulated):
            return [_absorb(t) for t in self.run(activity.inner, env)]
        if isinstance(activity, Seq):
            return self.then(self.run(activity.first, env), activity.rest)
        if isinstance(activity, Sel):
            return self.select(activity, env)
        if isinstance(activity, Par):
            return self.parallel(activity, env)
        if isinstance(activity, While):
            return self.while_loop(activity, env, self.config.unroll_bound)
        if isinstance(activity, Until):
            return self.until_loop(activity, env, self.config.unroll_bound)
        raise TypeError(f"not an activity: {activity!r}")

    def task(self, ref: TaskRef, env: Env) -> list[Trace]:
        resolution = self.resolved.get(ref.name)
        if isinstance(resolution, Compound):
            body = resolution.definition.body.activity
            return [_absorb(t) for t in self.run(body, env)]
        if ref.overrides is not None:
            assigns = ref.overrides
        elif isinstance(resolution, DeclaredSimple):
            assigns = resolution.definition.body.assignments
        else:
            assigns = ()
        env, applied = apply_assignments(env, assigns)
        return [Trace((TaskEvt(ref.name, tuple(applied)),), Status.COMPLETED, env)]

    def branch(self, tri: Tri, guard: Optional[Guard], activity: Activity, env: Env):
        if tri is Tri.FALSE:
            return []
        traces = self.run(activity, env)
        if tri is Tri.UNKNOWN:
            traces = self.prefix((Assume(guard.expr, True),), traces)
        return traces

    def select(self, sel: Sel, env: Env) -> list[Trace]:
        self.sel_seen[id(sel)] = sel
        left_tri, env = self.guard(sel.left_guard, env)
        right_tri, env = self.guard(sel.right_guard, env)
        if left_tri is not Tri.FALSE or right_tri is not Tri.FALSE:
            self.sel_live.add(id(sel))
        out = self.branch(left_tri, sel.left_guard, sel.left, env)
        out += self.branch(right_tri, sel.right_guard, sel.right, env)
        return self.cap(out)

    def parallel(self, par: Par, env: Env) -> list[Trace]:
        lefts = self.run(par.left, env)
        rights_by_counter: dict[tuple, list[Trace]] = {}
        out: list[Trace] = []
        for left in lefts:
            # right branch mints after the left one so unknown symbols stay unique on a path
            key = left.final_env.counters
            if key not in rights_by_counter:
                rights_by_counter[key] = self.run(par.right, env.with_counters(left.final_env))
            for right in rights_by_counter[key]:
                status = _join(left.status, right.status)
                for events in iter_interleavings(left.events, right.events):
                    applied = (p for e in events if isinstance(e, TaskEvt) for p in e.applied)
                    final = replay(env, applied).with_counters(right.final_env)
                    out.append(Trace(events, status, final))
                    if len(out) > self.config.max_traces:
                        return self.cap(out)
        return self.cap(out)

    def loop_guard(self, guard: Optional[Guard], env: Env):
        """Return (exit branch, continue branch, env) for a loop decision point.

        A branch is the tuple of Assume events to record, or None when pruned.
        """
        if guard is None:
            return (), (), env
        tri, env = self.guard(guard, env)
        exit_tri = ~tri
        exit_events = (Assume(Not(guard.expr), True),) if exit_tri is Tri.UNKNOWN else ()
        cont_events = (Assume(guard.expr, True),) if tri is Tri.UNKNOWN else ()
        exit_branch = None if exit_tri is Tri.FALSE else exit_events
        cont_branch = None if tri is Tri.FALSE else cont_events
        return exit_branch, cont_branch, env

    def while_loop(self, loop: While, env: Env, remaining: int) -> list[Trace]:
        exit_branch, cont_branch, env = self.loop_guard(loop.guard, env)
        out = []
        if exit_branch is not None:
            out.append(Trace(exit_branch, Status.COMPLETED, env))
        if cont_branch is not None:
            if remaining == 0:
                self.loop_bound_hit = True
            else:
                for trace in self.run(loop.body, env):
                    if trace.status is Status.COMPLETED:
                        rest = self.while_loop(loop, trace.final_env, remaining - 1)
                        out.extend(self.prefix(cont_branch + trace.events, rest))
                    else:
                        out.append(replace(trace, events=cont_branch + trace.events))
        return self.cap(out)

    def until_loop(self, loop: Until, env: Env, remaining: int) -> list[Trace]:
        if remaining == 0:
            self.loop_bound_hit = True
            return []
        out = []
        for trace in self.run(loop.body, env):
            if trace.status is not Status.COMPLETED:
                out.append(trace)
                continue
            exit_branch, cont_branch, after = self.loop_guard(loop.guard, trace.final_env)
            if exit_branch is not None:
                out.append(Trace(trace.events + exit_branch, Status.COMPLETED, after))
            if cont_branch is not None:
                if remaining == 1:
                    self.loop_bound_hit = True
                else:
                    rest = self.until_loop(loop, after, remaining - 1)
                    out.extend(self.prefix(trace.events + cont_branch, rest))
        return self.cap(out)

    def diagnostics(self) -> tuple[str, ...]:
        from taskalg.parser import format_activity

        notes = []
        for key, sel in self.sel_seen.items():
            if key not in self.sel_live:
                notes.append(f"EmptySelection: both branches pruned in {format_activity(sel)}")
        notes.extend(f"TraceExplosion: {reason}" for reason in self.cap_reasons)
        return tuple(notes)


def enumerate_traces(model: ResolvedModel, config: Optional[EnumConfig] = None) -> TraceSet:
    """Return the finalized trace set of ``model.main``.

    Raises :class:`TraceExplosion` (carrying the partial set) when a cap is hit.
    """
    config = config or EnumConfig()
    enum_ = _Enumerator(model, config)
    traces = enum_.run(model.model.main, Env())
    finalized = [
        replace(t, status=Status.SUCCEEDED) if t.status is Status.COMPLETED else t
        for t in traces
    ]
    ts = canonical(
        finalized,
        loop_bound_hit=enum_.loop_bound_hit,
        caps_hit=enum_.caps_hit,
        diagnostics=enum_.diagnostics(),
    )
    if ts.caps_hit:
        raise TraceExplosion(ts, "; ".join(enum_.cap_reasons))
    return ts


def render_event(event: Event) -> str:
    from taskalg.parser import format_expr

    if isinstance(event, TaskEvt):
        if not event.applied:
            return event.name
        inner = ", ".join(f"{k}={render_value(v)}" for k, v in event.applied)
        return f"{event.name}({inner})"
    text = format_expr(event.guard)
    return f"[{text}]" if event.polarity else f"[!({text})]"


def render_trace(trace: Trace) -> str:
    parts = [render_event(e) for e in trace.events]
    parts.append(trace.status.value)
    return " ; ".join(parts)
