"""Text, JSON and DOT renderings of trace sets and prefix trees."""

from __future__ import annotations

import json
from typing import Any

from taskalg.modelcheck import PrefixTree, Verdict
from taskalg.parser import format_expr, parse_expr
from taskalg.semantics import (
    Assume,
    Status,
    TaskEvt,
    Trace,
    TraceSet,
    canonical,
    render_event,
    render_trace,
)
from taskalg.state import Bool, Env, Int, Str, Unknown, Value, replay

JSON_VERSION = 1


class SchemaError(ValueError):
    pass


def value_to_json(value: Value) -> dict:
    if isinstance(value, Bool):
        return {"type": "bool", "value": value.value}
    if isinstance(value, Int):
        return {"type": "int", "value": value.value}
    if isinstance(value, Str):
        return {"type": "str", "value": value.value}
    return {"type": "unknown", "value": value.symbol}


def value_from_json(data: dict) -> Value:
    kinds = {"bool": Bool, "int": Int, "str": Str, "unknown": Unknown}
    try:
        return kinds[data["type"]](data["value"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad value: {data!r}") from exc


def event_to_json(event) -> dict:
    if isinstance(event, TaskEvt):
        return {"task": event.name, "assigns": {k: value_to_json(v) for k, v in event.applied}}
    return {"assume": format_expr(event.guard), "polarity": event.polarity}


def event_from_json(data: dict):
    if "task" in data:
        assigns = tuple((k, value_from_json(v)) for k, v in data.get("assigns", {}).items())
        return TaskEvt(data["task"], assigns)
    if "assume" in data:
        return Assume(parse_expr(data["assume"]), bool(data.get("polarity", True)))
    raise SchemaError(f"bad event: {data!r}")


def trace_to_json(trace: Trace) -> dict:
    return {
        "events": [event_to_json(e) for e in trace.events],
        "status": trace.status.value,
    }


def trace_from_json(data: dict) -> Trace:
    events = tuple(event_from_json(e) for e in data["events"])
    status = Status(data["status"])
    env = Env()
    for event in events:
        if isinstance(event, TaskEvt):
            env = replay(env, event.applied)
    return Trace(events, status, env)


def traceset_to_json(ts: TraceSet) -> dict[str, Any]:
    return {
        "traces": [trace_to_json(t) for t in ts.traces],
        "flags": {"loop_bound_hit": ts.loop_bound_hit, "caps_hit": ts.caps_hit},
        "version": JSON_VERSION,
    }


def traceset_from_json(data: dict[str, Any]) -> TraceSet:
    if data.get("version") != JSON_VERSION:
        raise SchemaError(f"unsupported version {data.get('version')!r}")
    flags = data.get("flags", {})
    return canonical(
        [trace_from_json(t) for t in data["traces"]],
        loop_bound_hit=bool(flags.get("loop_bound_hit", False)),
        caps_hit=bool(flags.get("caps_hit", False)),
    )


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False)


def traceset_to_text(ts: TraceSet) -> str:
    return "".join(render_trace(t) + "\n" for t in ts.traces)


def verdict_to_json(query_text: str, verdict: Verdict) -> dict[str, Any]:
    return {
        "query": query_text,
        "holds": verdict.holds,
        "evidence": trace_to_json(verdict.evidence) if verdict.evidence else None,
        "assumption_dependent": verdict.assumption_dependent,
    }


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def tree_to_dot(tree: PrefixTree) -> str:
    """One DOT node per prefix-tree node.

    Nodes where traces end are shaped by status: doublecircle for succeeded,
    doubleoctagon for failed, tripleoctagon when both end there.
    """
    lines = ["digraph traces {", "  rankdir=TB;", '  node [shape=circle, label=""];']
    ids: dict[int, str] = {}
    for node in tree.nodes():
        nid = f"n{len(ids)}"
        ids[id(node)] = nid
        ends = set(node.ends)
        if ends == {Status.SUCCEEDED}:
            attrs = 'shape=doublecircle, label="σ"'
        elif ends == {Status.FAILED}:
            attrs = 'shape=doubleoctagon, label="φ"'
        elif ends:
            attrs = 'shape=tripleoctagon, label="σ|φ"'
        else:
            attrs = ""
        lines.append(f"  {nid} [{attrs}];" if attrs else f"  {nid};")
    for node in tree.nodes():
        for child in node.children.values():
            label = _dot_escape(render_event(child.event))
            lines.append(f'  {ids[id(node)]} -> {ids[id(child)]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
