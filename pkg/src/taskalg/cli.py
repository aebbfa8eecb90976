"""``taskalg`` command-line front end.

Exit codes: 0 success / property holds / sets equal, 1 property fails / sets
differ, 2 usage or parse error, 3 enumeration cap hit.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence, TextIO

from taskalg.analysis import Relation, compare_sets
from taskalg.export import (
    dumps,
    traceset_to_json,
    traceset_to_text,
    tree_to_dot,
    verdict_to_json,
)
from taskalg.modelcheck import QuerySyntaxError, check, parse_query
from taskalg.parser import ParseError, parse_model, pretty_print
from taskalg.semantics import EnumConfig, TraceExplosion, enumerate_traces, render_trace
from taskalg.state import SortError
from taskalg.terms import ModelError, ResolvedModel, resolve

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class _Usage(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: error: {message}")


def _style(text: str, code: str) -> str:
    if os.environ.get("TASKALG_COLOR") == "1":
        return f"\033[{code}m{text}\033[0m"
    return text


def _load_model(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror}") from exc
    try:
        model = parse_model(text)
        return model, resolve(model)
    except ParseError as exc:
        raise _Usage(f"{path}:{exc.diagnostic}") from exc
    except (ModelError, SortError) as exc:
        raise _Usage(f"{path}: {exc}") from exc


def _load(path: str) -> ResolvedModel:
    return _load_model(path)[1]


def _config(args) -> EnumConfig:
    try:
        return EnumConfig(
            unroll_bound=args.unroll,
            max_traces=getattr(args, "max_traces", 10000),
            max_events_per_trace=getattr(args, "max_events", 1000),
        )
    except ValueError as exc:
        raise _Usage(str(exc)) from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="taskalg", description="Task algebra trace tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("parse", help="pretty-print a model or dump its AST")
    p.add_argument("file")
    p.add_argument("--ast", action="store_true", help="dump the AST as JSON")

    p = sub.add_parser("traces", help="enumerate the trace set")
    p.add_argument("file")
    p.add_argument("--unroll", type=int, default=3)
    p.add_argument("--max-traces", type=int, default=10000)
    p.add_argument("--max-events", type=int, default=1000)
    p.add_argument("--format", choices=("text", "json", "dot"), default="text")

    p = sub.add_parser("check", help="check an LTL or CTL query")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--query")
    group.add_argument("--query-file")
    p.add_argument("--unroll", type=int, default=3)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("eq", help="compare the trace sets of two models")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--unroll", type=int, default=3)
    p.add_argument("--ignore-assumes", action="store_true")
    return parser


def _ast_json(node):
    if isinstance(node, tuple):
        return [_ast_json(x) for x in node]
    if hasattr(node, "__dataclass_fields__"):
        out = {"node": type(node).__name__}
        for name in node.__dataclass_fields__:
            out[name] = _ast_json(getattr(node, name))
        return out
    return node


def _cmd_parse(args, out: TextIO) -> int:
    model, _ = _load_model(args.file)
    if args.ast:
        out.write(dumps(_ast_json(model)) + "\n")
    else:
        out.write(pretty_print(model))
    return EXIT_OK


def _cmd_traces(args, out: TextIO, err: TextIO) -> int:
    model = _load(args.file)
    code = EXIT_OK
    try:
        ts = enumerate_traces(model, _config(args))
    except TraceExplosion as exc:
        ts = exc.partial
        err.write(f"taskalg: trace explosion: {exc}; output is partial\n")
        code = EXIT_CAP
    if args.format == "json":
        out.write(dumps(traceset_to_json(ts)) + "\n")
    elif args.format == "dot":
        from taskalg.modelcheck import build_prefix_tree

        out.write(tree_to_dot(build_prefix_tree(ts)))
    else:
        out.write(traceset_to_text(ts))
    for note in ts.diagnostics:
        err.write(f"note: {note}\n")
    if ts.loop_bound_hit:
        err.write(f"note: loop unroll bound {args.unroll} reached; trace set is truncated\n")
    return code


def _read_queries(args) -> list[str]:
    if args.query is not None:
        return [args.query]
    try:
        with open(args.query_file, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise _Usage(f"cannot read {args.query_file}: {exc.strerror}") from exc
    queries = [ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("--")]
    if not queries:
        raise _Usage(f"{args.query_file}: no queries")
    return queries


def _cmd_check(args, out: TextIO, err: TextIO) -> int:
    model = _load(args.file)
    queries = []
    for text in _read_queries(args):
        try:
            queries.append(parse_query(text))
        except QuerySyntaxError as exc:
            raise _Usage(f"bad query {text!r}: {exc}") from exc
    try:
        ts = enumerate_traces(model, _config(args))
    except TraceExplosion as exc:
        err.write(f"taskalg: trace explosion: {exc}\n")
        return EXIT_CAP

    results = []
    for query in queries:
        try:
            results.append((query, check(ts, query)))
        except SortError as exc:
            raise _Usage(f"query {query.text!r}: {exc}") from exc

    if args.format == "json":
        payload = [verdict_to_json(q.text, v) for q, v in results]
        out.write(dumps(payload[0] if len(payload) == 1 else payload) + "\n")
    else:
        for query, verdict in results:
            word = _style("holds", "32") if verdict.holds else _style("fails", "31")
            out.write(f"{query.text}: {word}\n")
            if verdict.evidence is not None:
                kind = "witness" if verdict.holds else "counterexample"
                out.write(f"  {kind}: {render_trace(verdict.evidence)}\n")
            if verdict.assumption_dependent:
                out.write("  assumption-dependent: yes\n")
    if ts.loop_bound_hit:
        err.write(f"note: loop unroll bound {args.unroll} reached; verdicts cover the truncated set\n")
    return EXIT_OK if all(v.holds for _, v in results) else EXIT_FALSE


def _cmd_eq(args, out: TextIO, err: TextIO) -> int:
    left, right = _load(args.file1), _load(args.file2)
    config = _config(args)
    try:
        report = compare_sets(
            enumerate_traces(left, config), enumerate_traces(right, config), args.ignore_assumes
        )
    except TraceExplosion as exc:
        err.write(f"taskalg: trace explosion: {exc}\n")
        return EXIT_CAP
    out.write(report.relation.value + "\n")
    for label, traces in (("only in " + args.file1, report.left_only), ("only in " + args.file2, report.right_only)):
        for trace in traces:
            out.write(f"  {label}: {render_trace(trace)}\n")
    if report.flags_differ:
        out.write("  truncation flags differ\n")
    return EXIT_OK if report.relation is Relation.EQUAL else EXIT_FALSE


def run(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "parse":
            return _cmd_parse(args, out)
        if args.command == "traces":
            return _cmd_traces(args, out, err)
        if args.command == "check":
            return _cmd_check(args, out, err)
        return _cmd_eq(args, out, err)
    except _Usage as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
