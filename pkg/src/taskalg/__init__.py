"""Task algebra for Task Flow models: parser, trace semantics, LTL/CTL checks."""

from taskalg.analysis import ComparisonReport, Relation, compare
from taskalg.modelcheck import (
    PrefixTree,
    Verdict,
    build_prefix_tree,
    check,
    check_ctl,
    check_ltl,
    parse_query,
)
from taskalg.parser import ParseError, parse_activity, parse_expr, parse_model, pretty_print
from taskalg.semantics import (
    EnumConfig,
    Status,
    Trace,
    TraceExplosion,
    TraceSet,
    encapsulate,
    enumerate_traces,
    interleavings,
)
from taskalg.state import Env, Tri, apply_assignments, eval_expr, eval_guard
from taskalg.terms import Model, ResolvedModel, free_task_names, resolve

__all__ = [
    "ComparisonReport",
    "EnumConfig",
    "Env",
    "Model",
    "ParseError",
    "PrefixTree",
    "Relation",
    "ResolvedModel",
    "Status",
    "Trace",
    "TraceExplosion",
    "TraceSet",
    "Tri",
    "Verdict",
    "apply_assignments",
    "build_prefix_tree",
    "check",
    "check_ctl",
    "check_ltl",
    "compare",
    "encapsulate",
    "enumerate_traces",
    "eval_expr",
    "eval_guard",
    "free_task_names",
    "interleavings",
    "parse_activity",
    "parse_expr",
    "parse_model",
    "parse_query",
    "pretty_print",
    "resolve",
]
