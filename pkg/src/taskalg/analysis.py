"""Trace-set comparison between two models."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from taskalg.semantics import Assume, EnumConfig, TraceSet, canonical, enumerate_traces
from taskalg.terms import ResolvedModel

SAMPLE_SIZE = 10


class Relation(enum.Enum):
    EQUAL = "Equal"
    LEFT_SUBSET = "LeftSubset"
    RIGHT_SUBSET = "RightSubset"
    INCOMPARABLE = "Incomparable"

    def flipped(self) -> "Relation":
        if self is Relation.LEFT_SUBSET:
            return Relation.RIGHT_SUBSET
        if self is Relation.RIGHT_SUBSET:
            return Relation.LEFT_SUBSET
        return self


@dataclass(frozen=True)
class ComparisonReport:
    relation: Relation
    left_only: tuple = ()
    right_only: tuple = ()
    flags_differ: bool = False


def strip_assumes(ts: TraceSet) -> TraceSet:
    traces = [
        replace(t, events=tuple(e for e in t.events if not isinstance(e, Assume)))
        for t in ts.traces
    ]
    return canonical(
        traces, loop_bound_hit=ts.loop_bound_hit, caps_hit=ts.caps_hit, diagnostics=ts.diagnostics
    )


def compare_sets(left: TraceSet, right: TraceSet, ignore_assumes: bool = False) -> ComparisonReport:
    if ignore_assumes:
        left, right = strip_assumes(left), strip_assumes(right)
    lkeys, rkeys = left.keys(), right.keys()
    left_only = tuple(t for t in left.traces if t.key not in rkeys)
    right_only = tuple(t for t in right.traces if t.key not in lkeys)
    flags_differ = (left.loop_bound_hit, left.caps_hit) != (right.loop_bound_hit, right.caps_hit)
    if not left_only and not right_only:
        relation = Relation.INCOMPARABLE if flags_differ else Relation.EQUAL
    elif not left_only:
        relation = Relation.LEFT_SUBSET
    elif not right_only:
        relation = Relation.RIGHT_SUBSET
    else:
        relation = Relation.INCOMPARABLE
    return ComparisonReport(
        relation, left_only[:SAMPLE_SIZE], right_only[:SAMPLE_SIZE], flags_differ
    )


def compare(
    model_a: ResolvedModel,
    model_b: ResolvedModel,
    config: Optional[EnumConfig] = None,
    ignore_assumes: bool = False,
) -> ComparisonReport:
    """Compare the trace sets of two models enumerated under the same config.

    Equality is on event sequences and statuses. :class:`TraceExplosion` from
    either side propagates.
    """
    config = config or EnumConfig()
    return compare_sets(
        enumerate_traces(model_a, config), enumerate_traces(model_b, config), ignore_assumes
    )
