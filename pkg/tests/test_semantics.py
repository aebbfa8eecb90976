import json
import random
from math import comb

import pytest
from hypothesis import given, strategies as st

from taskalg.export import traceset_from_json
from taskalg.parser import parse_activity, parse_model
from taskalg.semantics import (
    Assume,
    EnumConfig,
    Status,
    TaskEvt,
    Trace,
    TraceExplosion,
    TraceSet,
    encapsulate,
    enumerate_traces,
    interleavings,
)
from taskalg.state import Int, Unknown
from taskalg.terms import Model, Not, Par, Sel, Seq, Var, resolve, Empty, Fail

from conftest import GOLDEN
from oracle import (
    as_oracle_form,
    bounded,
    oracle_traces,
    random_activity,
    random_guard_free_model,
    random_state_free_activity,
)

S, F, C = Status.SUCCEEDED, Status.FAILED, Status.COMPLETED


def traces_of(text, **config):
    return enumerate_traces(resolve(parse_model(text)), EnumConfig(**config))


def shape(ts):
    """Traces as (task names / assume texts, status) pairs for compact asserts."""
    from taskalg.semantics import render_event

    return [(tuple(render_event(e) for e in t.events), t.status) for t in ts.traces]


def tr(*names, status=S):
    return (tuple(names), status)


def test_empty_finalizes_to_success():
    assert shape(traces_of("main = eps")) == [tr()]


def test_failure_aborts_sequence():
    assert shape(traces_of("main = phi ; a")) == [tr(status=F)]


def test_sequence_then_choice():
    assert shape(traces_of("main = a ; (b + c)")) == [tr("a", "b"), tr("a", "c")]


def test_false_guard_prunes():
    assert shape(traces_of("main = a[false] + [true] b")) == [tr("b")]


def test_unknown_guard_records_assumption():
    ts = traces_of("main = a[x] + b")
    assert shape(ts) == [tr("b"), tr("[x]", "a")]


def test_guard_sees_earlier_postcondition():
    ts = traces_of("main = t(x = 1) ; (a [x == 1] + [x != 1] b)")
    assert shape(ts) == [tr("t(x=1)", "a")]


def test_login_golden(login_text):
    ts = enumerate_traces(resolve(parse_model(login_text)))
    golden = traceset_from_json(json.loads((GOLDEN / "login_traces.json").read_text()))
    assert ts == golden
    assert len(ts) == 4
    assert as_oracle_form(ts) == oracle_traces(parse_model(login_text), 3)


def test_login_events(login_text):
    ts = enumerate_traces(resolve(parse_model(login_text)))
    remind_ok = ts.traces[3]
    assert remind_ok.events == (
        Assume(Var("remind")),
        TaskEvt("requestPassword", (("pwd", Unknown("intropwd#1")),)),
        Assume(Var("password_entered")),
        TaskEvt("validatePassword", (("pwdchk", Unknown("validatepwd#1")),)),
    )
    assert remind_ok.status is S
    assert ts.traces[2].events[-1] == Assume(Not(Var("password_entered")))
    assert ts.traces[2].status is F


def test_while_unrolls_zero_to_bound():
    ts = traces_of("main = while { a }", unroll_bound=2)
    assert shape(ts) == [tr(), tr("a"), tr("a", "a")]
    assert ts.loop_bound_hit


def test_until_unrolls_one_to_bound():
    ts = traces_of("main = until { a }", unroll_bound=2)
    assert shape(ts) == [tr("a"), tr("a", "a")]
    assert ts.loop_bound_hit


def test_until_with_zero_bound_is_empty():
    ts = traces_of("main = until { a }", unroll_bound=0)
    assert len(ts) == 0 and ts.loop_bound_hit


def test_guarded_while_records_both_decisions():
    ts = traces_of("main = while [more] { a }", unroll_bound=1)
    assert shape(ts) == [tr("[!more]"), tr("[more]", "a", "[!more]")]


def test_guarded_while_stops_when_state_decides():
    ts = traces_of("main = t(go = true) ; while [go] { t(go = false) }", unroll_bound=3)
    assert shape(ts) == [tr("t(go=true)", "t(go=false)")]
    assert not ts.loop_bound_hit


def test_guarded_until_exits_on_false_guard():
    ts = traces_of("main = until [again] { a }", unroll_bound=2)
    assert shape(ts) == [tr("a", "[!again]"), tr("a", "[again]", "a", "[!again]")]


def test_encapsulation_absorbs_success_only():
    assert shape(traces_of("main = { a ; sigma } ; b")) == [tr("a", "b")]
    assert shape(traces_of("main = { a ; phi } ; b")) == [tr("a", status=F)]
    assert shape(traces_of("main = (a ; sigma) ; b")) == [tr("a")]


def test_compound_reference_is_encapsulated():
    assert shape(traces_of("let T = { a ; sigma }\nmain = T ; b")) == [tr("a", "b")]


def test_declared_defaults_and_usage_overrides():
    ts = traces_of("let t = [x = 1, y = 2]\nmain = t ; t(x = 3)")
    assert shape(ts) == [tr("t(x=1, y=2)", "t(x=3)")]
    assert ts.traces[0].final_env.as_dict() == {"x": Int(3), "y": Int(2)}


def test_parallel_interleaves_and_joins_status():
    assert shape(traces_of("main = a || b")) == [tr("a", "b"), tr("b", "a")]
    assert shape(traces_of("main = (a ; phi) || b")) == [tr("a", "b", status=F), tr("b", "a", status=F)]
    assert shape(traces_of("main = { a ; sigma } || b ; c")) == [
        tr("a", "b", "c"), tr("b", "a", "c"), tr("b", "c", "a")]


def test_parallel_final_env_is_last_writer():
    ts = traces_of("main = t(x = 1) || u(x = 2)")
    envs = {tuple(e.name for e in t.events): t.final_env.lookup("x") for t in ts.traces}
    assert envs == {("t", "u"): Int(2), ("u", "t"): Int(1)}


def test_parallel_unknowns_stay_distinct():
    ts = traces_of("main = t(x = f()) || u(y = f())")
    symbols = {v.symbol for t in ts.traces for e in t.events for _, v in e.applied}
    assert symbols == {"f#1", "f#2"}


def test_empty_selection_diagnostic():
    ts = traces_of("main = a ; (b [false] + [false] c) + d")
    assert shape(ts) == [tr("d")]
    assert any(d.startswith("EmptySelection") for d in ts.diagnostics)


def test_trace_cap_raises_with_partial_set():
    with pytest.raises(TraceExplosion) as info:
        traces_of("main = (a + b) ; (a + b) ; (a + b)", max_traces=4)
    assert info.value.partial.caps_hit
    assert 0 < len(info.value.partial) <= 4


def test_event_cap_raises():
    with pytest.raises(TraceExplosion) as info:
        traces_of("main = while { a ; b }", unroll_bound=5, max_events_per_trace=4)
    assert all(len(t.events) <= 4 for t in info.value.partial.traces)


def test_parallel_cap_is_lazy():
    text = "main = a;b;c;d;e;f;g;h;i;j || k;l;m;n;o;p;q;r;s;t"
    with pytest.raises(TraceExplosion):
        traces_of(text, max_traces=100)


def test_interleavings_examples():
    a, b, c, d = (TaskEvt(n) for n in "abcd")
    assert interleavings((), (a,)) == {(a,)}
    assert interleavings((a,), (b,)) == {(a, b), (b, a)}
    assert len(interleavings((a, b), (c, d))) == 6 == comb(4, 2)


@given(st.integers(0, 5), st.integers(0, 5))
def test_interleaving_count_law(n, m):
    xs = tuple(TaskEvt(f"x{i}") for i in range(n))
    ys = tuple(TaskEvt(f"y{i}") for i in range(m))
    merged = interleavings(xs, ys)
    assert len(merged) == comb(n + m, n)
    for seq in merged:
        assert [e for e in seq if e in xs] == list(xs)
        assert [e for e in seq if e in ys] == list(ys)


def test_encapsulate_operation():
    a = TaskEvt("a")
    ts = TraceSet((Trace((a,), S), Trace((), F), Trace((a,), C)))
    out = encapsulate(ts)
    assert [t.status for t in out.traces] == [C, F, C]
    assert [t.events for t in out.traces] == [(a,), (), (a,)]


def _traces(activity, bound=2):
    return enumerate_traces(resolve(Model((), activity)), EnumConfig(unroll_bound=bound))


def test_every_finalized_trace_is_terminal():
    rng = random.Random(21)
    for _ in range(200):
        ts = enumerate_traces(resolve(random_guard_free_model(rng)), EnumConfig(unroll_bound=2))
        assert all(t.status in (S, F) for t in ts.traces)


def test_algebraic_laws():
    rng = random.Random(5)
    for _ in range(100):
        a = bounded(rng, lambda: random_activity(rng, 3))
        b = bounded(rng, lambda: random_activity(rng, 3))
        assert _traces(Sel(None, a, None, b)).keys() == _traces(a).keys() | _traces(b).keys()
        assert _traces(Seq(Empty(), a)).keys() == _traces(a).keys() == _traces(Seq(a, Empty())).keys()
        assert _traces(Seq(Fail(), a)).keys() == _traces(Fail()).keys()
        sa = bounded(rng, lambda: random_state_free_activity(rng, 3), limit=60)
        sb = bounded(rng, lambda: random_state_free_activity(rng, 3), limit=60)
        assert _traces(Par(sa, sb)).keys() == _traces(Par(sb, sa)).keys()


def test_monotone_in_unroll_bound():
    rng = random.Random(9)
    for _ in range(100):
        model = resolve(random_guard_free_model(rng))
        for k in range(3):
            small = enumerate_traces(model, EnumConfig(unroll_bound=k)).keys()
            large = enumerate_traces(model, EnumConfig(unroll_bound=k + 1)).keys()
            assert small <= large


def test_deterministic_output(login_text):
    model = resolve(parse_model(login_text))
    first, second = enumerate_traces(model), enumerate_traces(model)
    assert first.traces == second.traces
    assert [t.events for t in first.traces] == [t.events for t in second.traces]


def test_matches_oracle_on_random_models():
    rng = random.Random(1)
    for _ in range(150):
        model = random_guard_free_model(rng, bound=2)
        bound = rng.randint(0, 2)
        ts = enumerate_traces(resolve(model), EnumConfig(unroll_bound=bound))
        assert as_oracle_form(ts) == oracle_traces(model, bound)


def test_config_validation():
    with pytest.raises(ValueError):
        EnumConfig(unroll_bound=-1)
    with pytest.raises(ValueError):
        EnumConfig(max_traces=0)
