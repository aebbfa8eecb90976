import random

import pytest

from taskalg.modelcheck import (
    AG,
    EF,
    AssumedP,
    Const,
    FailedP,
    Finally,
    Globally,
    Implies,
    Next,
    Not,
    QuerySyntaxError,
    StateP,
    SucceededP,
    TaskP,
    build_prefix_tree,
    check,
    check_ctl,
    check_ltl,
    parse_query,
    trace_satisfies,
)
from taskalg.parser import parse_expr, parse_model
from taskalg.semantics import EnumConfig, Status, TaskEvt, TraceSet, enumerate_traces, render_trace
from taskalg.terms import resolve

from oracle import random_guard_free_model


def traces_of(text, bound=3):
    return enumerate_traces(resolve(parse_model(f"main = {text}")), EnumConfig(unroll_bound=bound))


def test_parse_ltl():
    q = parse_query("LTL: G(task(a) -> X task(b))")
    assert q.logic == "LTL"
    assert q.formula == Globally(Implies(TaskP("a"), Next(TaskP("b"))))


def test_parse_ctl():
    q = parse_query("CTL: AG(EF succeeded)")
    assert q.logic == "CTL" and q.formula == AG(EF(SucceededP()))


def test_parse_atoms():
    q = parse_query('CTL: EF (assumed(!x) & state(pwd == "a(b)") | failed | true)')
    conj = q.formula.operand.left.left
    assert conj.left == AssumedP("x", False)
    assert conj.right == StateP(parse_expr('pwd == "a(b)"'))


def test_precedence_of_query_operators():
    q = parse_query("LTL: !a_ U b_ & c_ | d_ -> e_ -> f_".replace("a_", "task(a)")
                    .replace("b_", "task(b)").replace("c_", "task(c)").replace("d_", "task(d)")
                    .replace("e_", "task(e)").replace("f_", "task(f)"))
    expected = parse_query("LTL: (((!task(a)) U task(b)) & task(c) | task(d)) -> (task(e) -> task(f))")
    assert q.formula == expected.formula


@pytest.mark.parametrize(
    "text",
    [
        "LTL: AG p",
        "LTL: AG task(a)",
        "LTL: E[task(a) U task(b)]",
        "CTL: G task(a)",
        "CTL: task(a) U task(b)",
        "task(a)",
        "LTL: task(a",
        "LTL: state(1)",
        "LTL: state(x ==)",
        "LTL: F $",
    ],
)
def test_query_errors(text):
    with pytest.raises(QuerySyntaxError):
        parse_query(text)


def test_ltl_examples():
    assert check(traces_of("a ; b"), "LTL: G(task(a) -> X task(b))").holds
    verdict = check(traces_of("a + b"), "LTL: F task(a)")
    assert not verdict.holds
    assert render_trace(verdict.evidence) == "b ; succeeded"
    for text in ("eps", "a + phi", "while { a }", "a || b ; phi"):
        assert check(traces_of(text), "LTL: F (succeeded | failed)").holds


def test_strong_next_is_false_at_terminal():
    assert not check(traces_of("eps"), "LTL: X true").holds
    assert check(traces_of("eps"), "LTL: !X true | X failed").holds


def test_until():
    assert check(traces_of("a ; a ; b"), "LTL: task(a) U task(b)").holds
    assert not check(traces_of("a ; c ; b"), "LTL: task(a) U task(b)").holds
    assert not check(traces_of("a ; a"), "LTL: task(a) U task(b)").holds


def test_state_atoms_use_postconditions():
    ts = traces_of("t(x = 1) ; u(x = 2)")
    assert check(ts, "LTL: task(t) -> state(x == 1)").holds
    assert check(ts, "LTL: F (task(u) & state(x == 2))").holds
    assert check(ts, "LTL: G (succeeded -> state(x == 2))").holds


def test_unknown_state_is_false_and_flagged():
    ts = traces_of("t(x = f())")
    verdict = check(ts, 'LTL: F state(x == "a")')
    assert not verdict.holds and verdict.assumption_dependent
    assert not check(ts, "LTL: F task(t)").assumption_dependent


def test_assumed_atoms(login_text):
    ts = enumerate_traces(resolve(parse_model(login_text)))
    assert check(ts, "CTL: EF assumed(!password_entered)").holds
    assert check(ts, "LTL: G (assumed(cancelled) -> X failed)").holds
    assert check(ts, "LTL: F task(requestPassword) -> F (assumed(password_entered) | assumed(!password_entered))").holds


def test_prefix_tree_shares_prefixes():
    tree = build_prefix_tree(traces_of("a ; (b + c)"))
    assert list(tree.root.children) == [TaskEvt("a")]
    a = tree.root.children[TaskEvt("a")]
    assert list(a.children) == [TaskEvt("b"), TaskEvt("c")]
    assert all(n.status is Status.SUCCEEDED and n.is_leaf for n in a.children.values())


def test_prefix_tree_single_empty_trace():
    tree = build_prefix_tree(traces_of("eps"))
    assert tree.root.is_leaf and tree.root.status.value == "succeeded"


def test_prefix_tree_login(login_text):
    ts = enumerate_traces(resolve(parse_model(login_text)))
    tree = build_prefix_tree(ts)
    assert len(tree.root.children) == 3
    remind = next(n for e, n in tree.root.children.items() if "remind" in str(e))
    (request,) = remind.children.values()
    assert len(request.children) == 2


def test_prefix_tree_is_lossless():
    rng = random.Random(4)
    for _ in range(100):
        ts = enumerate_traces(resolve(random_guard_free_model(rng)), EnumConfig(unroll_bound=2))
        tree = build_prefix_tree(ts)
        assert sorted(tree.flatten(), key=render_trace) == sorted(ts.traces, key=render_trace)
        for node in tree.nodes():
            assert len(set(node.children)) == len(node.children)
            if node.is_leaf:
                assert node.ends


def test_ctl_examples():
    ts = traces_of("a ; (b + c)")
    verdict = check(ts, "CTL: EF task(b)")
    assert verdict.holds and render_trace(verdict.evidence) == "a ; b ; succeeded"
    verdict = check(ts, "CTL: AF task(b)")
    assert not verdict.holds and render_trace(verdict.evidence) == "a ; c ; succeeded"
    assert check(traces_of("eps"), "CTL: AX false").holds
    assert not check(traces_of("eps"), "CTL: EX true").holds


def test_ctl_branching_distinguishes_from_ltl():
    # both traces reach b, but only one branch keeps the option open after a
    ts = traces_of("a ; (b + c ; b)")
    assert check(ts, "CTL: AF task(b)").holds
    assert check(ts, "CTL: EX EX task(b)").holds
    assert not check(ts, "CTL: AX AX task(b)").holds
    assert check(ts, "CTL: A[!task(b) U task(b)]").holds
    assert check(ts, "CTL: E[task(a) | task(c) U task(b)]").holds
    assert not check(ts, "CTL: A[task(a) U task(b)]").holds


def test_ctl_counterexamples_for_universal_operators():
    ts = traces_of("a ; (b + c ; b)")
    verdict = check(ts, "CTL: A[task(a) U task(b)]")
    assert not trace_satisfies(verdict.evidence, parse_query("LTL: task(a) U task(b)").formula)
    verdict = check(ts, "CTL: AX AX task(b)")
    assert render_trace(verdict.evidence) == "a ; b ; succeeded"
    assert not trace_satisfies(verdict.evidence, parse_query("LTL: X X task(b)").formula)
    verdict = check(ts, "CTL: AG !task(c)")
    assert render_trace(verdict.evidence) == "a ; c ; b ; succeeded"
    verdict = check(ts, "CTL: !EF task(c)")
    assert not verdict.holds and verdict.evidence is not None


def test_eg_on_finite_paths():
    ts = traces_of("a ; a + a ; b")
    assert check(ts, "CTL: EG (task(a) | succeeded)").holds
    assert not check(ts, "CTL: AG (task(a) | succeeded)").holds
    verdict = check(ts, "CTL: EG (task(a) | succeeded)")
    assert render_trace(verdict.evidence) == "a ; a ; succeeded"


def test_trace_ending_at_internal_node():
    ts = traces_of("a ; (eps + b)")
    assert check(ts, "CTL: EX succeeded").holds
    assert not check(ts, "CTL: AX succeeded").holds
    assert check(ts, "CTL: EX EX succeeded").holds
    assert check(ts, "CTL: EF (task(a) & EX succeeded)").holds
    assert not check(ts, "CTL: AG !succeeded").holds


def test_login_queries(login_text):
    ts = enumerate_traces(resolve(parse_model(login_text)))
    assert check(ts, "CTL: EF failed").holds
    assert check(ts, "CTL: AG(task(requestPassword) -> EF task(validatePassword))").holds
    verdict = check(ts, "LTL: G !task(validatePassword)")
    assert not verdict.holds
    assert any(isinstance(e, TaskEvt) and e.name == "validatePassword" for e in verdict.evidence.events)
    assert verdict.assumption_dependent


def test_same_events_different_status():
    ts = traces_of("a ; (sigma + phi)")
    tree = build_prefix_tree(ts)
    (a,) = tree.root.children.values()
    assert set(a.ends) == {Status.SUCCEEDED, Status.FAILED} and a.status is None
    assert check(ts, "CTL: AX (succeeded | failed)").holds
    assert check(ts, "CTL: EX failed").holds and check(ts, "CTL: EX succeeded").holds
    assert not check(ts, "CTL: EX (succeeded & failed)").holds


def test_verdicts_on_empty_trace_set():
    ts = TraceSet(())
    assert check_ltl(ts, Const(False)).holds
    tree = build_prefix_tree(ts)
    assert check_ctl(tree, AG(Const(False))).holds
    assert not check_ctl(tree, EF(Const(True))).holds
