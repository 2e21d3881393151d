import json
from fractions import Fraction as F

import pytest

from oracles import dict_tv, naive_prob
from statl.corpus import corpus_manifest
from statl.measure import (FALSE, TRUE, UNIT_V, FiniteMeasure, InjV,
                           measure_to_json)
from statl.semantics import (Evaluator, KernelMatrix, LimitReason, NoUniqueLimit,
                             StateBudgetExceeded, Unique, analyze_matrix, analyze_stat,
                             build_kernel_matrix, class_period, eval_det, eval_prob,
                             stat_solve, support_graph)
from statl.syntax import parse
from statl.terms import Stat, contains

ERR = FiniteMeasure.dirac(InjV(1, UNIT_V))


def inj0(mu):
    return mu.map(lambda v: InjV(0, v))


def test_eval_det_examples():
    assert eval_det(parse("fst((1/2, ()))")) == F(1, 2)
    assert eval_det(parse("case (0, 3) of {(0, x) => x | (1, y) => 0}")) == 3
    assert eval_det(parse("last((1/1, (2/1, 3)))")) == 3
    assert eval_det(parse("add(x, mul(2, y))"), {"x": F(1), "y": F(1, 4)}) == F(3, 2)
    assert eval_det(parse("and(lt(1, 2), not(eq(tt, ff)))")) == TRUE


def test_primitive_distributions():
    assert eval_det(parse("categorical(1, 1, 2, 3)")).measure == FiniteMeasure({1: F(1, 4), 2: F(3, 4)})
    assert eval_det(parse("categorical(1, 0, 2, 0)")).measure == FiniteMeasure({1: F(1, 2), 2: F(1, 2)})
    assert eval_det(parse("uniform(1, 1, 2)")).measure == FiniteMeasure({1: F(2, 3), 2: F(1, 3)})
    assert eval_det(parse("bern(3/2)")).measure == FiniteMeasure.dirac(TRUE)
    assert eval_det(parse("accept(2, 1)")) == F(1, 2)
    assert eval_det(parse("accept(0, 1)")) == 0
    assert eval_det(parse("accept_or_escape(0, 1)")) == 1
    assert eval_det(parse("accept_or_escape(0, 0)")) == 0


def test_eval_prob_examples():
    weighted = "let x = sample(bern 1/2) in let _ = score(if x then 2 else 1) in return x"
    mu = eval_prob(parse(weighted))
    assert mu == FiniteMeasure({TRUE: 1, FALSE: F(1, 2)}) and mu.mass == F(3, 2)
    assert eval_prob(parse(f"norm({weighted})")) == FiniteMeasure({InjV(0, TRUE): F(2, 3), InjV(0, FALSE): F(1, 3)})
    neg = eval_prob(parse("score(-2)"))
    assert neg == FiniteMeasure({UNIT_V: 2})


def test_kernel_matrix_examples():
    K = build_kernel_matrix(FiniteMeasure.dirac(TRUE), parse("return x"), "x")
    assert K.states == (TRUE,) and K.rows == ((1,),)
    body = parse("if x then sample(bern 1/2) else sample(bern 1/4)")
    K = build_kernel_matrix(FiniteMeasure.dirac(TRUE), body, "x")
    assert K.states == (TRUE, FALSE)
    assert K.rows == ((F(1, 2), F(1, 2)), (F(1, 4), F(3, 4)))
    three = parse("if lt(x, 2) then sample(uniform(add(x, 1), x)) else return x")
    K = build_kernel_matrix(FiniteMeasure({0: F(1, 2), 1: F(1, 2)}), three, "x")
    assert K.states == (0, 1, 2) and K.is_stochastic()
    assert set(K.states) >= {F(0), F(1)}


def test_state_budget():
    with pytest.raises(StateBudgetExceeded):
        build_kernel_matrix(FiniteMeasure.dirac(F(0)), parse("return add(x, 1)"), "x", state_budget=100)


def test_stat_solve_examples():
    assert stat_solve(FiniteMeasure.dirac(TRUE), parse("return x"), "x") == inj0(FiniteMeasure.dirac(TRUE))
    flip = parse("if x then return ff else return tt")
    assert stat_solve(FiniteMeasure.dirac(TRUE), flip, "x") == ERR
    a = analyze_stat(FiniteMeasure.dirac(TRUE), flip, "x")
    assert a.verdict == NoUniqueLimit(LimitReason.PERIODIC) and a.period == 2
    body = parse("if x then sample(bern 1/2) else sample(bern 1/4)")
    assert stat_solve(FiniteMeasure.dirac(TRUE), body, "x") == inj0(FiniteMeasure({TRUE: F(1, 3), FALSE: F(2, 3)}))


def test_reducible_chain_reports_multiple_classes():
    a = analyze_stat(FiniteMeasure.bernoulli(F(1, 2)), parse("return x"), "x")
    assert a.verdict == NoUniqueLimit(LimitReason.MULTIPLE_RECURRENT_CLASSES)
    # from a single point only one class is reachable
    a = analyze_stat(FiniteMeasure.dirac(TRUE), parse("return x"), "x")
    assert isinstance(a.verdict, Unique)


def test_transient_states_are_ignored():
    # 0 -> {0, 1}, 1 -> 2, 2 <-> 2 or 1: unique aperiodic class {1, 2}
    K = KernelMatrix((F(0), F(1), F(2)), ((F(1, 2), F(1, 2), 0), (0, 0, 1), (0, F(1, 2), F(1, 2))))
    a = analyze_matrix(K, FiniteMeasure.dirac(F(0)))
    assert a.verdict == Unique(FiniteMeasure({1: F(1, 3), 2: F(2, 3)}))


def test_period_of_three_cycle_with_chord():
    K = KernelMatrix(tuple(map(F, range(3))), ((0, 1, 0), (0, 0, 1), (1, 0, 0)))
    assert class_period(support_graph(K), {0, 1, 2}) == 3
    K2 = KernelMatrix(K.states, ((0, 1, 0), (0, 0, 1), (F(1, 2), F(1, 2), 0)))
    assert class_period(support_graph(K2), {0, 1, 2}) == 1


def test_unique_limit_is_invariant():
    for entry in corpus_manifest():
        ev = Evaluator(on_stat=lambda node, env, a: checks.append(a))
        checks = []
        eval_prob(entry.load(), None, ev)
        for a in checks:
            if isinstance(a.verdict, Unique):
                pi = a.verdict.pi
                assert pi.is_probability()
                assert a.matrix.step(pi) == pi


def test_programs_denote_probability_measures():
    for entry in corpus_manifest():
        if entry.program:
            assert eval_prob(entry.load()).mass == 1, entry.name


def test_evaluation_is_deterministic():
    for entry in corpus_manifest():
        t = entry.load()
        a = json.dumps(measure_to_json(eval_prob(t)))
        b = json.dumps(measure_to_json(eval_prob(entry.load())))
        assert a == b


def test_matches_naive_interpreter_on_corpus():
    for entry in corpus_manifest():
        t = entry.load()
        exact = eval_prob(t)
        ref = naive_prob(t, {})
        if contains(t, Stat):
            assert dict_tv(ref, exact) < 1e-6, entry.name
        else:
            assert ref == dict(exact.items()), entry.name


def test_case_selects_branch_by_tag():
    t = parse("let c = sample(uniform((0, 1), (1, 2), (2, 3))) in case c of {(0, a) => return a | (1, b) => return mul(b, 10) | (2, e) => return neg(e)}")
    assert eval_prob(t) == FiniteMeasure({F(1): F(1, 3), F(20): F(1, 3), F(-3): F(1, 3)})


def test_nested_stat_inner_chain_depends_on_outer_state():
    t = parse("stat(return tt, fn x => let y = stat(return x, fn z => return z) in case y of {(0, w) => return not(w) | (1, e) => return x})")
    # inner chain is the identity, so the outer chain flips deterministically
    assert eval_prob(t) == ERR
