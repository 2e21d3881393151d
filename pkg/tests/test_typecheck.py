import json
import random

import pytest

from statl.corpus import corpus_manifest
from statl.fuzz import random_program
from statl.syntax import parse
from statl.terms import (Let, Proj, Return, UnitVal, Var, free_vars, subterms,
                         substitute)
from statl.typecheck import TypeCheckError, check_kind, is_program, kind_check
from statl.types import BOOL, REAL, UNIT, Kind, Prob, Product, option


def kc(src, ctx=()):
    return kind_check(list(ctx), parse(src))


def test_score_is_unnormalized():
    assert kc("score(2)") == (Kind.PROB, UNIT)


def test_let_of_pure_parts_is_pure():
    assert kc("let x = sample(bern 1/2) in return x") == (Kind.PURE, BOOL)


def test_let_with_score_is_unnormalized():
    assert kc("let _ = score(2) in return ()") == (Kind.PROB, UNIT)
    assert kc("let x = sample(bern 1/2) in let _ = score(1) in return x") == (Kind.PROB, BOOL)


def test_norm_and_stat_types():
    assert kc("norm(let _ = score(2) in return 1)") == (Kind.PURE, option(REAL))
    assert kc("stat(return tt, fn x => return x)") == (Kind.PURE, option(BOOL))


def test_deterministic_terms():
    assert kc("fst((1/2, ()))") == (Kind.DET, REAL)
    assert kc("case (0, 3) of {(0, x) => x | (1, y) => 0}") == (Kind.DET, REAL)
    assert kc("bern(1/3)") == (Kind.DET, Prob(BOOL))
    assert kc("last((1/1, (tt, 2)))") == (Kind.DET, REAL)
    assert kc("x", [("x", Product(REAL, UNIT))]) == (Kind.DET, Product(REAL, UNIT))


def test_mixed_pure_and_unnormalized_branches_join():
    assert kc("if tt then return 1 else let _ = score(2) in return 3") == (Kind.PROB, REAL)


def test_type_errors():
    cases = [
        ("score(tt)", "prim"),
        ("sample(1)", "sample"),
        ("stat(let _ = score(2) in return tt, fn x => return x)", "stat"),
        ("stat(return tt, fn x => return 1)", "stat"),
        ("norm(1)", "norm"),
        ("if tt then 1 else return 1", "case"),
        ("return x", "var"),
    ]
    for src, rule in cases:
        with pytest.raises(TypeCheckError) as info:
            kc(src)
        data = json.loads(info.value.to_json_str())
        assert set(data) == {"rule", "path", "expected", "found"}
        assert isinstance(data["path"], list)
        assert data["rule"], src


def test_error_paths_point_at_the_offending_subterm():
    with pytest.raises(TypeCheckError) as info:
        kc("let x = sample(bern 1/2) in let y = score(x) in return y")
    assert info.value.path[:2] == ["body", "bound"]


def test_subsumption():
    rng = random.Random(11)
    for _ in range(100):
        t = random_program(rng, depth=3)
        kind, ty = kind_check([], t)
        assert kind is Kind.PURE
        assert check_kind([], t, Kind.PROB) == ty
        assert check_kind([], t, Kind.PURE) == ty


def test_substitution_examples():
    x = Var("x")
    assert substitute(Return(x), "x", UnitVal()) == Return(UnitVal())
    shadow = Let("x", Return(Var("u")), Return(x))
    assert substitute(shadow, "x", Var("v")) == shadow
    assert substitute(Return(x), "x", Proj("last", Var("y"))) == Return(Proj("last", Var("y")))


def test_substitution_avoids_capture():
    t = parse("let y = sample(bern 1/2) in return (x, y)")
    out = substitute(t, "x", Var("y"))
    assert free_vars(out) == {"y"}
    (inner,) = [s for s in subterms(out) if isinstance(s, Let)]
    assert inner.var != "y"


def test_substitution_preserves_typing():
    d = parse("fst((1/2, ()))")
    assert kind_check([], d) == (Kind.DET, REAL)
    for src in ["return add(x, 1)", "let y = sample(bern x) in return (y, x)",
                "if lt(x, 1) then sample(bern 1/2) else return ff",
                "stat(return x, fn z => return z)"]:
        t = parse(src)
        assert kind_check([], substitute(t, "x", d)) == kind_check([("x", REAL)], t)


def test_free_vars_examples():
    assert free_vars(parse("return x")) == {"x"}
    assert free_vars(parse("let x = sample(d) in return x")) == {"d"}
    assert free_vars(parse("stat(return 1, fn x => return x)")) == set()


def test_program_predicate_matches_corpus_labels():
    entries = corpus_manifest()
    assert any(not e.program for e in entries)
    for e in entries:
        t = e.load()
        assert is_program(t) == e.program, e.name
        assert kind_check([], t)[0].label == e.kind


def test_context_shadowing():
    assert kc("x", [("x", REAL), ("x", UNIT)]) == (Kind.DET, UNIT)


def test_dist_literal_and_primitive_types():
    assert kc("sample(dist{0: 1/2, 1: 1/2})") == (Kind.PURE, REAL)
    assert kc("sample(uniform(tt, ff))") == (Kind.PURE, BOOL)
    assert kc("sample(categorical((0, ()), 1, (1, ()), 2))") == (Kind.PURE, BOOL)
    assert kc("sample(dirac((1/1, ())))") == (Kind.PURE, Product(REAL, UNIT))
    with pytest.raises(TypeCheckError):
        kc("sample(dist{0: 1/2, (): 1/2})")
