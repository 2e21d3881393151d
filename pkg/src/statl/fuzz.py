"""Random term generators for property tests.

``random_ast`` draws arbitrary (not necessarily well-typed) ASTs for
round-trip checks. ``random_program`` draws closed, well-kinded programs
over booleans that use ``norm``, ``score``, ``stat``, ``let`` and ``case``.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .measure import UNIT_V, FiniteMeasure, InjV, PairV
from .terms import (PRIMITIVES, Branch, Case, Const, DistConst, FF, Inj, Let, Norm,
                    Pair, PrimApp, Proj, Return, Sample, Score, Stat, Term, TT,
                    UnitVal, Var, if_then_else, prim)

NAMES = ("x", "y", "z", "acc", "x1", "y2", "w'", "tr_0", "k", "s")
PRIM_LIST = sorted(PRIMITIVES)
PROBS = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4))
WEIGHTS = (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3))


def _rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-20, 20), rng.choice((1, 1, 2, 3, 7)))


def _value(rng: random.Random, depth: int = 2):
    roll = rng.random()
    if depth <= 0 or roll < 0.4:
        return _rational(rng) if rng.random() < 0.7 else UNIT_V
    if roll < 0.7:
        return PairV(_value(rng, depth - 1), _value(rng, depth - 1))
    return InjV(rng.randint(0, 2), _value(rng, depth - 1))


def _measure(rng: random.Random) -> FiniteMeasure:
    n = rng.randint(1, 3)
    pts = [_value(rng) for _ in range(n)]
    raw = [rng.randint(1, 5) for _ in range(n)]
    total = sum(raw)
    return FiniteMeasure((v, Fraction(w, total)) for v, w in zip(pts, raw))


def random_ast(rng: random.Random, depth: int = 8) -> Term:
    """An arbitrary AST of depth at most ``depth``."""
    if depth <= 1:
        return _leaf(rng)
    d = depth - 1
    choice = rng.randrange(17)
    if choice == 0:
        return _leaf(rng)
    if choice == 1:
        return Pair(random_ast(rng, d), random_ast(rng, d))
    if choice == 2:
        return Inj(rng.randint(0, 3), random_ast(rng, d))
    if choice == 3:
        return Proj(rng.choice(("fst", "snd", "last")), random_ast(rng, d))
    if choice == 4:
        return PrimApp(rng.choice(PRIM_LIST), tuple(random_ast(rng, d) for _ in range(rng.randint(0, 3))))
    if choice in (5, 6):
        n = rng.randint(1, 3)
        return Case(random_ast(rng, d), tuple(
            Branch(rng.choice(NAMES + ("_",)), random_ast(rng, d)) for _ in range(n)))
    if choice == 7:
        return Sample(random_ast(rng, d))
    if choice == 8:
        return Return(random_ast(rng, d))
    if choice in (9, 10):
        return Let(rng.choice(NAMES + ("_",)), random_ast(rng, d), random_ast(rng, d))
    if choice == 11:
        return Score(random_ast(rng, d))
    if choice == 12:
        return Norm(random_ast(rng, d))
    if choice == 13:
        return Stat(random_ast(rng, d), rng.choice(NAMES), random_ast(rng, d))
    if choice == 14:
        return if_then_else(random_ast(rng, d), random_ast(rng, d), random_ast(rng, d))
    return _leaf(rng)


def _leaf(rng: random.Random) -> Term:
    roll = rng.randrange(6)
    if roll == 0:
        return Var(rng.choice(NAMES))
    if roll == 1:
        return UnitVal()
    if roll in (2, 3):
        return Const(_rational(rng))
    if roll == 4:
        return rng.choice((TT, FF))
    return DistConst(_measure(rng))


# well-kinded programs over booleans -------------------------------------------------

class _ProgramGen:
    def __init__(self, rng: random.Random, allow_stat: bool = True):
        self.rng = rng
        self.counter = 0
        self.allow_stat = allow_stat

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def det_bool(self, env: list) -> Term:
        rng = self.rng
        roll = rng.randrange(5)
        if env and roll < 2:
            return Var(rng.choice(env))
        if env and roll == 2:
            return prim("not", Var(rng.choice(env)))
        if len(env) >= 2 and roll == 3:
            a, b = rng.sample(env, 2)
            return prim(rng.choice(("and", "or", "eq")), Var(a), Var(b))
        return rng.choice((TT, FF))

    def weight(self, env: list) -> Term:
        rng = self.rng
        if env and rng.random() < 0.7:
            return if_then_else(Var(rng.choice(env)), Const(rng.choice(WEIGHTS[1:])), Const(rng.choice(WEIGHTS)))
        return Const(rng.choice(WEIGHTS[1:]))

    def unwrap(self, opt: Term, env: list, depth: int) -> Term:
        """Bind an ``A + 1`` result and continue with a boolean."""
        r, v, e = self.fresh(), self.fresh(), self.fresh()
        return Let(r, opt, Case(Var(r), (Branch(v, Return(Var(v))), Branch(e, Return(self.det_bool(env))))))

    def pure(self, env: list, depth: int) -> Term:
        rng = self.rng
        if depth <= 0:
            return rng.choice((Sample(prim("bern", Const(rng.choice(PROBS)))), Return(self.det_bool(env))))
        roll = rng.randrange(10)
        if roll < 2:
            return Sample(prim("bern", Const(rng.choice(PROBS))))
        if roll == 2:
            return Return(self.det_bool(env))
        if roll < 6:
            x = self.fresh()
            return Let(x, self.pure(env, depth - 1), self.pure(env + [x], depth - 1))
        if roll == 6:
            return if_then_else(self.det_bool(env), self.pure(env, depth - 1), self.pure(env, depth - 1))
        if roll < 9 or not self.allow_stat:
            return self.unwrap(Norm(self.weighted(env, depth - 1)), env, depth)
        x = self.fresh()
        inner = Stat(self.pure(env, 0), x, self.pure(env + [x], min(depth - 1, 1)))
        return self.unwrap(inner, env, depth)

    def weighted(self, env: list, depth: int) -> Term:
        rng = self.rng
        if depth <= 0:
            return self.pure(env, 0)
        roll = rng.randrange(6)
        if roll < 3:
            x = self.fresh()
            first = self.pure(env, depth - 1) if rng.random() < 0.6 else self.weighted(env, depth - 1)
            return Let(x, first, self.weighted(env + [x], depth - 1))
        if roll == 3:
            return Let("_", Score(self.weight(env)), self.weighted(env, depth - 1))
        if roll == 4:
            return if_then_else(self.det_bool(env), self.weighted(env, depth - 1), self.weighted(env, depth - 1))
        return self.pure(env, depth - 1)


def random_program(rng: random.Random, depth: int = 4, allow_stat: bool = True) -> Term:
    """A closed purely probabilistic program of boolean type."""
    gen = _ProgramGen(rng, allow_stat)
    if rng.random() < 0.5:
        return gen.unwrap(Norm(gen.weighted([], depth)), [], depth)
    return gen.pure([], depth)
