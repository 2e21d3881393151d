"""Abstract syntax of the language.

One node family covers deterministic, probabilistic and purely probabilistic
phrases alike; which judgment a term satisfies is decided by
:func:`statl.typecheck.kind_check`, not by its node class. ``Case`` serves both
as the deterministic and the probabilistic case construct.

Terms are immutable and compare structurally.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

from .measure import FiniteMeasure

KEYWORDS = frozenset({
    "let", "in", "case", "of", "if", "then", "else", "return", "sample",
    "score", "norm", "stat", "fn", "tt", "ff", "fst", "snd", "last", "dist",
})

# whitelisted primitive functions, all total on their declared types
PRIMITIVES = frozenset({
    "add", "sub", "mul", "neg", "abs", "min", "max",
    "lt", "le", "gt", "ge", "eq", "not", "and", "or",
    "bern", "dirac", "uniform", "categorical",
    "accept", "accept_or_escape",
})

RESERVED = KEYWORDS | PRIMITIVES


class Term:
    """Base class of all AST nodes."""

    __slots__ = ()

    def _cached_hash(self) -> int:
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in dataclasses.fields(self)))
            object.__setattr__(self, "_h", h)
        return h

    def __str__(self) -> str:
        from .syntax import pretty
        return pretty(self)


@dataclass(frozen=True, repr=False)
class Var(Term):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True)
class UnitVal(Term):
    pass


@dataclass(frozen=True)
class Const(Term):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Inj(Term):
    tag: int
    arg: Term


@dataclass(frozen=True)
class Proj(Term):
    """``fst``, ``snd``, or ``last`` (the rightmost component of a
    right-nested tuple)."""

    which: str
    arg: Term


@dataclass(frozen=True)
class PrimApp(Term):
    fn: str
    args: tuple


@dataclass(frozen=True)
class Branch:
    var: str
    body: Term


@dataclass(frozen=True)
class Case(Term):
    """``case scrutinee of {(i, x_i) => body_i}``; branch ``i`` handles tag ``i``."""

    scrutinee: Term
    branches: tuple


@dataclass(frozen=True)
class Sample(Term):
    dist: Term


@dataclass(frozen=True)
class Return(Term):
    arg: Term


@dataclass(frozen=True)
class Let(Term):
    var: str
    bound: Term
    body: Term


@dataclass(frozen=True)
class Score(Term):
    arg: Term


@dataclass(frozen=True)
class Norm(Term):
    body: Term


@dataclass(frozen=True)
class Stat(Term):
    init: Term
    var: str
    body: Term


@dataclass(frozen=True)
class DistConst(Term):
    """A literal finite probability distribution."""

    measure: FiniteMeasure


for _cls in (Var, UnitVal, Const, Pair, Inj, Proj, PrimApp, Case, Sample,
             Return, Let, Score, Norm, Stat, DistConst):
    _cls.__hash__ = Term._cached_hash

TT = Inj(0, UnitVal())
FF = Inj(1, UnitVal())


def if_then_else(cond: Term, then: Term, other: Term) -> Case:
    return Case(cond, (Branch("_", then), Branch("_", other)))


def prim(fn: str, *args: Term) -> PrimApp:
    return PrimApp(fn, tuple(args))


def const(q) -> Const:
    return Const(Fraction(q))


# traversal --------------------------------------------------------------------

def children(t: Term) -> list:
    """Immediate subterms as ``(path_step, subterm)`` pairs, left to right."""
    if isinstance(t, (Var, UnitVal, Const, DistConst)):
        return []
    if isinstance(t, Pair):
        return [("fst", t.fst), ("snd", t.snd)]
    if isinstance(t, (Inj, Proj, Return, Score)):
        return [("arg", t.arg)]
    if isinstance(t, PrimApp):
        return [(f"args[{i}]", a) for i, a in enumerate(t.args)]
    if isinstance(t, Case):
        return [("scrutinee", t.scrutinee)] + [
            (f"branches[{i}]", b.body) for i, b in enumerate(t.branches)]
    if isinstance(t, Sample):
        return [("dist", t.dist)]
    if isinstance(t, Let):
        return [("bound", t.bound), ("body", t.body)]
    if isinstance(t, Norm):
        return [("body", t.body)]
    if isinstance(t, Stat):
        return [("init", t.init), ("body", t.body)]
    raise TypeError(f"not a term: {t!r}")


def map_children(t: Term, f: Callable[[Term], Term]) -> Term:
    """Rebuild ``t`` with ``f`` applied to each immediate subterm (binders kept)."""
    if isinstance(t, (Var, UnitVal, Const, DistConst)):
        return t
    if isinstance(t, Pair):
        return Pair(f(t.fst), f(t.snd))
    if isinstance(t, Inj):
        return Inj(t.tag, f(t.arg))
    if isinstance(t, Proj):
        return Proj(t.which, f(t.arg))
    if isinstance(t, PrimApp):
        return PrimApp(t.fn, tuple(f(a) for a in t.args))
    if isinstance(t, Case):
        return Case(f(t.scrutinee), tuple(Branch(b.var, f(b.body)) for b in t.branches))
    if isinstance(t, Sample):
        return Sample(f(t.dist))
    if isinstance(t, Return):
        return Return(f(t.arg))
    if isinstance(t, Score):
        return Score(f(t.arg))
    if isinstance(t, Let):
        return Let(t.var, f(t.bound), f(t.body))
    if isinstance(t, Norm):
        return Norm(f(t.body))
    if isinstance(t, Stat):
        return Stat(f(t.init), t.var, f(t.body))
    raise TypeError(f"not a term: {t!r}")


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order walk over every subterm, ``t`` included."""
    stack = [t]
    while stack:
        s = stack.pop()
        yield s
        stack.extend(reversed([c for _, c in children(s)]))


def contains(t: Term, *classes) -> bool:
    return any(isinstance(s, classes) for s in subterms(t))


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def free_vars(t: Term) -> frozenset:
    cached = t.__dict__.get("_fv")
    if cached is not None:
        return cached
    if isinstance(t, Var):
        fv = frozenset((t.name,))
    elif isinstance(t, Let):
        fv = free_vars(t.bound) | (free_vars(t.body) - {t.var})
    elif isinstance(t, Stat):
        fv = free_vars(t.init) | (free_vars(t.body) - {t.var})
    elif isinstance(t, Case):
        fv = free_vars(t.scrutinee).union(*[free_vars(b.body) - {b.var} for b in t.branches])
    else:
        fv = frozenset().union(*[free_vars(c) for _, c in children(t)])
    object.__setattr__(t, "_fv", fv)
    return fv


def all_names(t: Term) -> set:
    """Every variable name occurring in ``t``, free or bound."""
    names = set()
    for s in subterms(t):
        if isinstance(s, Var):
            names.add(s.name)
        elif isinstance(s, (Let, Stat)):
            names.add(s.var)
        elif isinstance(s, Case):
            names.update(b.var for b in s.branches)
    return names


def fresh_name(base: str, avoid) -> str:
    i = 1
    while True:
        name = f"{base}{i}"
        if name not in avoid and name not in RESERVED:
            return name
        i += 1


class NameSupply:
    """Deterministic generator of names distinct from a growing avoid set."""

    def __init__(self, avoid=()):
        self.avoid = set(avoid)

    def fresh(self, base: str) -> str:
        name = fresh_name(base, self.avoid)
        self.avoid.add(name)
        return name


def substitute(t: Term, x: str, d: Term) -> Term:
    """Capture-avoiding substitution ``t[x \\ d]``."""
    fv_d = free_vars(d)

    def rebind(var: str, body: Term) -> tuple:
        if var in fv_d:
            new = fresh_name(var.rstrip("0123456789") or "v", fv_d | free_vars(body) | {x})
            return new, substitute(body, var, Var(new))
        return var, body

    def go(t: Term) -> Term:
        if x not in free_vars(t):
            return t
        if isinstance(t, Var):
            return d
        if isinstance(t, Let):
            bound = go(t.bound)
            if t.var == x:
                return Let(t.var, bound, t.body)
            var, body = rebind(t.var, t.body)
            return Let(var, bound, go(body))
        if isinstance(t, Stat):
            init = go(t.init)
            if t.var == x:
                return Stat(init, t.var, t.body)
            var, body = rebind(t.var, t.body)
            return Stat(init, var, go(body))
        if isinstance(t, Case):
            branches = []
            for b in t.branches:
                if b.var == x:
                    branches.append(b)
                else:
                    var, body = rebind(b.var, b.body)
                    branches.append(Branch(var, go(body)))
            return Case(go(t.scrutinee), tuple(branches))
        return map_children(t, go)

    return go(t)
