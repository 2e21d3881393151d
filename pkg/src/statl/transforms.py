"""Source-to-source transformations.

``tracer`` turns a probabilistic term into one that returns the whole trace
of its random choices, ``prior_tracer`` does the same with every ``score``
dropped, and ``lhd_term`` builds the deterministic likelihood of a trace.
``mh`` and ``compile_program`` use them to replace ``norm`` (and with it
every ``score``) by an independence Metropolis-Hastings chain expressed with
``stat``. ``iterate_unroll`` and ``approx_all`` replace ``stat`` by a finite
number of kernel steps.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .terms import (Branch, Case, Const, Inj, Let, NameSupply, Norm, Pair,
                    Proj, Return, Sample, Score, Stat, Term, UnitVal, Var, all_names,
                    children, free_vars, if_then_else, map_children, prim,
                    substitute)


def _half() -> Term:
    return Const(Fraction(1, 2))


class TransformError(ValueError):
    pass


def _supply(*terms: Term) -> NameSupply:
    avoid = set()
    for t in terms:
        avoid |= all_names(t)
    return NameSupply(avoid)


# trace projection -------------------------------------------------------------------

def lastproj(t: Term, tr: Term) -> Term:
    """Deterministic term extracting the result of ``t`` from a trace ``tr``
    produced by ``tracer(t)``.

    The trace of a ``let`` is the pair of the two sub-traces, so the result
    lives in the second one; the trace of a ``case`` is tagged with the taken
    branch. Anything else is its own trace.
    """
    if isinstance(t, Let):
        return lastproj(t.body, Proj("snd", tr))
    if isinstance(t, Case):
        return Case(tr, tuple(Branch("r", lastproj(b.body, Var("r"))) for b in t.branches))
    return tr


# tracers ---------------------------------------------------------------------------

def _trace(t: Term, supply: NameSupply, prior: bool) -> Term:
    if isinstance(t, Score):
        return Return(UnitVal()) if prior else t
    if isinstance(t, (Sample, Return, Norm, Stat)):
        return t
    if isinstance(t, Let):
        tx = supply.fresh("tx")
        ty = supply.fresh("ty")
        body = substitute(t.body, t.var, lastproj(t.bound, Var(tx)))
        return Let(tx, _trace(t.bound, supply, prior),
                   Let(ty, _trace(body, supply, prior), Return(Pair(Var(tx), Var(ty)))))
    if isinstance(t, Case):
        branches = []
        for i, b in enumerate(t.branches):
            tr = supply.fresh("tb")
            branches.append(Branch(b.var, Let(tr, _trace(b.body, supply, prior), Return(Inj(i, Var(tr))))))
        return Case(t.scrutinee, tuple(branches))
    raise TransformError(f"cannot trace the deterministic term {t}")


def tracer(t: Term) -> Term:
    """Rewrite ``t`` to return its full trace instead of only its result."""
    return _trace(t, _supply(t), prior=False)


def prior_tracer(t: Term) -> Term:
    """:func:`tracer` with every ``score`` replaced by ``return ()``."""
    return _trace(t, _supply(t), prior=True)


# likelihood --------------------------------------------------------------------------

def _mul(a: Term, b: Term) -> Term:
    if a == Const(1):
        return b
    if b == Const(1):
        return a
    return prim("mul", a, b)


def _lhd(t: Term, tr: Term, supply: NameSupply) -> Term:
    if isinstance(t, Score):
        return prim("abs", t.arg)
    if isinstance(t, Let):
        body = substitute(t.body, t.var, lastproj(t.bound, Proj("fst", tr)))
        return _mul(_lhd(t.bound, Proj("fst", tr), supply), _lhd(body, Proj("snd", tr), supply))
    if isinstance(t, Case):
        fv_tr = free_vars(tr)
        branches = []
        for i, b in enumerate(t.branches):
            var, body = b.var, b.body
            if var in fv_tr:
                var = supply.fresh(var.rstrip("0123456789'") or "x")
                body = substitute(body, b.var, Var(var))
            y = supply.fresh("y")
            inner = Case(tr, tuple(
                Branch(y, _lhd(body, Var(y), supply) if j == i else Const(0))
                for j in range(len(t.branches))))
            branches.append(Branch(var, inner))
        return Case(t.scrutinee, tuple(branches))
    if isinstance(t, (Sample, Return, Norm, Stat)):
        return Const(1)
    raise TransformError(f"cannot take the likelihood of the deterministic term {t}")


def lhd_term(t: Term, tr: Term, avoid=()) -> Term:
    """Deterministic real-valued term computing the likelihood of the trace
    ``tr`` (a deterministic term) under ``t``."""
    supply = _supply(t, tr)
    supply.avoid |= set(avoid)
    return _lhd(t, tr, supply)


@dataclass(frozen=True)
class WeightFn:
    """The likelihood of a term's traces, as a deterministic term in ``var``."""

    term: Term
    var: str

    def __call__(self, trace, env: Mapping | None = None):
        from .semantics import eval_det
        inner = dict(env or {})
        inner[self.var] = trace
        return eval_det(self.term, inner)


def lhd_tracer(t: Term) -> WeightFn:
    var = _supply(t).fresh("trace")
    return WeightFn(lhd_term(t, Var(var)), var)


# Metropolis-Hastings -------------------------------------------------------------------

def _norm_body(norm_t: Term) -> Term:
    if not isinstance(norm_t, Norm):
        raise TransformError("mh expects a norm term")
    return norm_t.body


def mh(norm_t: Term) -> Term:
    """Independence Metropolis-Hastings over traces, proposing from the prior.

    The chain state is a trace; a proposal ``s2`` is accepted with
    probability ``accept(L(s), L(s2))``.
    """
    t = _norm_body(norm_t)
    supply = _supply(t)
    s, s2, c = supply.fresh("s"), supply.fresh("s"), supply.fresh("c")
    prior = prior_tracer(t)
    weight = lambda v: lhd_term(t, Var(v), supply.avoid)
    body = Let(s2, prior,
               Let(c, Sample(prim("bern", prim("accept", weight(s), weight(s2)))),
                   Case(Var(c), (Branch("_", Return(Var(s2))), Branch("_", Return(Var(s)))))))
    return Stat(prior, s, body)


def mh_guarded(norm_t: Term) -> Term:
    """Variant of :func:`mh` whose stationary limit always matches ``norm``.

    The state is ``(trace, bit)`` where the bit is a fair coin redrawn on
    every step. A zero-likelihood current trace accepts any positive-likelihood
    proposal, so such traces are transient. When every trace has likelihood
    zero the chain never moves, and the two copies of each trace give
    separate recurrent classes, which is the error outcome of ``norm``.
    """
    t = _norm_body(norm_t)
    supply = _supply(t)
    s, s2, b, c, tr = (supply.fresh(n) for n in ("s", "s", "b", "c", "tr"))
    prior = prior_tracer(t)
    weight = lambda v: lhd_term(t, v, supply.avoid)
    current = Proj("fst", Var(s))
    coin = Sample(prim("bern", _half()))
    init = Let(tr, prior, Let(b, coin, Return(Pair(Var(tr), Var(b)))))
    reject = if_then_else(prim("gt", weight(current), Const(0)),
                          Return(Pair(current, Var(b))), Return(Var(s)))
    body = Let(s2, prior,
               Let(b, coin,
                   Let(c, Sample(prim("bern", prim("accept_or_escape", weight(current), weight(Var(s2))))),
                       Case(Var(c), (Branch("_", Return(Pair(Var(s2), Var(b)))), Branch("_", reject))))))
    return Stat(init, s, body)


def compile_program(t: Term) -> Term:
    """Eliminate ``norm`` and ``score``: homomorphic everywhere except on
    ``norm``, which becomes a Metropolis-Hastings ``stat`` followed by
    projecting each sampled trace back to its result."""
    if isinstance(t, Norm):
        body = compile_program(t.body)
        supply = _supply(body)
        r, s, z = supply.fresh("r"), supply.fresh("s"), supply.fresh("z")
        chain = mh_guarded(Norm(body))
        back = Case(Var(r), (
            Branch(s, Return(Inj(0, lastproj(body, Proj("fst", Var(s)))))),
            Branch(z, Return(Inj(1, UnitVal())))))
        return Let(r, chain, back)
    return _map_prob(t, compile_program)


def _map_prob(t: Term, f) -> Term:
    # only probabilistic positions are rewritten; deterministic parts stay
    if isinstance(t, Let):
        return Let(t.var, f(t.bound), f(t.body))
    if isinstance(t, Stat):
        return Stat(f(t.init), t.var, f(t.body))
    if isinstance(t, Case):
        return Case(t.scrutinee, tuple(Branch(b.var, f(b.body)) for b in t.branches))
    return t


# approximation ----------------------------------------------------------------------

IterationPlan = Mapping[int, int]


def iterate_unroll(stat_t: Stat, n: int) -> Term:
    """``n`` kernel steps from the initial distribution of ``stat_t``."""
    if not isinstance(stat_t, Stat):
        raise TransformError("iterate_unroll expects a stat term")
    if n < 0:
        raise TransformError("step count must be nonnegative")
    out = stat_t.init
    for _ in range(n):
        out = Let(stat_t.var, out, stat_t.body)
    return out


@dataclass(frozen=True)
class StatSite:
    label: int
    path: tuple
    node: Stat

    @property
    def path_str(self) -> str:
        return "/" + "/".join(self.path)


def stat_sites(t: Term) -> list[StatSite]:
    """All ``stat`` subterms in pre-order: a site, then the sites in its
    initial term, then those in its body."""
    out = []

    def walk(s: Term, path: tuple):
        if isinstance(s, Stat):
            out.append(StatSite(len(out), path, s))
        for step, c in children(s):
            walk(c, path + (step,))

    walk(t, ())
    return out


class ApproxCache:
    """Shares rewritten subterms between calls to :func:`approx_all` so that
    a memoizing evaluator can reuse work across plans."""

    def __init__(self):
        self.rewrites: dict = {}
        self.iterates: dict = {}
        self.counts: dict = {}


def _count(t: Term, cache: ApproxCache) -> int:
    hit = cache.counts.get(id(t))
    if hit is not None and hit[0] is t:
        return hit[1]
    n = (1 if isinstance(t, Stat) else 0) + sum(_count(c, cache) for _, c in children(t))
    cache.counts[id(t)] = (t, n)
    return n


def approx_all(t: Term, plan: IterationPlan, cache: ApproxCache | None = None) -> Term:
    """Replace every ``stat`` site ``i`` by ``plan[i]`` unrolled steps.

    The replacement is wrapped as ``let x = ... in return (0, x)`` so it keeps
    the ``A + 1`` type of the ``stat`` it stands for.
    """
    cache = cache or ApproxCache()
    n_sites = _count(t, cache)
    if set(plan) != set(range(n_sites)):
        raise TransformError(f"plan labels {sorted(plan)} do not match the sites 0..{n_sites - 1}")
    if any((not isinstance(n, int)) or n < 0 for n in plan.values()):
        raise TransformError("step counts must be nonnegative integers")

    def go(s: Term, start: int) -> Term:
        count = _count(s, cache)
        if count == 0:
            return s
        sub = tuple(plan[i] for i in range(start, start + count))
        key = (id(s), sub)
        hit = cache.rewrites.get(key)
        if hit is not None and hit[0] is s:
            return hit[1]
        if isinstance(s, Stat):
            init = go(s.init, start + 1)
            body = go(s.body, start + 1 + _count(s.init, cache))
            out = _iterate_shared(s, init, body, plan[start], cache)
            out = Let(s.var, out, Return(Inj(0, Var(s.var))))
        else:
            pos = start

            def rec(c: Term) -> Term:
                nonlocal pos
                r = go(c, pos)
                pos += _count(c, cache)
                return r

            out = map_children(s, rec)
        cache.rewrites[key] = (s, out)
        return out

    return go(t, 0)


def _iterate_shared(s: Stat, init: Term, body: Term, n: int, cache: ApproxCache) -> Term:
    key = (id(init), id(body), s.var)
    chain = cache.iterates.get(key)
    if chain is None or chain[0] is not init or chain[1] is not body:
        chain = (init, body, [init])
        cache.iterates[key] = chain
    terms = chain[2]
    while len(terms) <= n:
        terms.append(Let(s.var, terms[-1], body))
    return terms[n]


def uniform_plan(t: Term, n: int) -> dict:
    return {site.label: n for site in stat_sites(t)}
