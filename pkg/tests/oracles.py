"""Independent reference implementations used only by the tests.

Nothing here calls into the evaluator: measures are plain dicts, and the
interpreter enumerates weighted outcomes directly.
"""
from __future__ import annotations

from fractions import Fraction

from statl.measure import DistV, FiniteMeasure, InjV, PairV, UNIT_V
from statl.semantics import apply_prim
from statl.terms import (Case, Const, DistConst, Inj, Let, Norm, Pair, PrimApp, Proj,
                         Return, Sample, Score, Stat, UnitVal, Var)

ERR = InjV(1, UNIT_V)


def naive_det(t, env):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Const):
        return t.value
    if isinstance(t, UnitVal):
        return UNIT_V
    if isinstance(t, Pair):
        return PairV(naive_det(t.fst, env), naive_det(t.snd, env))
    if isinstance(t, Inj):
        return InjV(t.tag, naive_det(t.arg, env))
    if isinstance(t, Proj):
        v = naive_det(t.arg, env)
        if t.which == "fst":
            return v.fst
        if t.which == "snd":
            return v.snd
        while isinstance(v, PairV):
            v = v.snd
        return v
    if isinstance(t, PrimApp):
        return apply_prim(t.fn, [naive_det(a, env) for a in t.args])
    if isinstance(t, DistConst):
        return DistV(t.measure)
    if isinstance(t, Case):
        v = naive_det(t.scrutinee, env)
        b = t.branches[v.tag]
        return naive_det(b.body, {**env, b.var: v.value})
    raise TypeError(t)


def _add(acc, v, w):
    if w:
        acc[v] = acc.get(v, 0) + w


def naive_prob(t, env, steps: int = 80) -> dict:
    """Outcome -> weight. ``stat`` is approximated by running the chain
    ``steps`` times from every starting point and checking that the runs
    agree; disagreement or oscillation yields the error point."""
    if isinstance(t, Sample):
        return dict(naive_det(t.dist, env).measure.items())
    if isinstance(t, Return):
        return {naive_det(t.arg, env): Fraction(1)}
    if isinstance(t, Score):
        return {UNIT_V: abs(naive_det(t.arg, env))}
    if isinstance(t, Let):
        out = {}
        for v, w in naive_prob(t.bound, env, steps).items():
            for u, x in naive_prob(t.body, {**env, t.var: v}, steps).items():
                _add(out, u, w * x)
        return out
    if isinstance(t, Case):
        v = naive_det(t.scrutinee, env)
        b = t.branches[v.tag]
        return naive_prob(b.body, {**env, b.var: v.value}, steps)
    if isinstance(t, Norm):
        mu = naive_prob(t.body, env, steps)
        total = sum(mu.values())
        if total == 0:
            return {ERR: Fraction(1)}
        return {InjV(0, v): w / total for v, w in mu.items()}
    if isinstance(t, Stat):
        return _naive_stat(t, env, steps)
    raise TypeError(t)


def _float_tv(a: dict, b: dict) -> float:
    keys = set(a) | set(b)
    return sum(abs(float(a.get(k, 0)) - float(b.get(k, 0))) for k in keys) / 2


def _naive_stat(t, env, steps):
    def step(mu):
        out = {}
        for v, w in mu.items():
            for u, x in naive_prob(t.body, {**env, t.var: v}, steps).items():
                _add(out, u, w * x)
        # round to keep the float-free dict small
        return {k: Fraction(float(x)).limit_denominator(10 ** 12) for k, x in out.items()}

    init = naive_prob(t.init, env, steps)
    runs = []
    for start in init:
        mu = {start: Fraction(1)}
        for _ in range(steps):
            mu = step(mu)
        runs.append((mu, step(mu)))
    if any(_float_tv(a, b) > 1e-9 for a, b in runs):
        return {ERR: Fraction(1)}
    if any(_float_tv(runs[0][0], a) > 1e-9 for a, _ in runs):
        return {ERR: Fraction(1)}
    return {InjV(0, v): w for v, w in runs[0][0].items()}


def dict_tv(a: dict, b) -> float:
    b = dict(b.items()) if isinstance(b, FiniteMeasure) else b
    return _float_tv(a, b)


# matrices ------------------------------------------------------------------------------

def mat_power_oracle(rows, n: int) -> list:
    size = len(rows)
    out = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    for _ in range(n):
        out = [[sum((out[i][k] * rows[k][j] for k in range(size)), Fraction(0)) for j in range(size)]
               for i in range(size)]
    return out


def push_oracle(states, rows, mu: FiniteMeasure, n: int) -> dict:
    p = mat_power_oracle(rows, n)
    idx = {s: i for i, s in enumerate(states)}
    out = {}
    for v, w in mu.items():
        for j, x in enumerate(p[idx[v]]):
            _add(out, states[j], w * x)
    return out


# enumerating probabilistic subterms together with their environments ----------------------

def prob_subterms(t, env=None):
    """Yield ``(subterm, env)`` for every probabilistic subterm of the closed
    program ``t`` and every environment it can be reached under."""
    from statl.semantics import build_kernel_matrix, eval_prob
    env = dict(env or {})
    seen = set()

    def walk(s, e):
        key = (id(s), tuple(sorted(e.items(), key=lambda kv: kv[0])))
        if key in seen:
            return
        seen.add(key)
        yield s, e
        if isinstance(s, Let):
            yield from walk(s.bound, e)
            for v in eval_prob(s.bound, e).support():
                yield from walk(s.body, {**e, s.var: v})
        elif isinstance(s, Case):
            v = naive_det(s.scrutinee, e)
            b = s.branches[v.tag]
            yield from walk(b.body, {**e, b.var: v.value})
        elif isinstance(s, Norm):
            yield from walk(s.body, e)
        elif isinstance(s, Stat):
            yield from walk(s.init, e)
            K = build_kernel_matrix(eval_prob(s.init, e), s.body, s.var, e)
            for st in K.states:
                yield from walk(s.body, {**e, s.var: st})

    yield from walk(t, env)


def norm_subterms(t):
    """``(norm term, env)`` pairs reachable in ``t``."""
    return [(s, e) for s, e in prob_subterms(t) if isinstance(s, Norm)]


# random chains ------------------------------------------------------------------------

def random_distribution(rng, n: int, sparse: bool = True) -> list:
    raw = [rng.randint(0, 6) if sparse else rng.randint(1, 6) for _ in range(n)]
    if sum(raw) == 0:
        raw[rng.randrange(n)] = 1
    total = sum(raw)
    return [Fraction(w, total) for w in raw]


def random_stochastic(rng, n: int, sparse: bool = True) -> list:
    return [random_distribution(rng, n, sparse) for _ in range(n)]
