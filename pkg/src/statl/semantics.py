"""Exact denotational evaluator.

Deterministic terms evaluate to values, probabilistic terms to finite
measures. ``stat`` enumerates the reachable state space of its kernel,
looks at the recurrent classes and solves for the stationary distribution
with rational Gaussian elimination.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Mapping

import networkx as nx

from .measure import (FALSE, TRUE, UNIT_V, DistV, FiniteMeasure, InjV, PairV,
                      bind, from_bool, normalize, scale, value_key,
                      value_to_json, rational_to_json)
from .syntax import deep_recursion
from .terms import (Case, Const, DistConst, Inj, Let, Norm, Pair, PrimApp, Proj,
                    Return, Sample, Score, Stat, Term, UnitVal, Var, free_vars)

DEFAULT_STATE_BUDGET = 10_000

ZERO = Fraction(0)
ONE = Fraction(1)
ERROR_POINT = InjV(1, UNIT_V)


class EvalError(Exception):
    """Raised when a term that does not kind-check is evaluated anyway."""


class StateBudgetExceeded(Exception):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"stationary state space exceeds the budget of {budget} states")


# primitives ------------------------------------------------------------------

def _real(v) -> Fraction:
    if not isinstance(v, Fraction):
        raise EvalError(f"expected a real, got {v!r}")
    return v


def _truth(v) -> bool:
    if v == TRUE:
        return True
    if v == FALSE:
        return False
    raise EvalError(f"expected a boolean, got {v!r}")


def _categorical(args) -> DistV:
    if len(args) % 2 or not args:
        raise EvalError("categorical expects value/weight pairs")
    vals = args[0::2]
    ws = [abs(_real(w)) for w in args[1::2]]
    total = sum(ws, ZERO)
    if total == 0:
        ws, total = [ONE] * len(vals), Fraction(len(vals))
    return DistV(FiniteMeasure((v, w / total) for v, w in zip(vals, ws)))


def accept_ratio(w: Fraction, w_new: Fraction) -> Fraction:
    """Independence-sampler acceptance: ``min(1, w'/w)`` when both weights are
    positive, otherwise reject."""
    if w > 0 and w_new > 0:
        return min(ONE, w_new / w)
    return ZERO


def accept_or_escape(w: Fraction, w_new: Fraction) -> Fraction:
    """Like :func:`accept_ratio`, but a zero-weight current state always
    accepts a positive-weight proposal."""
    if w > 0:
        return accept_ratio(w, w_new)
    return ONE if w_new > 0 else ZERO


def _binary(f):
    def run(args):
        if len(args) != 2:
            raise EvalError("expected two arguments")
        return f(_real(args[0]), _real(args[1]))
    return run


def _unary(f):
    def run(args):
        if len(args) != 1:
            raise EvalError("expected one argument")
        return f(args[0])
    return run


def _binary_bool(f):
    def run(args):
        if len(args) != 2:
            raise EvalError("expected two arguments")
        return from_bool(f(_truth(args[0]), _truth(args[1])))
    return run


def _bern(args):
    if len(args) != 1:
        raise EvalError("bern expects one argument")
    p = min(ONE, max(ZERO, _real(args[0])))
    return DistV(FiniteMeasure.bernoulli(p))


def _eq(args):
    if len(args) != 2:
        raise EvalError("eq expects two arguments")
    return from_bool(args[0] == args[1])


def _uniform(args):
    if not args:
        raise EvalError("uniform needs at least one value")
    return DistV(FiniteMeasure((v, Fraction(1, len(args))) for v in args))


PRIM_IMPLS: dict[str, Callable] = {
    "add": _binary(lambda a, b: a + b),
    "sub": _binary(lambda a, b: a - b),
    "mul": _binary(lambda a, b: a * b),
    "min": _binary(min),
    "max": _binary(max),
    "lt": _binary(lambda a, b: from_bool(a < b)),
    "le": _binary(lambda a, b: from_bool(a <= b)),
    "gt": _binary(lambda a, b: from_bool(a > b)),
    "ge": _binary(lambda a, b: from_bool(a >= b)),
    "accept": _binary(accept_ratio),
    "accept_or_escape": _binary(accept_or_escape),
    "neg": _unary(lambda a: -_real(a)),
    "abs": _unary(lambda a: abs(_real(a))),
    "not": _unary(lambda a: from_bool(not _truth(a))),
    "and": _binary_bool(lambda a, b: a and b),
    "or": _binary_bool(lambda a, b: a or b),
    "eq": _eq,
    "bern": _bern,
    "dirac": _unary(lambda v: DistV(FiniteMeasure.dirac(v))),
    "uniform": _uniform,
    "categorical": _categorical,
}


def apply_prim(fn: str, args) -> object:
    try:
        impl = PRIM_IMPLS[fn]
    except KeyError:
        raise EvalError(f"unknown primitive {fn!r}") from None
    return impl(list(args))


# kernel matrices ---------------------------------------------------------------

@dataclass(frozen=True)
class KernelMatrix:
    """Row-stochastic matrix over a canonically sorted, closed state list."""

    states: tuple
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(Fraction(x) for x in r) for r in self.rows))
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        return self._index[state]

    def row(self, state) -> FiniteMeasure:
        r = self.rows[self._index[state]]
        return FiniteMeasure(zip(self.states, r))

    def vector(self, mu: FiniteMeasure) -> list:
        vec = [ZERO] * self.size
        for v, w in mu.items():
            if v not in self._index:
                raise ValueError(f"{v!r} is not a state of this matrix")
            vec[self._index[v]] = w
        return vec

    def measure(self, vec) -> FiniteMeasure:
        return FiniteMeasure(zip(self.states, vec))

    def step(self, mu: FiniteMeasure) -> FiniteMeasure:
        """One step of the chain started at ``mu``: ``mu K``."""
        return self.measure(vec_mat(self.vector(mu), self.rows))

    def is_stochastic(self) -> bool:
        return all(sum(r, ZERO) == 1 for r in self.rows)

    def to_json(self) -> dict:
        return {"states": [value_to_json(s) for s in self.states],
                "rows": [[rational_to_json(x) for x in r] for r in self.rows]}


def vec_mat(vec, rows) -> list:
    n = len(rows[0]) if rows else 0
    out = [ZERO] * n
    for i, w in enumerate(vec):
        if w:
            for j, k in enumerate(rows[i]):
                if k:
                    out[j] += w * k
    return out


def mat_mul(a, b) -> tuple:
    return tuple(tuple(vec_mat(r, b)) for r in a)


# stat analysis -------------------------------------------------------------------

class LimitReason(str, enum.Enum):
    PERIODIC = "periodic"
    MULTIPLE_RECURRENT_CLASSES = "multiple_recurrent_classes"
    # a finite chain always has Cesaro limits, so this is never produced here
    DIVERGENT_LIMITS = "divergent_limits"


@dataclass(frozen=True)
class Unique:
    pi: FiniteMeasure


@dataclass(frozen=True)
class NoUniqueLimit:
    reason: LimitReason


@dataclass(frozen=True)
class StatAnalysis:
    matrix: KernelMatrix
    initial: FiniteMeasure
    verdict: Unique | NoUniqueLimit
    recurrent_classes: tuple = ()
    period: int | None = None

    @property
    def unique(self) -> bool:
        return isinstance(self.verdict, Unique)

    def result(self) -> FiniteMeasure:
        """The measure ``stat`` denotes: ``inj0`` of the limit, or the error point."""
        if isinstance(self.verdict, Unique):
            return self.verdict.pi.map(lambda v: InjV(0, v))
        return FiniteMeasure.dirac(ERROR_POINT)


def support_graph(K: KernelMatrix) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(K.size))
    for i, r in enumerate(K.rows):
        g.add_edges_from((i, j) for j, x in enumerate(r) if x)
    return g


def class_period(g: nx.DiGraph, members) -> int:
    """Period of a strongly connected class: gcd over edges (u, v) inside the
    class of ``level(u) + 1 - level(v)`` for BFS levels from any member."""
    members = set(members)
    root = min(members)
    level = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.successors(u):
                if v in members and v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    d = 0
    for u in members:
        for v in g.successors(u):
            if v in members:
                d = gcd(d, level[u] + 1 - level[v])
    return d


def solve_linear(a: list, b: list) -> list:
    """Solve ``a x = b`` exactly; ``a`` must be square and nonsingular."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular system")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def stationary_on_class(K: KernelMatrix, members) -> FiniteMeasure:
    idx = sorted(members)
    n = len(idx)
    # columns j of pi (K - I) = 0, the last one replaced by sum(pi) = 1
    a = [[K.rows[i][j] - (1 if i == j else 0) for i in idx] for j in idx]
    b = [ZERO] * n
    a[-1] = [ONE] * n
    b[-1] = ONE
    pi = solve_linear(a, b)
    return FiniteMeasure(zip((K.states[i] for i in idx), pi))


def analyze_matrix(K: KernelMatrix, init: FiniteMeasure) -> StatAnalysis:
    g = support_graph(K)
    reach = set()
    for v in init.support():
        reach |= nx.descendants(g, K.index(v)) | {K.index(v)}
    sub = g.subgraph(reach)
    classes = sorted((tuple(sorted(c)) for c in nx.attracting_components(sub)), key=lambda c: c[0])
    if len(classes) != 1:
        return StatAnalysis(K, init, NoUniqueLimit(LimitReason.MULTIPLE_RECURRENT_CLASSES), tuple(classes))
    period = class_period(g, classes[0])
    if period != 1:
        return StatAnalysis(K, init, NoUniqueLimit(LimitReason.PERIODIC), tuple(classes), period)
    pi = stationary_on_class(K, classes[0])
    return StatAnalysis(K, init, Unique(pi), tuple(classes), period)


# evaluator -------------------------------------------------------------------------

def _env_key(t: Term, env: Mapping) -> tuple:
    return tuple(sorted((x, env[x]) for x in free_vars(t) if x in env))


class Evaluator:
    """Memoizing evaluator. ``on_stat(node, env, analysis)`` is called once per
    distinct ``(stat node, relevant environment)`` pair."""

    def __init__(self, state_budget: int = DEFAULT_STATE_BUDGET,
                 on_stat: Callable | None = None):
        if state_budget <= 0:
            raise ValueError("state budget must be positive")
        self.state_budget = state_budget
        self.on_stat = on_stat
        self._memo: dict = {}
        self._stat_memo: dict = {}

    # deterministic
    def det(self, t: Term, env: Mapping):
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise EvalError(f"unbound variable {t.name!r}") from None
        if isinstance(t, Const):
            return t.value
        if isinstance(t, UnitVal):
            return UNIT_V
        if isinstance(t, Pair):
            return PairV(self.det(t.fst, env), self.det(t.snd, env))
        if isinstance(t, Inj):
            return InjV(t.tag, self.det(t.arg, env))
        if isinstance(t, Proj):
            v = self.det(t.arg, env)
            if not isinstance(v, PairV):
                raise EvalError(f"{t.which} of a non-pair {v!r}")
            if t.which == "fst":
                return v.fst
            if t.which == "snd":
                return v.snd
            while isinstance(v, PairV):
                v = v.snd
            return v
        if isinstance(t, PrimApp):
            return apply_prim(t.fn, [self.det(a, env) for a in t.args])
        if isinstance(t, DistConst):
            return DistV(t.measure)
        if isinstance(t, Case):
            branch, inner = self._select(t, env)
            return self.det(branch.body, inner)
        raise EvalError(f"{type(t).__name__} is not a deterministic term")

    def _select(self, t: Case, env: Mapping):
        v = self.det(t.scrutinee, env)
        if not isinstance(v, InjV) or v.tag >= len(t.branches):
            raise EvalError(f"case on {v!r} does not match {len(t.branches)} branches")
        b = t.branches[v.tag]
        inner = dict(env)
        inner[b.var] = v.value
        return b, inner

    # probabilistic
    def prob(self, t: Term, env: Mapping) -> FiniteMeasure:
        key = (id(t), _env_key(t, env))
        hit = self._memo.get(key)
        if hit is not None and hit[0] is t:
            return hit[1]
        mu = self._prob(t, env)
        self._memo[key] = (t, mu)
        return mu

    def _prob(self, t: Term, env: Mapping) -> FiniteMeasure:
        if isinstance(t, Sample):
            d = self.det(t.dist, env)
            if not isinstance(d, DistV):
                raise EvalError(f"sample of a non-distribution {d!r}")
            return d.measure
        if isinstance(t, Return):
            return FiniteMeasure.dirac(self.det(t.arg, env))
        if isinstance(t, Let):
            def k(v):
                inner = dict(env)
                inner[t.var] = v
                return self.prob(t.body, inner)
            return bind(self.prob(t.bound, env), k)
        if isinstance(t, Score):
            return scale(FiniteMeasure.dirac(UNIT_V), abs(_real(self.det(t.arg, env))))
        if isinstance(t, Norm):
            return normalize(self.prob(t.body, env))
        if isinstance(t, Case):
            branch, inner = self._select(t, env)
            return self.prob(branch.body, inner)
        if isinstance(t, Stat):
            return self.analyze(t, env).result()
        raise EvalError(f"{type(t).__name__} is not a probabilistic term")

    def analyze(self, t: Stat, env: Mapping) -> StatAnalysis:
        key = (id(t), _env_key(t, env))
        hit = self._stat_memo.get(key)
        if hit is not None and hit[0] is t:
            return hit[1]
        init = self.prob(t.init, env)
        K = self.kernel_matrix(init, t.body, t.var, env)
        analysis = analyze_matrix(K, init)
        self._stat_memo[key] = (t, analysis)
        if self.on_stat is not None:
            self.on_stat(t, dict(env), analysis)
        return analysis

    def kernel_matrix(self, init: FiniteMeasure, body: Term, var: str, env: Mapping) -> KernelMatrix:
        if not init.is_probability():
            raise EvalError(f"stat initial distribution has mass {init.mass}")
        rows = {}
        queue = list(init.support())
        seen = set(queue)
        while queue:
            s = queue.pop()
            inner = dict(env)
            inner[var] = s
            mu = self.prob(body, inner)
            if not mu.is_probability():
                raise EvalError(f"stat kernel row at {s!r} has mass {mu.mass}")
            rows[s] = mu
            for v in mu.support():
                if v not in seen:
                    seen.add(v)
                    if len(seen) > self.state_budget:
                        raise StateBudgetExceeded(self.state_budget)
                    queue.append(v)
        states = tuple(sorted(seen, key=value_key))
        return KernelMatrix(states, tuple(tuple(rows[s][v] for v in states) for s in states))


def eval_det(t: Term, env: Mapping | None = None, evaluator: Evaluator | None = None):
    with deep_recursion():
        return (evaluator or Evaluator()).det(t, dict(env or {}))


def eval_prob(t: Term, env: Mapping | None = None, evaluator: Evaluator | None = None) -> FiniteMeasure:
    with deep_recursion():
        return (evaluator or Evaluator()).prob(t, dict(env or {}))


def build_kernel_matrix(init: FiniteMeasure, body: Term, var: str, env: Mapping | None = None,
                        state_budget: int = DEFAULT_STATE_BUDGET) -> KernelMatrix:
    with deep_recursion():
        return Evaluator(state_budget).kernel_matrix(init, body, var, dict(env or {}))


def analyze_stat(init: FiniteMeasure, body: Term, var: str, env: Mapping | None = None,
                 state_budget: int = DEFAULT_STATE_BUDGET) -> StatAnalysis:
    return analyze_matrix(build_kernel_matrix(init, body, var, env, state_budget), init)


def stat_solve(init: FiniteMeasure, body: Term, var: str, env: Mapping | None = None,
               state_budget: int = DEFAULT_STATE_BUDGET) -> FiniteMeasure:
    return analyze_stat(init, body, var, env, state_budget).result()
