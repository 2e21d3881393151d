"""Uniform-ergodicity certificates and total-variation error bounds.

A certificate ``(C, rho)`` for a finite kernel ``K`` with stationary ``pi``
guarantees ``sup_x tv(K^n(x, .), pi) <= C * rho**n`` for every ``n``. Here
they come from the Dobrushin coefficient of a power of ``K``. The composite
bound for a program walks its ``stat`` sites: each site pays ``C rho^N`` for
its own truncation, plus ``C / (1 - rho)`` times whatever error the
approximated kernel body carries.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .measure import FiniteMeasure, rational_to_json, tv, measure_to_json
from .semantics import (DEFAULT_STATE_BUDGET, Evaluator, KernelMatrix, Unique,
                        eval_prob, mat_mul, vec_mat)
from .syntax import deep_recursion
from .terms import Norm, Score, Stat, Term, children, contains
from .transforms import ApproxCache, approx_all, stat_sites

ZERO = Fraction(0)
ONE = Fraction(1)
DEFAULT_M_MAX = 16
BISECTION_STEPS = 32


class NotCertified(Exception):
    def __init__(self, message: str, label: int | None = None):
        self.label = label
        super().__init__(message)


class PreconditionError(ValueError):
    pass


def row_tv(a, b) -> Fraction:
    pos = neg = ZERO
    for x, y in zip(a, b):
        d = x - y
        if d > 0:
            pos += d
        else:
            neg -= d
    return max(pos, neg)


def dobrushin_rows(rows) -> Fraction:
    best = ZERO
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            best = max(best, row_tv(rows[i], rows[j]))
            if best == 1:
                return best
    return best


def dobrushin(K: KernelMatrix) -> Fraction:
    """Largest total-variation distance between two rows of ``K``."""
    return dobrushin_rows(K.rows)


def identity_rows(n: int) -> tuple:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def matrix_power(rows, n: int) -> tuple:
    result = identity_rows(len(rows))
    base = tuple(tuple(r) for r in rows)
    while n:
        if n & 1:
            result = mat_mul(result, base)
        n >>= 1
        if n:
            base = mat_mul(base, base)
    return result


def push(K: KernelMatrix, mu: FiniteMeasure, n: int) -> FiniteMeasure:
    """``mu K^n`` by repeated vector-matrix products."""
    vec = K.vector(mu)
    for _ in range(n):
        vec = vec_mat(vec, K.rows)
    return K.measure(vec)


def is_invariant(K: KernelMatrix, pi: FiniteMeasure) -> bool:
    return K.step(pi) == pi


def detailed_balance_violations(K: KernelMatrix, pi: FiniteMeasure) -> list:
    """State pairs where ``pi(x) K(x, y) != pi(y) K(y, x)``."""
    p = K.vector(pi)
    bad = []
    for i in range(K.size):
        for j in range(i + 1, K.size):
            if p[i] * K.rows[i][j] != p[j] * K.rows[j][i]:
                bad.append((K.states[i], K.states[j]))
    return bad


@dataclass(frozen=True)
class ErgodicityCert:
    C: Fraction
    rho: Fraction
    m: int
    pi: FiniteMeasure | None = None

    def bound(self, n: int) -> Fraction:
        return self.C * self.rho ** n

    def to_json(self) -> dict:
        out = {"C": rational_to_json(self.C), "rho": rational_to_json(self.rho), "m": self.m}
        if self.pi is not None:
            out["pi"] = measure_to_json(self.pi)
        return out


def root_upper_bound(x: Fraction, m: int, steps: int = BISECTION_STEPS) -> Fraction:
    """Rational ``r`` with ``r**m >= x`` found by bisection on ``[0, 1]``.

    Bisection continues past ``steps`` until ``r < 1`` whenever ``x < 1``."""
    lo, hi = ZERO, ONE
    k = 0
    while k < steps or (hi == 1 and x < 1):
        mid = (lo + hi) / 2
        if mid ** m >= x:
            hi = mid
        else:
            lo = mid
        k += 1
    return hi


def certify(K: KernelMatrix, pi: FiniteMeasure, m_max: int = DEFAULT_M_MAX) -> ErgodicityCert:
    """Certificate from the first power ``K^m`` (``m <= m_max``) whose
    Dobrushin coefficient is below one."""
    if m_max < 1:
        raise ValueError("m_max must be positive")
    if not is_invariant(K, pi):
        raise PreconditionError("pi is not invariant under K")
    power = tuple(tuple(r) for r in K.rows)
    for m in range(1, m_max + 1):
        if m > 1:
            power = mat_mul(power, K.rows)
        d = dobrushin_rows(power)
        if d < 1:
            break
    else:
        raise NotCertified(f"Dobrushin coefficient of K^m is 1 for every m <= {m_max}")
    if m == 1:
        return ErgodicityCert(ONE, d, 1, pi)
    if d == 0:
        # K^n(x, .) = pi from n = m on, and tv <= 1 = C rho^(m-1) before that
        return ErgodicityCert(Fraction(2) ** (m - 1), Fraction(1, 2), m, pi)
    return ErgodicityCert(1 / d, root_upper_bound(d, m), m, pi)


def verify_cert(K: KernelMatrix, cert: ErgodicityCert, n_max: int = 50) -> list:
    """Exponents ``n <= n_max`` at which the certificate fails (empty if valid)."""
    pi = K.vector(cert.pi)
    power = identity_rows(K.size)
    failures = []
    for n in range(1, n_max + 1):
        power = mat_mul(power, K.rows)
        worst = max(row_tv(r, pi) for r in power)
        if worst > cert.bound(n):
            failures.append(n)
    return failures


def check_contraction(K: KernelMatrix, m1: FiniteMeasure, m2: FiniteMeasure, N: int,
                      cert: ErgodicityCert) -> bool:
    """``tv(m1 K^N, m2 K^N) <= C rho^N tv(m1, m2)``, exactly."""
    return tv(push(K, m1, N), push(K, m2, N)) <= cert.bound(N) * tv(m1, m2)


@dataclass(frozen=True)
class PerturbationCheck:
    distance: Fraction       # tv(init Kp^N, init K^N)
    distance_bound: Fraction
    limit_distance: Fraction  # tv(init Kp^N, pi)
    limit_bound: Fraction

    @property
    def holds(self) -> bool:
        return self.distance <= self.distance_bound and self.limit_distance <= self.limit_bound


def perturbation_terms(K: KernelMatrix, Kp: KernelMatrix, init: FiniteMeasure, N: int,
                       cert: ErgodicityCert, eps: Fraction) -> PerturbationCheck:
    if K.states != Kp.states:
        raise PreconditionError("perturbed kernel must live on the same states")
    worst = max((row_tv(a, b) for a, b in zip(K.rows, Kp.rows)), default=ZERO)
    if worst > eps:
        raise PreconditionError(f"rowwise distance {worst} exceeds eps = {eps}")
    approx = push(Kp, init, N)
    drift = eps * cert.C / (1 - cert.rho)
    return PerturbationCheck(tv(approx, push(K, init, N)), drift,
                             tv(approx, cert.pi), drift + cert.bound(N))


def check_perturbation(K: KernelMatrix, Kp: KernelMatrix, init: FiniteMeasure, N: int,
                       cert: ErgodicityCert, eps: Fraction) -> bool:
    """Both perturbation inequalities, exactly:
    ``tv(init Kp^N, init K^N) <= eps C / (1 - rho)`` and
    ``tv(init Kp^N, pi) <= eps C / (1 - rho) + C rho^N``."""
    return perturbation_terms(K, Kp, init, N, cert, eps).holds


def drift_truncation(n: int, eps: Fraction = Fraction(1, 20)) -> tuple[KernelMatrix, KernelMatrix]:
    """A chain on ``0..n`` that falls back to 0 at rate one half, and a
    perturbation that instead walks upward and sticks at the top.

    The first is certified with ``rho = 1/2``. The second only mixes once
    ``m >= n``, so no fixed ``m_max`` certifies the whole truncation family.
    """
    states = tuple(Fraction(i) for i in range(n + 1))
    half = Fraction(1, 2)
    rows, prows = [], []
    for i in range(n + 1):
        r = [ZERO] * (n + 1)
        r[0] += half
        r[min(i + 1, n)] += half
        rows.append(tuple(r))
        p = [ZERO] * (n + 1)
        p[min(i + 1, n)] = ONE
        prows.append(tuple(p))
    return KernelMatrix(states, tuple(rows)), KernelMatrix(states, tuple(prows))


# program-level certificates and the composite bound ------------------------------------

@dataclass
class SiteRecord:
    label: int
    analyses: list = field(default_factory=list)


def collect_site_analyses(t: Term, env: Mapping | None = None,
                          state_budget: int = DEFAULT_STATE_BUDGET) -> tuple[FiniteMeasure, dict]:
    """Evaluate ``t`` exactly, recording the chain analysis of every stat site
    under every environment it is reached with."""
    sites = stat_sites(t)
    by_node: dict[int, list] = {}
    for site in sites:
        by_node.setdefault(id(site.node), []).append(site.label)
    records = {site.label: SiteRecord(site.label) for site in sites}

    def hook(node, _env, analysis):
        for label in by_node.get(id(node), ()):
            records[label].analyses.append(analysis)

    ev = Evaluator(state_budget, on_stat=hook)
    mu = eval_prob(t, env, ev)
    return mu, records


def certify_program(t: Term, m_max: int = DEFAULT_M_MAX, env: Mapping | None = None,
                    state_budget: int = DEFAULT_STATE_BUDGET) -> dict[int, ErgodicityCert]:
    """One certificate per stat site, valid for every environment the site is
    evaluated under (largest ``C`` and ``rho`` over those environments)."""
    _, records = collect_site_analyses(t, env, state_budget)
    certs = {}
    for label, rec in records.items():
        if not rec.analyses:
            raise NotCertified("stat site is never evaluated", label)
        found = []
        for a in rec.analyses:
            if not isinstance(a.verdict, Unique):
                raise NotCertified(f"stat site has no unique limit ({a.verdict.reason.value})", label)
            try:
                found.append(certify(a.matrix, a.verdict.pi, m_max))
            except NotCertified as exc:
                raise NotCertified(str(exc), label) from None
        pi = found[0].pi if len(found) == 1 else None
        certs[label] = ErgodicityCert(max(c.C for c in found), max(c.rho for c in found),
                                      max(c.m for c in found), pi)
    return certs


@dataclass(frozen=True)
class SiteBound:
    label: int
    C: Fraction
    rho: Fraction
    N: int
    contribution: Fraction

    def to_json(self) -> dict:
        return {"label": self.label, "C": rational_to_json(self.C), "rho": rational_to_json(self.rho),
                "N": self.N, "contribution": rational_to_json(self.contribution)}


@dataclass(frozen=True)
class BoundReport:
    sites: tuple
    total: Fraction
    empirical_tv: Fraction
    sound: bool

    def to_json(self) -> dict:
        return {"sites": [s.to_json() for s in self.sites], "total": rational_to_json(self.total),
                "empirical_tv": rational_to_json(self.empirical_tv), "sound": self.sound}


def composite_bound(t: Term, plan: Mapping[int, int], certs: Mapping[int, ErgodicityCert]) -> tuple:
    """Per-site contributions of the structural bound, in label order.

    A site nested in the kernel body of enclosing sites is weighted by the
    product of their ``C / (1 - rho)`` factors; sites in initial terms and
    under ``let``/``case`` are simply added.
    """
    if contains(t, Norm, Score):
        raise PreconditionError("the composite bound needs a program without norm and score")
    out = []

    def walk(s: Term, weight: Fraction):
        if isinstance(s, Stat):
            label = len(out)
            if label not in certs:
                raise PreconditionError(f"no certificate for site {label}")
            if label not in plan:
                raise PreconditionError(f"no step count for site {label}")
            c, n = certs[label], plan[label]
            out.append(SiteBound(label, c.C, c.rho, n, weight * c.bound(n)))
            walk(s.init, weight)
            walk(s.body, weight * c.C / (1 - c.rho))
            return
        for _, child in children(s):
            walk(child, weight)

    walk(t, ONE)
    if len(out) != len(plan) or set(plan) != set(range(len(out))):
        raise PreconditionError("plan labels do not match the stat sites")
    return tuple(out)


def theorem4_bound(t: Term, plan: Mapping[int, int], certs: Mapping[int, ErgodicityCert],
                   exact: FiniteMeasure | None = None, evaluator: Evaluator | None = None,
                   cache: ApproxCache | None = None, env: Mapping | None = None) -> BoundReport:
    """Bound ``tv(eval(t), eval(approx_all(t, plan)))`` and compare it with
    the exact distance."""
    sites = composite_bound(t, plan, certs)
    total = sum((s.contribution for s in sites), ZERO)
    ev = evaluator or Evaluator()
    with deep_recursion():
        if exact is None:
            exact = eval_prob(t, env, ev)
        approx = eval_prob(approx_all(t, plan, cache), env, ev)
    empirical = tv(exact, approx)
    return BoundReport(sites, total, empirical, empirical <= total)


def plan_grid(n_sites: int, values: Iterable[int]) -> Iterator[dict]:
    values = list(values)
    for combo in itertools.product(values, repeat=n_sites):
        yield dict(enumerate(combo))


def soundness_sweep(t: Term, values: Iterable[int] = range(21), m_max: int = DEFAULT_M_MAX,
                    state_budget: int = DEFAULT_STATE_BUDGET) -> Iterator[tuple[dict, BoundReport]]:
    """Bound reports for every plan drawn from ``values`` at each site."""
    certs = certify_program(t, m_max, state_budget=state_budget)
    ev = Evaluator(state_budget)
    cache = ApproxCache()
    exact = eval_prob(t, None, ev)
    for plan in plan_grid(len(certs), values):
        yield plan, theorem4_bound(t, plan, certs, exact, ev, cache)
