"""Kind and type inference.

``kind_check`` reconstructs both the judgment (``d``, ``p1`` or ``p``) and the
type of a term. Injections ``(i, a)`` do not name their sum type, so sums are
inferred as rows: an injection contributes one known summand, a ``case``
closes the row at its branch count. Rows still open after inference are
closed at their largest known tag, and unconstrained summands default to
``unit``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .measure import DistV, FiniteMeasure, InjV, PairV, UNIT_V
from .terms import (Case, Const, DistConst, Inj, Let, Norm, Pair, PrimApp, Proj,
                    Return, Sample, Score, Stat, Term, UnitVal, Var, free_vars)
from .types import BOOL, REAL, UNIT, Kind, Prob, Product, Real, Sum, Ty, Unit, ty_to_json


class TypeCheckError(Exception):
    """A failed typing rule, with the path to the offending subterm."""

    def __init__(self, rule: str, path: Sequence[str], expected: str, found: str):
        self.rule = rule
        self.path = list(path)
        self.expected = expected
        self.found = found
        where = "/".join(self.path) or "<root>"
        super().__init__(f"[{rule}] at {where}: expected {expected}, found {found}")

    def to_json(self) -> dict:
        return {"rule": self.rule, "path": self.path, "expected": self.expected, "found": self.found}

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# inference-time types ---------------------------------------------------------

class _Meta:
    __slots__ = ("ref", "id")
    _counter = 0

    def __init__(self):
        _Meta._counter += 1
        self.id = _Meta._counter
        self.ref = None


class _Row:
    __slots__ = ("fields", "arity", "link")

    def __init__(self, fields: dict, arity: int | None):
        self.fields = fields
        self.arity = arity
        self.link = None


@dataclass(frozen=True, eq=False)
class _RowSum:
    row: _Row


class _Mismatch(Exception):
    pass


def _root(row: _Row) -> _Row:
    while row.link is not None:
        row = row.link
    return row


def _resolve(t):
    while isinstance(t, _Meta) and t.ref is not None:
        t = t.ref
    return t


def _lift(ty: Ty):
    """Concrete type to inference type."""
    if isinstance(ty, Prob):
        return Prob(_lift(ty.elem))
    if isinstance(ty, Product):
        return Product(_lift(ty.left), _lift(ty.right))
    if isinstance(ty, Sum):
        return _closed_sum([_lift(c) for c in ty.components])
    return ty


def _closed_sum(components) -> _RowSum:
    return _RowSum(_Row(dict(enumerate(components)), len(components)))


def _open_sum(tag: int, component) -> _RowSum:
    return _RowSum(_Row({tag: component}, None))


def _occurs(m: _Meta, t) -> bool:
    t = _resolve(t)
    if t is m:
        return True
    if isinstance(t, Prob):
        return _occurs(m, t.elem)
    if isinstance(t, Product):
        return _occurs(m, t.left) or _occurs(m, t.right)
    if isinstance(t, _RowSum):
        return any(_occurs(m, c) for c in _root(t.row).fields.values())
    return False


def _unify(a, b) -> None:
    a, b = _resolve(a), _resolve(b)
    if a is b:
        return
    if isinstance(a, _Meta):
        if _occurs(a, b):
            raise _Mismatch
        a.ref = b
        return
    if isinstance(b, _Meta):
        _unify(b, a)
        return
    if isinstance(a, Real) and isinstance(b, Real) or isinstance(a, Unit) and isinstance(b, Unit):
        return
    if isinstance(a, Prob) and isinstance(b, Prob):
        _unify(a.elem, b.elem)
        return
    if isinstance(a, Product) and isinstance(b, Product):
        _unify(a.left, b.left)
        _unify(a.right, b.right)
        return
    if isinstance(a, _RowSum) and isinstance(b, _RowSum):
        ra, rb = _root(a.row), _root(b.row)
        if ra is rb:
            return
        if ra.arity is not None and rb.arity is not None and ra.arity != rb.arity:
            raise _Mismatch
        arity = ra.arity if ra.arity is not None else rb.arity
        if arity is not None and any(k >= arity for k in list(ra.fields) + list(rb.fields)):
            raise _Mismatch
        rb.link = ra
        ra.arity = arity
        for k, v in rb.fields.items():
            if k in ra.fields:
                _unify(ra.fields[k], v)
            else:
                ra.fields[k] = v
        return
    raise _Mismatch


def _zonk(t) -> Ty:
    t = _resolve(t)
    if isinstance(t, _Meta):
        return UNIT
    if isinstance(t, Prob):
        return Prob(_zonk(t.elem))
    if isinstance(t, Product):
        return Product(_zonk(t.left), _zonk(t.right))
    if isinstance(t, _RowSum):
        row = _root(t.row)
        # an unconstrained injection defaults to at least two summands, so
        # tt/ff get the boolean type
        arity = row.arity if row.arity is not None else max(max(row.fields) + 1, 2)
        return Sum(tuple(_zonk(row.fields[i]) if i in row.fields else UNIT for i in range(arity)))
    return t


def _show(t) -> str:
    t = _resolve(t)
    if isinstance(t, _Meta):
        return f"?{t.id}"
    if isinstance(t, Prob):
        return f"P({_show(t.elem)})"
    if isinstance(t, Product):
        return f"({_show(t.left)} * {_show(t.right)})"
    if isinstance(t, _RowSum):
        row = _root(t.row)
        top = row.arity if row.arity is not None else max(row.fields) + 1
        parts = [_show(row.fields[i]) if i in row.fields else "_" for i in range(top)]
        return "(" + " + ".join(parts) + (")" if row.arity is not None else " + ...)")
    return str(t)


def _bool():
    return _closed_sum([UNIT, UNIT])


# checker ---------------------------------------------------------------------

def _value_type(v):
    if isinstance(v, PairV):
        return Product(_value_type(v.fst), _value_type(v.snd))
    if isinstance(v, InjV):
        return _open_sum(v.tag, _value_type(v.value))
    if isinstance(v, DistV):
        return Prob(_measure_type(v.measure))
    if v is UNIT_V:
        return UNIT
    return REAL


def _measure_type(mu: FiniteMeasure):
    ty = _Meta()
    for v in mu:
        _unify(ty, _value_type(v))
    return ty


class _Checker:
    def __init__(self):
        self.path: list[str] = []

    def fail(self, rule: str, expected: str, found: str):
        raise TypeCheckError(rule, self.path, expected, found)

    def unify(self, rule: str, expected, found):
        try:
            _unify(expected, found)
        except _Mismatch:
            self.fail(rule, _show(expected), _show(found))

    def sub(self, step: str, ctx: dict, t: Term):
        self.path.append(step)
        try:
            return self.infer(ctx, t)
        finally:
            self.path.pop()

    def det(self, rule: str, step: str, ctx: dict, t: Term):
        kind, ty = self.sub(step, ctx, t)
        if kind is not Kind.DET:
            self.path.append(step)
            self.fail(rule, "deterministic term", f"{kind.label} term")
        return ty

    def prob(self, rule: str, step: str, ctx: dict, t: Term, pure: bool = False):
        kind, ty = self.sub(step, ctx, t)
        if kind is Kind.DET or (pure and kind is not Kind.PURE):
            self.path.append(step)
            self.fail(rule, "purely probabilistic term" if pure else "probabilistic term",
                      f"{kind.label} term")
        return kind, ty

    def infer(self, ctx: dict, t: Term):
        if isinstance(t, Var):
            if t.name not in ctx:
                self.fail("var", "bound variable", f"unbound {t.name}")
            return Kind.DET, ctx[t.name]
        if isinstance(t, UnitVal):
            return Kind.DET, UNIT
        if isinstance(t, Const):
            return Kind.DET, REAL
        if isinstance(t, DistConst):
            if not t.measure.is_probability():
                self.fail("dist", "probability measure", f"mass {t.measure.mass}")
            try:
                return Kind.DET, Prob(_measure_type(t.measure))
            except _Mismatch:
                self.fail("dist", "support values of one type", repr(t.measure))
        if isinstance(t, Pair):
            return Kind.DET, Product(self.det("pair", "fst", ctx, t.fst), self.det("pair", "snd", ctx, t.snd))
        if isinstance(t, Inj):
            if t.tag < 0:
                self.fail("inj", "nonnegative tag", str(t.tag))
            return Kind.DET, _open_sum(t.tag, self.det("inj", "arg", ctx, t.arg))
        if isinstance(t, Proj):
            return Kind.DET, self.proj(ctx, t)
        if isinstance(t, PrimApp):
            return Kind.DET, self.prim(ctx, t)
        if isinstance(t, Case):
            return self.case(ctx, t)
        if isinstance(t, Sample):
            elem = _Meta()
            self.unify("sample", Prob(elem), self.det("sample", "dist", ctx, t.dist))
            return Kind.PURE, elem
        if isinstance(t, Return):
            return Kind.PURE, self.det("return", "arg", ctx, t.arg)
        if isinstance(t, Let):
            k0, a = self.prob("let", "bound", ctx, t.bound)
            k1, b = self.prob("let", "body", {**ctx, t.var: a}, t.body)
            return max(k0, k1), b
        if isinstance(t, Score):
            self.unify("score", REAL, self.det("score", "arg", ctx, t.arg))
            return Kind.PROB, UNIT
        if isinstance(t, Norm):
            _, a = self.prob("norm", "body", ctx, t.body)
            return Kind.PURE, _closed_sum([a, UNIT])
        if isinstance(t, Stat):
            _, a = self.prob("stat", "init", ctx, t.init, pure=True)
            _, b = self.prob("stat", "body", {**ctx, t.var: a}, t.body, pure=True)
            self.path.append("body")
            self.unify("stat", a, b)
            self.path.pop()
            return Kind.PURE, _closed_sum([a, UNIT])
        raise TypeError(f"not a term: {t!r}")

    def proj(self, ctx, t: Proj):
        ty = self.det("proj", "arg", ctx, t.arg)
        if t.which in ("fst", "snd"):
            left, right = _Meta(), _Meta()
            self.unify("proj", Product(left, right), ty)
            return left if t.which == "fst" else right
        if t.which == "last":
            ty = _resolve(ty)
            if isinstance(ty, _Meta):
                self.fail("proj", "known tuple type for last", _show(ty))
            while isinstance(ty, Product):
                ty = _resolve(ty.right)
            return ty
        self.fail("proj", "fst, snd or last", t.which)

    def prim(self, ctx, t: PrimApp):
        args = [self.det("prim", f"args[{i}]", ctx, a) for i, a in enumerate(t.args)]
        n = len(args)

        def arity(k):
            if n != k:
                self.fail("prim", f"{t.fn} with {k} argument(s)", f"{n}")

        def expect(i, ty):
            self.path.append(f"args[{i}]")
            self.unify("prim", ty, args[i])
            self.path.pop()

        fn = t.fn
        if fn in ("add", "sub", "mul", "min", "max", "accept", "accept_or_escape"):
            arity(2)
            expect(0, REAL)
            expect(1, REAL)
            return REAL
        if fn in ("neg", "abs"):
            arity(1)
            expect(0, REAL)
            return REAL
        if fn in ("lt", "le", "gt", "ge"):
            arity(2)
            expect(0, REAL)
            expect(1, REAL)
            return _bool()
        if fn == "eq":
            arity(2)
            expect(1, args[0])
            return _bool()
        if fn == "not":
            arity(1)
            expect(0, _bool())
            return _bool()
        if fn in ("and", "or"):
            arity(2)
            expect(0, _bool())
            expect(1, _bool())
            return _bool()
        if fn == "bern":
            arity(1)
            expect(0, REAL)
            return Prob(_bool())
        if fn == "dirac":
            arity(1)
            return Prob(args[0])
        if fn == "uniform":
            if n == 0:
                self.fail("prim", "uniform with at least one argument", "0")
            elem = _Meta()
            for i in range(n):
                expect(i, elem)
            return Prob(elem)
        if fn == "categorical":
            if n == 0 or n % 2:
                self.fail("prim", "categorical(value, weight, ...) with an even, positive number of arguments", str(n))
            elem = _Meta()
            for i in range(0, n, 2):
                expect(i, elem)
                expect(i + 1, REAL)
            return Prob(elem)
        self.fail("prim", "whitelisted primitive", fn)

    def case(self, ctx, t: Case):
        scrut = self.det("case", "scrutinee", ctx, t.scrutinee)
        if not t.branches:
            self.fail("case", "at least one branch", "none")
        fields = [_Meta() for _ in t.branches]
        self.path.append("scrutinee")
        self.unify("case", _closed_sum(fields), scrut)
        self.path.pop()
        out = _Meta()
        kinds = []
        for i, (b, a) in enumerate(zip(t.branches, fields)):
            kind, ty = self.sub(f"branches[{i}]", {**ctx, b.var: a}, b.body)
            self.path.append(f"branches[{i}]")
            self.unify("case", out, ty)
            self.path.pop()
            kinds.append(kind)
        if Kind.DET in kinds and any(k.probabilistic for k in kinds):
            self.fail("case", "branches of one kind (all deterministic or all probabilistic)",
                      ",".join(k.label for k in kinds))
        return max(kinds), out


def _lift_ctx(ctx) -> dict:
    if ctx is None:
        return {}
    items = ctx.items() if isinstance(ctx, dict) else ctx
    out = {}
    for name, ty in items:
        out.pop(name, None)
        out[name] = _lift(ty)
    return out


def kind_check(ctx, t: Term) -> tuple[Kind, Ty]:
    """Infer the strongest judgment and the type of ``t`` under ``ctx``.

    ``ctx`` is an ordered sequence (or dict) of ``(name, Ty)``; later entries
    shadow earlier ones. Raises :class:`TypeCheckError` if no rule applies.
    """
    kind, ty = _Checker().infer(_lift_ctx(ctx), t)
    return kind, _zonk(ty)


def check_kind(ctx, t: Term, expected: Kind) -> Ty:
    """Check ``t`` against a judgment, allowing ``p1`` terms where ``p`` is
    expected."""
    kind, ty = kind_check(ctx, t)
    ok = kind is expected or (expected is Kind.PROB and kind is Kind.PURE)
    if not ok:
        raise TypeCheckError("subsumption", [], f"{expected.label} term", f"{kind.label} term")
    return ty


def is_program(t: Term) -> bool:
    """A program is a closed purely probabilistic term."""
    if free_vars(t):
        return False
    try:
        kind, _ = kind_check([], t)
    except TypeCheckError:
        return False
    return kind is Kind.PURE


def program_type(t: Term) -> Ty:
    if free_vars(t):
        raise TypeCheckError("program", [], "closed term", "free variables " + ", ".join(sorted(free_vars(t))))
    kind, ty = kind_check([], t)
    if kind is not Kind.PURE:
        raise TypeCheckError("program", [], "p1 term", f"{kind.label} term")
    return ty


__all__ = ["TypeCheckError", "kind_check", "check_kind", "is_program", "program_type",
           "BOOL", "ty_to_json"]
