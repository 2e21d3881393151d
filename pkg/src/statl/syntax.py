"""Surface syntax: an ML-flavoured concrete form for terms.

Grammar (informal)::

    expr   ::= let x = expr in expr
             | case expr of { (i, x) => expr | ... }
             | if expr then expr else expr
             | stat(expr, fn x => expr)
             | return app | sample app | score app | norm app
             | app
    app    ::= prim atom | atom
    atom   ::= x | n | n/m | -n/m | () | tt | ff | (expr) | (i, expr) | (expr, expr)
             | fst atom | snd atom | last atom | prim(expr, ...) | dist{ expr: n/m, ... }

A parenthesized pair whose first component is a bare natural literal is an
injection ``(i, e)``; the printer writes integer first components of genuine
pairs as ``n/1`` so the two never collide. ``tt``/``ff`` are ``(0, ())`` and
``(1, ())``; ``if`` is a two-branch ``case`` with ``_`` binders.
"""
from __future__ import annotations

import re
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .measure import DistV, FiniteMeasure, InjV, PairV, UNIT_V
from .terms import (KEYWORDS, PRIMITIVES, Branch, Case, Const, DistConst, Inj,
                    Let, Norm, Pair, PrimApp, Proj, Return, Sample, Score, Stat,
                    Term, UnitVal, Var)

FILE_EXTENSION = ".statl"
MAX_NESTING = 400


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<stdin>"

    @classmethod
    def from_file(cls, path) -> "SourceProgram":
        path = Path(path)
        return cls(path.read_bytes().decode("utf-8"), str(path))


class ParseError(Exception):
    """Diagnostic for malformed input; ``line`` and ``column`` are 1-based."""

    def __init__(self, line: int, column: int, message: str, expected=(), origin: str = "<stdin>"):
        self.line = line
        self.column = column
        self.message = message
        self.expected = list(expected)
        self.origin = origin
        exp = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{origin}:{line}:{column}: {message}{exp}")

    def to_json(self) -> dict:
        return {"origin": self.origin, "line": self.line, "column": self.column,
                "message": self.message, "expected": self.expected}


@contextmanager
def deep_recursion(limit: int = 8000):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, limit))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


# lexing ----------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "punct", "eof"
    text: str
    line: int
    column: int
    value: Fraction | None = None
    slash: bool = False


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>-?\d+(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>=>|[(),{}|=:])
""", re.VERBOSE)


def tokenize(text: str, origin: str = "<stdin>") -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(line, col, f"unexpected character {text[pos]!r}", origin=origin)
        chunk = m.group()
        kind = m.lastgroup
        if kind == "num":
            num, _, den = chunk.partition("/")
            if den and int(den) == 0:
                raise ParseError(line, col, "zero denominator in rational literal", origin=origin)
            tokens.append(Token("num", chunk, line, col, Fraction(int(num), int(den) if den else 1), bool(den)))
        elif kind in ("ident", "punct"):
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# parsing ---------------------------------------------------------------------

def _describe(tok: Token) -> str:
    return "end of input" if tok.kind == "eof" else repr(tok.text)


class _Parser:
    def __init__(self, tokens: list[Token], origin: str):
        self.tokens = tokens
        self.pos = 0
        self.origin = origin
        self.depth = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def error(self, message: str, expected=(), tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(tok.line, tok.column, message, expected, self.origin)

    def is_(self, text: str) -> bool:
        return self.tok.kind in ("punct", "ident") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.is_(text):
            self.error(f"unexpected {_describe(self.tok)}", [repr(text)])
        tok = self.tok
        self.pos += 1
        return tok

    def ident(self, allow_underscore: bool = True) -> str:
        tok = self.tok
        if tok.kind != "ident" or tok.text in KEYWORDS or tok.text in PRIMITIVES:
            self.error(f"unexpected {_describe(tok)}", ["identifier"])
        if tok.text == "_" and not allow_underscore:
            self.error("'_' cannot be used as a variable", ["identifier"])
        self.pos += 1
        return tok.text

    def nat(self) -> int:
        tok = self.tok
        if tok.kind != "num" or tok.slash or tok.value < 0:
            self.error(f"unexpected {_describe(tok)}", ["natural number tag"])
        self.pos += 1
        return int(tok.value)

    def program(self) -> Term:
        t = self.expr()
        if self.tok.kind != "eof":
            self.error(f"unexpected {_describe(self.tok)} after end of term", ["end of input"])
        return t

    def expr(self) -> Term:
        self.depth += 1
        if self.depth > MAX_NESTING:
            self.error(f"term nested more than {MAX_NESTING} levels deep")
        try:
            return self._expr()
        finally:
            self.depth -= 1

    def _expr(self) -> Term:
        tok = self.tok
        if tok.kind == "ident":
            kw = tok.text
            if kw == "let":
                self.pos += 1
                var = self.ident()
                self.expect("=")
                bound = self.expr()
                self.expect("in")
                return Let(var, bound, self.expr())
            if kw == "case":
                self.pos += 1
                scrut = self.expr()
                self.expect("of")
                return Case(scrut, self.branches())
            if kw == "if":
                self.pos += 1
                cond = self.expr()
                self.expect("then")
                then = self.expr()
                self.expect("else")
                other = self.expr()
                return Case(cond, (Branch("_", then), Branch("_", other)))
            if kw == "stat":
                self.pos += 1
                self.expect("(")
                init = self.expr()
                self.expect(",")
                self.expect("fn")
                var = self.ident()
                self.expect("=>")
                body = self.expr()
                self.expect(")")
                return Stat(init, var, body)
            if kw in ("return", "sample", "score", "norm"):
                self.pos += 1
                arg = self.app()
                return {"return": Return, "sample": Sample, "score": Score, "norm": Norm}[kw](arg)
        return self.app()

    def branches(self) -> tuple:
        self.expect("{")
        seen: dict[int, Branch] = {}
        while True:
            start = self.tok
            self.expect("(")
            tag = self.nat()
            self.expect(",")
            var = self.ident()
            self.expect(")")
            self.expect("=>")
            body = self.expr()
            if tag in seen:
                self.error(f"duplicate branch for tag {tag}", tok=start)
            seen[tag] = Branch(var, body)
            if self.is_("|"):
                self.pos += 1
                continue
            self.expect("}")
            break
        if sorted(seen) != list(range(len(seen))):
            self.error(f"case branches must cover tags 0..{len(seen) - 1} exactly, got {sorted(seen)}")
        return tuple(seen[i] for i in range(len(seen)))

    def app(self) -> Term:
        tok = self.tok
        if tok.kind == "ident" and tok.text in PRIMITIVES:
            self.pos += 1
            if self.is_("("):
                return PrimApp(tok.text, tuple(self.args()))
            return PrimApp(tok.text, (self.atom(),))
        return self.atom()

    def args(self) -> list:
        self.expect("(")
        if self.is_(")"):
            self.pos += 1
            return []
        out = [self.expr()]
        while self.is_(","):
            self.pos += 1
            out.append(self.expr())
        self.expect(")")
        return out

    def atom(self) -> Term:
        tok = self.tok
        if tok.kind == "num":
            self.pos += 1
            return Const(tok.value)
        if tok.kind == "punct" and tok.text == "(":
            return self.paren()
        if tok.kind == "ident":
            if tok.text == "tt":
                self.pos += 1
                return Inj(0, UnitVal())
            if tok.text == "ff":
                self.pos += 1
                return Inj(1, UnitVal())
            if tok.text in ("fst", "snd", "last"):
                self.pos += 1
                return Proj(tok.text, self.atom())
            if tok.text == "dist":
                self.pos += 1
                return self.dist()
            if tok.text in PRIMITIVES:
                self.pos += 1
                return PrimApp(tok.text, tuple(self.args()))
            if tok.text in KEYWORDS:
                # a probabilistic construct in argument position needs parentheses
                self.error(f"unexpected keyword {tok.text!r}", ["atom", "'('"])
            return Var(self.ident(allow_underscore=False))
        self.error(f"unexpected {_describe(tok)}",
                   ["identifier", "number", "'('", "'tt'", "'ff'", "primitive"])

    def paren(self) -> Term:
        self.expect("(")
        if self.is_(")"):
            self.pos += 1
            return UnitVal()
        tok = self.tok
        if tok.kind == "num" and not tok.slash and tok.value >= 0 and self.peek().text == "," and self.peek().kind == "punct":
            self.pos += 2
            arg = self.expr()
            self.expect(")")
            return Inj(int(tok.value), arg)
        first = self.expr()
        if self.is_(","):
            self.pos += 1
            second = self.expr()
            self.expect(")")
            return Pair(first, second)
        self.expect(")")
        return first

    def dist(self) -> DistConst:
        self.expect("{")
        entries = []
        while True:
            start = self.tok
            term = self.expr()
            try:
                value = term_to_value(term)
            except ValueError:
                self.error("distribution literal support must be closed literal values", tok=start)
            self.expect(":")
            wtok = self.tok
            if wtok.kind != "num" or wtok.value < 0:
                self.error(f"unexpected {_describe(wtok)}", ["nonnegative rational weight"])
            self.pos += 1
            entries.append((value, wtok.value))
            if self.is_(","):
                self.pos += 1
                continue
            self.expect("}")
            break
        mu = FiniteMeasure(entries)
        if mu.mass != 1:
            self.error(f"distribution literal weights sum to {mu.mass}, not 1", tok=start)
        return DistConst(mu)


def parse(src) -> Term:
    """Parse a :class:`SourceProgram` (or plain string) into a term.

    Raises :class:`ParseError` on any malformed input.
    """
    if isinstance(src, str):
        src = SourceProgram(src)
    try:
        with deep_recursion():
            return _Parser(tokenize(src.text, src.origin), src.origin).program()
    except RecursionError:
        raise ParseError(1, 1, "term nested too deeply", origin=src.origin) from None


def parse_file(path) -> Term:
    return parse(SourceProgram.from_file(path))


# values <-> literal terms -------------------------------------------------------

def value_to_term(v) -> Term:
    if isinstance(v, Fraction):
        return Const(v)
    if v is UNIT_V:
        return UnitVal()
    if isinstance(v, PairV):
        return Pair(value_to_term(v.fst), value_to_term(v.snd))
    if isinstance(v, InjV):
        return Inj(v.tag, value_to_term(v.value))
    if isinstance(v, DistV):
        return DistConst(v.measure)
    raise TypeError(f"not a value: {v!r}")


def term_to_value(t: Term):
    if isinstance(t, Const):
        return t.value
    if isinstance(t, UnitVal):
        return UNIT_V
    if isinstance(t, Pair):
        return PairV(term_to_value(t.fst), term_to_value(t.snd))
    if isinstance(t, Inj):
        return InjV(t.tag, term_to_value(t.arg))
    if isinstance(t, DistConst):
        return DistV(t.measure)
    raise ValueError(f"not a literal value: {t}")


# printing ----------------------------------------------------------------------

def _rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


_ATOMIC = (Var, UnitVal, Const, Pair, Inj, Proj, PrimApp, DistConst)


class _Printer:
    def __init__(self):
        self.parts: list[str] = []

    def atom(self, t: Term, ind: str) -> str:
        if isinstance(t, _ATOMIC):
            return self.expr(t, ind)
        return "(" + self.expr(t, ind) + ")"

    def expr(self, t: Term, ind: str = "") -> str:
        if isinstance(t, Var):
            return t.name
        if isinstance(t, UnitVal):
            return "()"
        if isinstance(t, Const):
            return _rational(t.value)
        if isinstance(t, Pair):
            first = self.expr(t.fst, ind)
            if isinstance(t.fst, Const) and t.fst.value >= 0 and t.fst.value.denominator == 1:
                first += "/1"
            return f"({first}, {self.expr(t.snd, ind)})"
        if isinstance(t, Inj):
            if isinstance(t.arg, UnitVal) and t.tag in (0, 1):
                return "tt" if t.tag == 0 else "ff"
            return f"({t.tag}, {self.expr(t.arg, ind)})"
        if isinstance(t, Proj):
            return f"{t.which}({self.expr(t.arg, ind)})"
        if isinstance(t, PrimApp):
            return f"{t.fn}(" + ", ".join(self.expr(a, ind) for a in t.args) + ")"
        if isinstance(t, DistConst):
            entries = ", ".join(f"{self.expr(value_to_term(v), ind)}: {_rational(w)}"
                                for v, w in t.measure.items())
            return "dist{" + entries + "}"
        if isinstance(t, Case):
            scrut = self.expr(t.scrutinee, ind)
            if len(t.branches) == 2 and all(b.var == "_" for b in t.branches):
                a, b = t.branches
                return f"if {scrut} then {self.expr(a.body, ind)} else {self.expr(b.body, ind)}"
            arms = " | ".join(f"({i}, {b.var}) => {self.expr(b.body, ind + '  ')}"
                              for i, b in enumerate(t.branches))
            return f"case {scrut} of {{{arms}}}"
        if isinstance(t, Sample):
            return f"sample({self.expr(t.dist, ind)})"
        if isinstance(t, Return):
            return "return " + self.atom(t.arg, ind)
        if isinstance(t, Score):
            return f"score({self.expr(t.arg, ind)})"
        if isinstance(t, Norm):
            return f"norm({self.expr(t.body, ind + '  ')})"
        if isinstance(t, Stat):
            inner = ind + "  "
            return f"stat({self.expr(t.init, inner)}, fn {t.var} => {self.expr(t.body, inner)})"
        if isinstance(t, Let):
            bound = self.expr(t.bound, ind + "  ")
            return f"let {t.var} = {bound} in\n{ind}{self.expr(t.body, ind)}"
        raise TypeError(f"not a term: {t!r}")


def pretty(t: Term) -> str:
    """Canonical surface form of ``t``; ``parse(pretty(t)) == t``."""
    with deep_recursion():
        return _Printer().expr(t)
