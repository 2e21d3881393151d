"""Finite-support measures with exact rational weights.

Runtime values are plain immutable Python objects: reals are
:class:`fractions.Fraction`, the unit value is :data:`UNIT_V`, and pairs,
injections and first-class distributions are small frozen dataclasses. A
fixed structural order over values (:func:`value_key`) makes every support
listing deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Union

from .types import Ty, ty_to_json, ty_from_json


class UnitV:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "()"

    def __reduce__(self):
        return (UnitV, ())


UNIT_V = UnitV()


@dataclass(frozen=True)
class PairV:
    fst: "Value"
    snd: "Value"

    def __repr__(self) -> str:
        return f"({show_value(self.fst)}, {show_value(self.snd)})"


@dataclass(frozen=True)
class InjV:
    tag: int
    value: "Value"

    def __repr__(self) -> str:
        if self.value is UNIT_V and self.tag in (0, 1):
            return "tt" if self.tag == 0 else "ff"
        return f"inj{self.tag}({show_value(self.value)})"


@dataclass(frozen=True)
class DistV:
    measure: "FiniteMeasure"

    def __repr__(self) -> str:
        return f"dist{self.measure!r}"


Value = Union[Fraction, UnitV, PairV, InjV, DistV]


def show_value(v) -> str:
    """Compact human-readable form; rationals print as ``p/q``."""
    if isinstance(v, Fraction):
        return str(v)
    return repr(v)

TRUE = InjV(0, UNIT_V)
FALSE = InjV(1, UNIT_V)


def from_bool(b: bool) -> InjV:
    return TRUE if b else FALSE


def value_key(v: Value) -> tuple:
    """Sort key realizing the canonical total order on values."""
    if isinstance(v, Fraction):
        return (0, v)
    if v is UNIT_V:
        return (1,)
    if isinstance(v, PairV):
        return (2, value_key(v.fst), value_key(v.snd))
    if isinstance(v, InjV):
        return (3, v.tag, value_key(v.value))
    if isinstance(v, DistV):
        return (4, tuple((value_key(x), w) for x, w in v.measure.items()))
    if isinstance(v, int) and not isinstance(v, bool):
        return (0, Fraction(v))
    raise TypeError(f"not a value: {v!r}")


def as_value(v) -> Value:
    """Coerce Python ints to exact reals; leave other values untouched."""
    if isinstance(v, bool):
        return from_bool(v)
    if isinstance(v, int):
        return Fraction(v)
    return v


def as_weight(w) -> Fraction:
    if isinstance(w, float):
        raise TypeError("float weights are not allowed; use Fraction or 'p/q' strings")
    return Fraction(w)


class CarrierMismatch(ValueError):
    pass


class FiniteMeasure:
    """A finite measure with finite support and rational weights.

    Zero-weight points are dropped on construction, so two measures are equal
    exactly when their support maps agree. The optional ``carrier`` records the
    type the measure lives on; it is informational and ignored by equality.
    """

    __slots__ = ("_items", "_index", "carrier", "_hash")

    def __init__(self, weights: Mapping | Iterable = (), carrier: Ty | None = None):
        acc: dict = {}
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        for v, w in pairs:
            v = as_value(v)
            w = as_weight(w)
            if w < 0:
                raise ValueError(f"negative weight {w} at {v!r}")
            if w:
                acc[v] = acc.get(v, 0) + w
        self._items = tuple(sorted(acc.items(), key=lambda kv: value_key(kv[0])))
        self._index = dict(self._items)
        self.carrier = carrier
        self._hash = None

    @classmethod
    def dirac(cls, v: Value, carrier: Ty | None = None) -> "FiniteMeasure":
        return cls({as_value(v): 1}, carrier)

    @classmethod
    def null(cls, carrier: Ty | None = None) -> "FiniteMeasure":
        return cls((), carrier)

    @classmethod
    def bernoulli(cls, p) -> "FiniteMeasure":
        p = as_weight(p)
        return cls({TRUE: p, FALSE: 1 - p})

    def items(self) -> tuple:
        return self._items

    def support(self) -> list:
        return [v for v, _ in self._items]

    def __iter__(self) -> Iterator:
        return iter(self._index)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, v) -> Fraction:
        return self._index.get(as_value(v), Fraction(0))

    def __contains__(self, v) -> bool:
        return as_value(v) in self._index

    @property
    def mass(self) -> Fraction:
        return sum((w for _, w in self._items), Fraction(0))

    def is_probability(self) -> bool:
        return self.mass == 1

    def is_null(self) -> bool:
        return not self._items

    def with_carrier(self, carrier: Ty | None) -> "FiniteMeasure":
        out = FiniteMeasure.__new__(FiniteMeasure)
        out._items, out._index, out._hash = self._items, self._index, self._hash
        out.carrier = carrier
        return out

    def map(self, f: Callable[[Value], Value], carrier: Ty | None = None) -> "FiniteMeasure":
        """Pushforward along ``f``."""
        return FiniteMeasure(((f(v), w) for v, w in self._items), carrier)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteMeasure):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{show_value(v)}: {w}" for v, w in self._items)
        return "{" + body + "}"


def _check_carriers(a: Ty | None, b: Ty | None) -> Ty | None:
    if a is not None and b is not None and a != b:
        raise CarrierMismatch(f"carrier mismatch: {a} vs {b}")
    return a if a is not None else b


def tv(mu: FiniteMeasure, nu: FiniteMeasure) -> Fraction:
    """Total variation distance ``sup_A |mu(A) - nu(A)|``.

    For equal total masses this is half the L1 distance; for unequal masses
    the supremum is attained on one of the two sign sets.
    """
    _check_carriers(mu.carrier, nu.carrier)
    pos = Fraction(0)
    neg = Fraction(0)
    for v in set(mu._index) | set(nu._index):
        d = mu[v] - nu[v]
        if d > 0:
            pos += d
        else:
            neg -= d
    return max(pos, neg)


KernelFn = Callable[[Value], FiniteMeasure]


def bind(mu: FiniteMeasure, k: KernelFn, carrier: Ty | None = None) -> FiniteMeasure:
    """Integrate the kernel ``k`` against ``mu``: ``sum_v mu{v} * k(v)``."""
    acc: dict = {}
    out_carrier = carrier
    for v, w in mu.items():
        kv = k(v)
        out_carrier = _check_carriers(out_carrier, kv.carrier)
        for u, x in kv.items():
            acc[u] = acc.get(u, 0) + w * x
    return FiniteMeasure(acc, out_carrier)


def scale(mu: FiniteMeasure, c) -> FiniteMeasure:
    c = as_weight(c)
    if c < 0:
        raise ValueError("cannot scale a measure by a negative constant")
    return FiniteMeasure(((v, w * c) for v, w in mu.items()), mu.carrier)


def add(mu: FiniteMeasure, nu: FiniteMeasure) -> FiniteMeasure:
    carrier = _check_carriers(mu.carrier, nu.carrier)
    return FiniteMeasure(list(mu.items()) + list(nu.items()), carrier)


def normalize(mu: FiniteMeasure, carrier: Ty | None = None) -> FiniteMeasure:
    """Normalize onto the left summand of ``A + 1``; the null measure goes to
    the error point ``(1, ())``.

    Finite-support rational measures always have finite mass, so the infinite
    mass branch cannot be taken here.
    """
    total = mu.mass
    if total == 0:
        return FiniteMeasure.dirac(InjV(1, UNIT_V), carrier)
    assert total < float("inf")
    return FiniteMeasure(((InjV(0, v), w / total) for v, w in mu.items()), carrier)


# JSON -----------------------------------------------------------------------

def rational_to_json(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def rational_from_json(s: str) -> Fraction:
    return Fraction(s)


def value_to_json(v: Value):
    if isinstance(v, Fraction):
        return rational_to_json(v)
    if v is UNIT_V:
        return None
    if isinstance(v, PairV):
        return [value_to_json(v.fst), value_to_json(v.snd)]
    if isinstance(v, InjV):
        return {"tag": v.tag, "value": value_to_json(v.value)}
    if isinstance(v, DistV):
        return {"dist": [[value_to_json(x), rational_to_json(w)] for x, w in v.measure.items()]}
    raise TypeError(f"not a value: {v!r}")


def value_from_json(data) -> Value:
    if data is None:
        return UNIT_V
    if isinstance(data, str):
        return Fraction(data)
    if isinstance(data, list) and len(data) == 2:
        return PairV(value_from_json(data[0]), value_from_json(data[1]))
    if isinstance(data, dict) and set(data) == {"tag", "value"}:
        return InjV(int(data["tag"]), value_from_json(data["value"]))
    if isinstance(data, dict) and set(data) == {"dist"}:
        return DistV(FiniteMeasure((value_from_json(x), Fraction(w)) for x, w in data["dist"]))
    raise ValueError(f"bad value json: {data!r}")


def measure_to_json(mu: FiniteMeasure) -> dict:
    return {
        "carrier": ty_to_json(mu.carrier) if mu.carrier is not None else None,
        "support": [[value_to_json(v), rational_to_json(w)] for v, w in mu.items()],
    }


def measure_from_json(data: dict) -> FiniteMeasure:
    carrier = ty_from_json(data["carrier"]) if data.get("carrier") is not None else None
    return FiniteMeasure(((value_from_json(v), Fraction(w)) for v, w in data["support"]), carrier)
