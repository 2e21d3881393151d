"""Types and judgment kinds of the language."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Ty:
    __slots__ = ()


@dataclass(frozen=True)
class Real(Ty):
    def __str__(self) -> str:
        return "real"


@dataclass(frozen=True)
class Unit(Ty):
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class Prob(Ty):
    elem: Ty

    def __str__(self) -> str:
        return f"P({self.elem})"


@dataclass(frozen=True)
class Product(Ty):
    left: Ty
    right: Ty

    def __str__(self) -> str:
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class Sum(Ty):
    components: tuple[Ty, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("sum type needs at least one summand")

    def __str__(self) -> str:
        if self == BOOL:
            return "bool"
        return "(" + " + ".join(str(c) for c in self.components) + ")"


REAL = Real()
UNIT = Unit()
BOOL = Sum((UNIT, UNIT))


def option(ty: Ty) -> Sum:
    """The ``A + 1`` type produced by ``norm`` and ``stat``."""
    return Sum((ty, UNIT))


class Kind(enum.IntEnum):
    """Judgment kinds, ordered by strength: a ``DET`` term is reported before
    anything weaker, ``PURE`` terms denote probability kernels, ``PROB`` terms
    may be unnormalized."""

    DET = 0
    PURE = 1
    PROB = 2

    @property
    def label(self) -> str:
        return {Kind.DET: "d", Kind.PURE: "p1", Kind.PROB: "p"}[self]

    @property
    def probabilistic(self) -> bool:
        return self is not Kind.DET


def ty_to_json(ty: Ty):
    if isinstance(ty, Real):
        return "real"
    if isinstance(ty, Unit):
        return "unit"
    if isinstance(ty, Prob):
        return {"prob": ty_to_json(ty.elem)}
    if isinstance(ty, Product):
        return {"product": [ty_to_json(ty.left), ty_to_json(ty.right)]}
    if isinstance(ty, Sum):
        return {"sum": [ty_to_json(c) for c in ty.components]}
    raise TypeError(f"not a type: {ty!r}")


def ty_from_json(data) -> Ty:
    if data == "real":
        return REAL
    if data == "unit":
        return UNIT
    if isinstance(data, dict) and len(data) == 1:
        (key, val), = data.items()
        if key == "prob":
            return Prob(ty_from_json(val))
        if key == "product":
            return Product(ty_from_json(val[0]), ty_from_json(val[1]))
        if key == "sum":
            return Sum(tuple(ty_from_json(c) for c in val))
    raise ValueError(f"bad type json: {data!r}")
