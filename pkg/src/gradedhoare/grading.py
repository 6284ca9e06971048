"""Preordered monoids used as grades, and the dataflow expression analysis.

Five instances are provided, each identified by the tag used in grade
literals:

========  ============================  ===========  ================
tag       carrier                       product      order
========  ============================  ===========  ================
``nat``   natural numbers               ``+``        numeric
``rat``   non-negative rationals        ``+``        numeric
``bits``  words over ``{T, F}``         concat       prefix
``mat``   ``n x n`` natural matrices    ``A;B``      pointwise
``max``   natural numbers               ``max``      numeric
========  ============================  ===========  ================

For matrices ``A ; B = B @ A + A + B`` with the zero matrix as unit.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import GradeError, ParseError
from .syntax import App, Const, Expr, Meta, Model, Proj, Var


@dataclass(frozen=True)
class Grade:
    tag: str
    value: Any

    def __str__(self) -> str:
        return f"{self.tag}:{_show(self.tag, self.value)}"


def _show(tag: str, value: Any) -> str:
    match tag:
        case "mat":
            return "[" + ",".join("[" + ",".join(map(str, row)) + "]" for row in value) + "]"
        case _:
            return str(value)


class Pomonoid(ABC):
    """A preordered monoid ``(M, <=, 1, *)`` with monotone multiplication."""

    tag: str

    @property
    @abstractmethod
    def unit(self) -> Grade: ...

    @abstractmethod
    def _mul(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def _leq(self, a: Any, b: Any) -> bool: ...

    @abstractmethod
    def _coerce(self, value: Any) -> Any:
        """Validate and canonicalize a raw carrier value."""

    def grade(self, value: Any) -> Grade:
        return Grade(self.tag, self._coerce(value))

    def owns(self, g: Grade) -> bool:
        if not isinstance(g, Grade) or g.tag != self.tag:
            return False
        try:
            self._coerce(g.value)
        except GradeError:
            return False
        return True

    def _check(self, *grades: Grade) -> None:
        for g in grades:
            if not isinstance(g, Grade) or g.tag != self.tag:
                raise GradeError(f"grade {g} does not belong to the {self.name} pomonoid")

    def mul(self, a: Grade, b: Grade) -> Grade:
        self._check(a, b)
        return Grade(self.tag, self._mul(a.value, b.value))

    def leq(self, a: Grade, b: Grade) -> bool:
        self._check(a, b)
        return self._leq(a.value, b.value)

    def pow(self, m: Grade, k: int) -> Grade:
        if k < 0:
            raise GradeError("negative exponent")
        result = self.unit
        for _ in range(k):
            result = self.mul(m, result)
        return result

    def prod(self, grades: list[Grade]) -> Grade:
        result = self.unit
        for g in grades:
            result = self.mul(result, g)
        return result

    @property
    def name(self) -> str:
        return type(self).__name__

    def __eq__(self, other: object) -> bool:
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self) -> int:
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))

    def __repr__(self) -> str:
        return f"{self.name}()"


def _nat(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
        raise GradeError(f"{value!r} is not a natural number")
    return int(value)


class NatCost(Pomonoid):
    tag = "nat"

    @property
    def unit(self) -> Grade:
        return Grade("nat", 0)

    def _mul(self, a: int, b: int) -> int:
        return a + b

    def _leq(self, a: int, b: int) -> bool:
        return a <= b

    def _coerce(self, value: Any) -> int:
        return _nat(value)


class NonNegRat(Pomonoid):
    tag = "rat"

    @property
    def unit(self) -> Grade:
        return Grade("rat", Fraction(0))

    def _mul(self, a: Fraction, b: Fraction) -> Fraction:
        return a + b

    def _leq(self, a: Fraction, b: Fraction) -> bool:
        return a <= b

    def _coerce(self, value: Any) -> Fraction:
        if isinstance(value, float):
            raise GradeError("rational grades must be exact, not floating point")
        try:
            q = Fraction(value)
        except (TypeError, ValueError, ZeroDivisionError):
            raise GradeError(f"{value!r} is not a rational number") from None
        if q < 0:
            raise GradeError(f"rational grade {q} is negative")
        return q


class BitString(Pomonoid):
    """Control-flow traces: words over ``T``/``F`` under the prefix order."""

    tag = "bits"

    @property
    def unit(self) -> Grade:
        return Grade("bits", "")

    def _mul(self, a: str, b: str) -> str:
        return a + b

    def _leq(self, a: str, b: str) -> bool:
        return b.startswith(a)

    def _coerce(self, value: Any) -> str:
        if not isinstance(value, str) or set(value) - {"T", "F"}:
            raise GradeError(f"{value!r} is not a word over {{T, F}}")
        return value


class MaxNat(Pomonoid):
    tag = "max"

    @property
    def unit(self) -> Grade:
        return Grade("max", 0)

    def _mul(self, a: int, b: int) -> int:
        return max(a, b)

    def _leq(self, a: int, b: int) -> bool:
        return a <= b

    def _coerce(self, value: Any) -> int:
        return _nat(value)


class NatMatrix(Pomonoid):
    """Square natural-number matrices of a fixed dimension.

    Entry ``(i, j)`` counts how often variable ``j`` flows into variable ``i``.
    """

    tag = "mat"

    def __init__(self, n: int) -> None:
        if n < 1:
            raise GradeError("matrix dimension must be positive")
        self.n = n

    def __repr__(self) -> str:
        return f"NatMatrix({self.n})"

    @property
    def unit(self) -> Grade:
        return Grade("mat", tuple((0,) * self.n for _ in range(self.n)))

    def _mul(self, a: Any, b: Any) -> Any:
        A = np.array(a, dtype=object)
        B = np.array(b, dtype=object)
        return _freeze(B.dot(A) + A + B)

    def _leq(self, a: Any, b: Any) -> bool:
        return all(x <= y for ra, rb in zip(a, b) for x, y in zip(ra, rb))

    def _coerce(self, value: Any) -> Any:
        rows = _freeze(np.array(value, dtype=object)) if not isinstance(value, tuple) else value
        if len(rows) != self.n or any(len(r) != self.n for r in rows):
            raise GradeError(f"expected a {self.n}x{self.n} matrix, got {value!r}")
        return tuple(tuple(_nat(x) for x in r) for r in rows)

    def _check(self, *grades: Grade) -> None:
        super()._check(*grades)
        for g in grades:
            if len(g.value) != self.n:
                raise GradeError(
                    f"matrix of dimension {len(g.value)} used with NatMatrix({self.n})"
                )


def _freeze(arr: np.ndarray) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(x) for x in row) for row in arr.tolist())


_SIMPLE = {"nat": NatCost, "rat": NonNegRat, "bits": BitString, "max": MaxNat}


def pomonoid_for(tag: str, dim: int | None = None) -> Pomonoid:
    if tag == "mat":
        if dim is None:
            raise GradeError("the matrix pomonoid needs a dimension")
        return NatMatrix(dim)
    try:
        return _SIMPLE[tag]()
    except KeyError:
        raise GradeError(f"unknown grade tag {tag!r}") from None


def parse_grade(text: str) -> Grade:
    """Parse a grade literal such as ``nat:3``, ``rat:1/20`` or ``mat:[[0,1],[0,0]]``."""
    text = text.strip()
    tag, sep, body = text.partition(":")
    if not sep:
        raise ParseError(f"grade literal {text!r} lacks a 'tag:' prefix")
    body = re.sub(r"\s+", "", body)
    match tag:
        case "nat" | "max":
            if not body.isdigit():
                raise ParseError(f"bad {tag} grade {text!r}")
            return Grade(tag, int(body))
        case "rat":
            try:
                return NonNegRat().grade(Fraction(body))
            except (ValueError, ZeroDivisionError, GradeError):
                raise ParseError(f"bad rational grade {text!r}") from None
        case "bits":
            if set(body) - {"T", "F"}:
                raise ParseError(f"bad trace grade {text!r}")
            return Grade("bits", body)
        case "mat":
            if not re.fullmatch(r"\[(\[\d+(,\d+)*\])(,\[\d+(,\d+)*\])*\]", body):
                raise ParseError(f"bad matrix grade {text!r}")
            rows = [tuple(int(x) for x in r.split(",")) for r in re.findall(r"\[([\d,]+)\]", body)]
            if any(len(r) != len(rows) for r in rows):
                raise ParseError(f"matrix grade {text!r} is not square")
            return Grade("mat", tuple(rows))
    raise ParseError(f"unknown grade tag {tag!r}")


def pomonoid_of(g: Grade) -> Pomonoid:
    return pomonoid_for(g.tag, len(g.value) if g.tag == "mat" else None)


def mul(M: Pomonoid, a: Grade, b: Grade) -> Grade:
    return M.mul(a, b)


def leq(M: Pomonoid, a: Grade, b: Grade) -> bool:
    return M.leq(a, b)


def pow(M: Pomonoid, m: Grade, k: int) -> Grade:
    return M.pow(m, k)


# ------------------------------------------------------------ dataflow counts


def count_vars(e: Expr, model: Model) -> tuple[int, ...]:
    """How many times each program variable (in ``var_order``) is read by ``e``."""
    counts = [0] * len(model.var_order)

    def walk(x: Expr) -> None:
        match x:
            case Var(name):
                counts[model.var_index(name)] += 1
            case App(_, args):
                for a in args:
                    walk(a)
            case Proj(inner, _):
                walk(inner)
            case Const() | Meta():
                pass

    walk(e)
    return tuple(counts)


def assign_grade(target: str, e: Expr, model: Model) -> Grade:
    """The rank-one matrix with row ``target`` holding ``count_vars(e)``."""
    i = model.var_index(target)
    basis = np.zeros(len(model.var_order), dtype=object)
    basis[i] = 1
    return Grade("mat", _freeze(np.outer(basis, np.array(count_vars(e, model), dtype=object))))
