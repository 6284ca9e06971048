"""Assertion formulas and their meaning as finite predicates.

Formulas are positive: atoms, equations, finite conjunctions and
disjunctions, bounded indexed disjunctions ``or i < k . A`` and existential
quantification.  Entailment is decided by model checking over the finite
world of memories (or memory pairs, in the relational reading).

Concrete syntax::

    A ::= p(E, ...) | E = E | A && A | A || A | tt | ff
        | or i < k . A | exists x : sort . A | ( A )

``&&`` binds tighter than ``||``; binders extend as far right as possible.
In relational formulas ``e<1>`` and ``e<2>`` read ``e`` in the left or right
run, and the builtin atoms ``eqv1(e, c)``, ``eqv2(e, c)``, ``eqPub(e)``
abbreviate ``e<1> = c``, ``e<2> = c`` and ``e<1> = e<2>``.
"""

from __future__ import annotations

import functools
import itertools
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import Any, Union

from .errors import BudgetError, EvalError, NamespaceError, ParseError, SortError
from .syntax import (
    BOOL,
    BUILTIN_OPS,
    CELL,
    NAT,
    App,
    Const,
    Context,
    Expr,
    ExprParser,
    Memory,
    Meta,
    Model,
    Proj,
    Sort,
    Signature,
    Var,
    as_bool,
    coercible,
    enumerate_context,
    evaluate,
    free_vars,
    num,
    pretty_expr,
    sort_of,
    subst_expr,
)


@dataclass(frozen=True)
class Atom:
    name: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Eq:
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class And:
    parts: tuple[Formula, ...] = ()


@dataclass(frozen=True)
class Or:
    parts: tuple[Formula, ...] = ()


@dataclass(frozen=True)
class OrIdx:
    """``or index < bound . body``: the disjunction of ``body[k/index]``."""

    index: str
    bound: int
    body: Formula


@dataclass(frozen=True)
class Exists:
    var: str
    sort: Sort
    body: Formula


Formula = Union[Atom, Eq, And, Or, OrIdx, Exists]

TT: Formula = And(())
FF: Formula = Or(())

RELATIONAL_ATOMS = {"eqv1": 2, "eqv2": 2, "eqPub": 1}


def conj(*fs: Formula) -> Formula:
    return fs[0] if len(fs) == 1 else And(tuple(fs))


def disj(*fs: Formula) -> Formula:
    return fs[0] if len(fs) == 1 else Or(tuple(fs))


# ------------------------------------------------------------ predicate model


@dataclass(frozen=True)
class PredModel:
    """Which reading formulas get, and the extensions of user atoms."""

    relational: bool = False
    atoms: tuple[tuple[str, frozenset[tuple[Any, ...]]], ...] = ()

    @classmethod
    def for_model(cls, model: Model, relational: bool = False) -> PredModel:
        return cls(relational, model.atoms)

    def extension(self, name: str) -> frozenset[tuple[Any, ...]]:
        for n, ext in self.atoms:
            if n == name:
                return ext
        raise SortError(f"unknown atom {name!r}")

    def has_atom(self, name: str) -> bool:
        return any(n == name for n, _ in self.atoms)


Point = Union[Memory, tuple[Memory, Memory]]


@dataclass(frozen=True)
class Predicate:
    """A subset ``members`` of a finite, explicitly enumerated ``world``."""

    world: tuple[Point, ...]
    members: frozenset[Point]

    def __post_init__(self) -> None:
        if not self.members <= frozenset(self.world):
            raise ValueError("predicate members must lie inside the world")

    def __contains__(self, p: object) -> bool:
        return p in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Point]:
        return (p for p in self.world if p in self.members)

    def _same_world(self, other: Predicate) -> None:
        if self.world != other.world:
            raise ValueError("predicates over different worlds")

    def __and__(self, other: Predicate) -> Predicate:
        self._same_world(other)
        return Predicate(self.world, self.members & other.members)

    def __or__(self, other: Predicate) -> Predicate:
        self._same_world(other)
        return Predicate(self.world, self.members | other.members)

    def __le__(self, other: Predicate) -> bool:
        self._same_world(other)
        return self.members <= other.members

    def complement(self) -> Predicate:
        return Predicate(self.world, frozenset(self.world) - self.members)


def world(ctx: Context, model: Model, pm: PredModel, budget: int | None = None) -> tuple[Point, ...]:
    """Every point over ``ctx``: memories, or ordered pairs of memories."""
    budget = model.budget if budget is None else budget
    mems = tuple(enumerate_context(ctx, model, budget))
    if not pm.relational:
        return mems
    if len(mems) ** 2 > budget:
        raise BudgetError(f"relational world of size {len(mems) ** 2} exceeds budget {budget}")
    return tuple(itertools.product(mems, mems))


# ------------------------------------------------------------------ sorting


def check_formula(f: Formula, sig: Signature, ctx: Context, pm: PredModel) -> None:
    """Raise :class:`SortError` unless ``f`` is well-sorted under ``ctx``."""
    match f:
        case And(parts) | Or(parts):
            for p in parts:
                check_formula(p, sig, ctx, pm)
        case Eq(a, b):
            sa, sb = sort_of(a, sig, ctx), sort_of(b, sig, ctx)
            if not (coercible(sa, sb) or coercible(sb, sa)):
                raise SortError(
                    f"equation {pretty_expr(a)} = {pretty_expr(b)} mixes sorts {sa} and {sb}"
                )
            _check_projections(a, pm)
            _check_projections(b, pm)
        case Atom(name, args):
            if pm.relational and name in RELATIONAL_ATOMS:
                expected = RELATIONAL_ATOMS[name]
                if len(args) != expected:
                    raise SortError(f"{name} expects {expected} argument(s)")
            elif pm.has_atom(name):
                ext = pm.extension(name)
                arity = {len(t) for t in ext}
                if arity and len(args) not in arity:
                    raise SortError(f"atom {name} expects {arity.pop()} argument(s)")
            else:
                raise SortError(f"unknown atom {name!r}")
            for a in args:
                sort_of(a, sig, ctx)
                _check_projections(a, pm)
        case OrIdx(i, k, body):
            if k < 0:
                raise SortError("indexed disjunction with a negative bound")
            check_formula(body, sig, ctx.extend(i, NAT), pm)
        case Exists(x, s, body):
            check_formula(body, sig, ctx.extend(x, s), pm)
        case _:
            raise SortError(f"not a formula: {f!r}")


def _check_projections(e: Expr, pm: PredModel) -> None:
    match e:
        case Proj(inner, _):
            if not pm.relational:
                raise SortError(f"projection {pretty_expr(e)} in a unary formula")
            _check_projections(inner, pm)
        case App(_, args):
            for a in args:
                _check_projections(a, pm)
        case Meta(name):
            raise SortError(f"uninstantiated meta-index %{name}")


# --------------------------------------------------------------- denotation


def _equal(a: Any, b: Any) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return as_bool(a) == as_bool(b)
    return a == b


def _atom_value(v: Any) -> Any:
    return int(v) if isinstance(v, bool) else v


def _extend(pt: Point, name: str, value: Any, value2: Any = None, relational: bool = False) -> Point:
    if relational:
        left, right = pt
        return (left.set(name, value), right.set(name, value if value2 is None else value2))
    return pt.set(name, value)


def holds(f: Formula, pt: Point, model: Model, pm: PredModel) -> bool:
    """Whether the point ``pt`` satisfies ``f``."""
    rel = pm.relational
    match f:
        case And(parts):
            return all(holds(p, pt, model, pm) for p in parts)
        case Or(parts):
            return any(holds(p, pt, model, pm) for p in parts)
        case Eq(a, b):
            try:
                if rel:
                    return all(
                        _equal(evaluate(a, model, pt, s), evaluate(b, model, pt, s)) for s in (0, 1)
                    )
                return _equal(evaluate(a, model, pt), evaluate(b, model, pt))
            except EvalError:
                return False
        case Atom(name, args):
            try:
                return _atom_holds(name, args, pt, model, pm)
            except EvalError:
                return False
        case OrIdx(i, k, body):
            return any(holds(body, _extend(pt, i, z, relational=rel), model, pm) for z in range(k))
        case Exists(x, s, body):
            dom = model.domain(s)
            if rel:
                return any(
                    holds(body, _extend(pt, x, a, b, relational=True), model, pm)
                    for a in dom
                    for b in dom
                )
            return any(holds(body, _extend(pt, x, a), model, pm) for a in dom)
    raise SortError(f"not a formula: {f!r}")


def _atom_holds(name: str, args: tuple[Expr, ...], pt: Point, model: Model, pm: PredModel) -> bool:
    if pm.relational and name in RELATIONAL_ATOMS:
        match name:
            case "eqPub":
                return _equal(evaluate(args[0], model, pt, 0), evaluate(args[0], model, pt, 1))
            case "eqv1" | "eqv2":
                side = 0 if name == "eqv1" else 1
                return _equal(evaluate(args[0], model, pt, side), evaluate(args[1], model, pt, side))
    ext = pm.extension(name)
    sides: Sequence[int | None] = (0, 1) if pm.relational else (None,)
    return all(
        tuple(_atom_value(evaluate(a, model, pt, s)) for a in args) in ext for s in sides
    )


@functools.lru_cache(maxsize=4096)
def _denote_cached(f: Formula, ctx: Context, model: Model, pm: PredModel, budget: int) -> Predicate:
    pts = world(ctx, model, pm, budget)
    return Predicate(pts, frozenset(p for p in pts if holds(f, p, model, pm)))


def denote_formula(
    f: Formula, ctx: Context, model: Model, pm: PredModel, budget: int | None = None
) -> Predicate:
    check_formula(f, model.signature, ctx, pm)
    return _denote_cached(f, ctx, model, pm, model.budget if budget is None else budget)


def entails(
    ctx: Context,
    hyps: Iterable[Formula],
    goal: Formula,
    model: Model,
    pm: PredModel,
    budget: int | None = None,
) -> bool:
    """Semantic entailment: every point satisfying all ``hyps`` satisfies ``goal``."""
    return entailment_witness(ctx, hyps, goal, model, pm, budget) is None


def entailment_witness(
    ctx: Context,
    hyps: Iterable[Formula],
    goal: Formula,
    model: Model,
    pm: PredModel,
    budget: int | None = None,
) -> Point | None:
    """The first point satisfying ``hyps`` but not ``goal``, if any."""
    hyps = tuple(hyps)
    sig = model.signature
    for h in hyps:
        check_formula(h, sig, ctx, pm)
    check_formula(goal, sig, ctx, pm)
    for pt in world(ctx, model, pm, budget):
        if all(holds(h, pt, model, pm) for h in hyps) and not holds(goal, pt, model, pm):
            return pt
    return None


# ------------------------------------------------------------- substitution


def formula_free_vars(f: Formula) -> frozenset[str]:
    match f:
        case And(parts) | Or(parts):
            return frozenset().union(*(formula_free_vars(p) for p in parts))
        case Eq(a, b):
            return free_vars(a) | free_vars(b)
        case Atom(_, args):
            return frozenset().union(*(free_vars(a) for a in args))
        case OrIdx(i, _, body):
            return formula_free_vars(body) - {i}
        case Exists(x, _, body):
            return formula_free_vars(body) - {x}
    raise SortError(f"not a formula: {f!r}")


def _all_names(f: Formula) -> frozenset[str]:
    match f:
        case OrIdx(i, _, body) | Exists(i, _, body):
            return _all_names(body) | {i}
        case _:
            return formula_free_vars(f) if not isinstance(f, (And, Or)) else frozenset().union(
                *(_all_names(p) for p in f.parts)
            )


def _fresh(base: str, avoid: frozenset[str]) -> str:
    for k in itertools.count():
        cand = f"{base}_{k}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def substitute(f: Formula, v: str, e: Expr) -> Formula:
    """Capture-avoiding ``f[e/v]``."""
    if _has_meta(e):
        raise NamespaceError(f"cannot substitute the template expression {pretty_expr(e)}")
    return subst_formula(f, {v: e})


def subst_formula(f: Formula, mapping: Mapping[str, Expr]) -> Formula:
    if not mapping:
        return f
    match f:
        case And(parts):
            return And(tuple(subst_formula(p, mapping) for p in parts))
        case Or(parts):
            return Or(tuple(subst_formula(p, mapping) for p in parts))
        case Eq(a, b):
            return Eq(subst_expr(a, mapping), subst_expr(b, mapping))
        case Atom(name, args):
            return Atom(name, tuple(subst_expr(a, mapping) for a in args))
        case OrIdx(x, k, body) | Exists(x, k, body):
            inner = {n: e for n, e in mapping.items() if n != x}
            incoming = frozenset().union(*(free_vars(e) for e in inner.values()))
            if x in incoming:
                fresh = _fresh(x, incoming | _all_names(body) | frozenset(inner))
                body = subst_formula(body, {x: Var(fresh)})
                x = fresh
            body = subst_formula(body, inner)
            return OrIdx(x, k, body) if isinstance(f, OrIdx) else Exists(x, k, body)
    raise SortError(f"not a formula: {f!r}")


def _has_meta(e: Expr) -> bool:
    match e:
        case Meta():
            return True
        case App(_, args):
            return any(_has_meta(a) for a in args)
        case Proj(inner, _):
            return _has_meta(inner)
    return False


def instantiate(f: Formula, index: str, k: int) -> Formula:
    """Replace the meta-index ``%index`` by the numeral ``k`` throughout."""
    return subst_formula(f, {"%" + index: num(k)})


def formula_metas(f: Formula) -> frozenset[str]:
    def expr_metas(e: Expr) -> frozenset[str]:
        match e:
            case Meta(name):
                return frozenset({name})
            case App(_, args):
                return frozenset().union(*(expr_metas(a) for a in args))
            case Proj(inner, _):
                return expr_metas(inner)
        return frozenset()

    match f:
        case And(parts) | Or(parts):
            return frozenset().union(*(formula_metas(p) for p in parts))
        case Eq(a, b):
            return expr_metas(a) | expr_metas(b)
        case Atom(_, args):
            return frozenset().union(*(expr_metas(a) for a in args))
        case OrIdx(_, _, body) | Exists(_, _, body):
            return formula_metas(body)
    return frozenset()


# ------------------------------------------------------------ normalization


def normalize(f: Formula) -> Formula:
    """A canonical representative up to And/Or reordering and bound renaming."""
    return _normalize(f, 0)


def _normalize(f: Formula, depth: int) -> Formula:
    match f:
        case And(parts) | Or(parts):
            kind = type(f)
            flat: list[Formula] = []
            for p in parts:
                q = _normalize(p, depth)
                flat.extend(q.parts if isinstance(q, kind) else (q,))
            unique = sorted(set(flat), key=pretty_formula)
            if len(unique) == 1:
                return unique[0]
            return kind(tuple(unique))
        case OrIdx(x, k, body) | Exists(x, k, body):
            canon = f"_b{depth}"
            body = subst_formula(body, {x: Var(canon)}) if x != canon else body
            body = _normalize(body, depth + 1)
            return OrIdx(canon, k, body) if isinstance(f, OrIdx) else Exists(canon, k, body)
    return f


def same_formula(a: Formula, b: Formula) -> bool:
    return normalize(a) == normalize(b)


# ----------------------------------------------------------------- printing


def pretty_formula(f: Formula) -> str:
    match f:
        case And(()):
            return "tt"
        case Or(()):
            return "ff"
        case And(parts):
            return " && ".join(_wrap(p, (Or, OrIdx, Exists)) for p in parts)
        case Or(parts):
            return " || ".join(_wrap(p, (OrIdx, Exists)) for p in parts)
        case Eq(a, b):
            return f"{pretty_expr(a)} = {pretty_expr(b)}"
        case Atom(name, args):
            return f"{name}({', '.join(pretty_expr(a) for a in args)})"
        case OrIdx(i, k, body):
            return f"or {i} < {k} . {pretty_formula(body)}"
        case Exists(x, s, body):
            return f"exists {x} : {s} . {pretty_formula(body)}"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula, kinds: tuple[type, ...]) -> str:
    text = pretty_formula(f)
    if isinstance(f, kinds) and not (isinstance(f, (And, Or)) and not f.parts):
        return f"({text})"
    if isinstance(f, And) and len(f.parts) > 1:
        return f"({text})"
    return text


# ------------------------------------------------------------------ parsing


class FormulaParser(ExprParser):
    allow_logic = True

    def __init__(self, text: str, ops: Iterable[str] = BUILTIN_OPS) -> None:
        super().__init__(text)
        self.ops = frozenset(ops)

    def formula(self) -> Formula:
        parts = [self.conjunction()]
        while self.ts.accept("||") is not None:
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unit()]
        while self.ts.accept("&&") is not None:
            parts.append(self.unit())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unit(self) -> Formula:
        ts = self.ts
        tok = ts.peek
        if ts.accept("tt"):
            return TT
        if ts.accept("ff"):
            return FF
        if ts.accept("or"):
            i = ts.expect_kind("ident", "an index variable").text
            ts.expect("<")
            k = int(ts.expect_kind("int", "a numeric bound").text)
            ts.expect(".")
            return OrIdx(i, k, self.formula())
        if ts.accept("exists"):
            x = ts.expect_kind("ident", "a variable").text
            ts.expect(":")
            stok = ts.expect_kind("ident", "a sort")
            try:
                sort = Sort(stok.text)
            except ValueError:
                raise ParseError(f"unknown sort {stok.text!r}", stok.line, stok.col) from None
            ts.expect(".")
            return Exists(x, sort, self.formula())
        if tok.kind == "ident" and tok.text not in self.ops and ts.peek_at(1).text == "(":
            ts.next()
            return Atom(tok.text, self.arglist())
        if ts.at("("):
            saved = ts.pos
            try:
                return self.equation()
            except ParseError:
                ts.pos = saved
            ts.expect("(")
            f = self.formula()
            ts.expect(")")
            return f
        return self.equation()

    def equation(self) -> Formula:
        lhs = self.expr()
        self.ts.expect("=")
        return Eq(lhs, self.expr())


def parse_formula(
    text: str,
    sig: Signature | None = None,
    ctx: Context | None = None,
    pm: PredModel | None = None,
) -> Formula:
    """Parse a formula; sort-check it too when ``sig`` and ``ctx`` are given."""
    parser = FormulaParser(text, sig.ops if sig is not None else BUILTIN_OPS)
    f = parser.formula()
    parser.finish()
    if sig is not None and ctx is not None:
        check_formula(f, sig, ctx, pm or PredModel())
    return f


__all__ = [
    "Atom",
    "Eq",
    "And",
    "Or",
    "OrIdx",
    "Exists",
    "Formula",
    "TT",
    "FF",
    "PredModel",
    "Predicate",
    "world",
    "check_formula",
    "holds",
    "denote_formula",
    "entails",
    "entailment_witness",
    "substitute",
    "subst_formula",
    "instantiate",
    "normalize",
    "same_formula",
    "pretty_formula",
    "parse_formula",
    "conj",
    "disj",
    "BOOL",
    "CELL",
    "NAT",
    "Const",
]
