"""Many-sorted signatures, expressions and programs of the loop language.

The concrete syntax is small::

    P ::= skip | v := E | v := #(E) | do f | v <- p(E, ...)
        | if E { P } else { P } | loop E { P } | { P } | P ; P

``v := #(E)`` is sugar for the dataflow procedure call ``v <- assign(E)``.
Expressions use the binary operators ``+ - * max min =? <?`` plus the
function-style builtins listed in :data:`BUILTIN_OPS`.

Cell values live in a finite integer interval declared by a :class:`Model`;
arithmetic either wraps around that interval or raises, per the model's
overflow mode.
"""

from __future__ import annotations

import configparser
import enum
import itertools
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Union

from .errors import BudgetError, EvalError, ParseError, SortError


class Sort(str, enum.Enum):
    BOOL = "bool"
    NAT = "nat"
    CELL = "cell"

    def __str__(self) -> str:
        return self.value


BOOL, NAT, CELL = Sort.BOOL, Sort.NAT, Sort.CELL

# name -> (argument sorts, result sort)
BUILTIN_OPS: dict[str, tuple[tuple[Sort, ...], Sort]] = {
    "+": ((CELL, CELL), CELL),
    "-": ((CELL, CELL), CELL),
    "*": ((CELL, CELL), CELL),
    "max": ((CELL, CELL), CELL),
    "min": ((CELL, CELL), CELL),
    "=?": ((CELL, CELL), BOOL),
    "<?": ((CELL, CELL), BOOL),
    "not": ((BOOL,), BOOL),
    "c2b": ((CELL,), BOOL),
    "b2c": ((BOOL,), CELL),
    "n2c": ((NAT,), CELL),
    "c2n": ((CELL,), NAT),
}

INFIX_OPS = ("+", "-", "*", "=?", "<?")
WORD_INFIX_OPS = ("max", "min")

# Implicit conversions accepted where a sort is expected: (actual, expected).
_COERCIONS = {(NAT, CELL), (CELL, NAT), (CELL, BOOL)}


def coercible(actual: Sort, expected: Sort) -> bool:
    return actual == expected or (actual, expected) in _COERCIONS


@dataclass(frozen=True)
class Signature:
    sorts: frozenset[Sort] = frozenset(Sort)
    ops: Mapping[str, tuple[tuple[Sort, ...], Sort]] = field(
        default_factory=lambda: dict(BUILTIN_OPS)
    )

    def __post_init__(self) -> None:
        missing = set(Sort) - set(self.sorts)
        if missing:
            raise SortError(f"signature lacks builtin sorts {sorted(missing)}")

    def __hash__(self) -> int:
        return hash((self.sorts, tuple(sorted(self.ops))))

    @classmethod
    def with_ops(cls, names: Iterable[str]) -> Signature:
        names = list(names)
        unknown = [n for n in names if n not in BUILTIN_OPS]
        if unknown:
            raise SortError(f"unknown builtin operators: {', '.join(unknown)}")
        return cls(ops={n: BUILTIN_OPS[n] for n in names})

    def arity(self, op: str) -> tuple[tuple[Sort, ...], Sort]:
        try:
            return self.ops[op]
        except KeyError:
            raise SortError(f"unknown operator {op!r}") from None


@dataclass(frozen=True)
class Context:
    """An ordered list of distinct (variable, sort) bindings."""

    bindings: tuple[tuple[str, Sort], ...] = ()

    def __post_init__(self) -> None:
        names = [n for n, _ in self.bindings]
        if len(names) != len(set(names)):
            raise SortError(f"duplicate variables in context: {names}")

    @classmethod
    def program(cls, variables: Iterable[str]) -> Context:
        return cls(tuple((v, CELL) for v in variables))

    def lookup(self, name: str) -> Sort:
        for n, s in reversed(self.bindings):
            if n == name:
                return s
        raise SortError(f"unbound variable {name!r}")

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.bindings)

    def extend(self, name: str, sort: Sort) -> Context:
        """Bind ``name``, shadowing any earlier binding of the same name."""
        kept = tuple(b for b in self.bindings if b[0] != name)
        return Context(kept + ((name, sort),))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.bindings)


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    """A literal: ``true``, ``false`` or a decimal numeral."""

    name: str

    @property
    def value(self) -> bool | int:
        if self.name == "true":
            return True
        if self.name == "false":
            return False
        return int(self.name)


@dataclass(frozen=True)
class App:
    op: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Proj:
    """``e<1>`` / ``e<2>``: evaluate ``e`` in one component of a memory pair."""

    expr: Expr
    side: int


@dataclass(frozen=True)
class Meta:
    """A loop-family index placeholder such as ``%z``."""

    name: str


Expr = Union[Var, Const, App, Proj, Meta]

TRUE = Const("true")
FALSE = Const("false")


def num(k: int) -> Const:
    if k < 0:
        raise ValueError("numerals are non-negative")
    return Const(str(k))


def free_vars(e: Expr) -> frozenset[str]:
    match e:
        case Var(name):
            return frozenset({name})
        case App(_, args):
            return frozenset().union(*(free_vars(a) for a in args))
        case Proj(inner, _):
            return free_vars(inner)
        case _:
            return frozenset()


def subst_expr(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables according to ``mapping``; meta-indices use ``"%z"`` keys."""
    match e:
        case Var(name) if name in mapping:
            return mapping[name]
        case Meta(name) if "%" + name in mapping:
            return mapping["%" + name]
        case App(op, args):
            return App(op, tuple(subst_expr(a, mapping) for a in args))
        case Proj(inner, side):
            return Proj(subst_expr(inner, mapping), side)
        case _:
            return e


# ------------------------------------------------------------------- programs


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Seq:
    first: Program
    second: Program


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Command:
    name: str


@dataclass(frozen=True)
class Procedure:
    var: str
    name: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Program
    orelse: Program


@dataclass(frozen=True)
class Loop:
    count: Expr
    body: Program


Program = Union[Skip, Seq, Assign, Command, Procedure, If, Loop]


def seq(*progs: Program) -> Program:
    """Right-nested sequential composition; ``seq()`` is ``skip``."""
    if not progs:
        return Skip()
    result = progs[-1]
    for p in reversed(progs[:-1]):
        result = Seq(p, result)
    return result


def iter_subprograms(p: Program) -> Iterator[Program]:
    yield p
    match p:
        case Seq(a, b):
            yield from iter_subprograms(a)
            yield from iter_subprograms(b)
        case If(_, a, b):
            yield from iter_subprograms(a)
            yield from iter_subprograms(b)
        case Loop(_, body):
            yield from iter_subprograms(body)


# ---------------------------------------------------------------------- model


@dataclass(frozen=True)
class Model:
    """A finite interpretation of the signature plus program variables.

    ``levels`` (variable security levels) and ``distributions`` (named
    finite samplers, ``name -> "bern:1/4"`` etc.) are consumed by the
    backends; ``atoms`` holds the extensions of user predicates.
    """

    var_order: tuple[str, ...]
    cell_domain: tuple[int, ...] = (0, 1)
    nat_bound: int = 4
    overflow: str = "wrap"
    ops: frozenset[str] = frozenset(BUILTIN_OPS)
    levels: tuple[tuple[str, int], ...] = ()
    distributions: tuple[tuple[str, str], ...] = ()
    atoms: tuple[tuple[str, frozenset[tuple[Any, ...]]], ...] = ()
    budget: int = 1_000_000

    def __post_init__(self) -> None:
        if len(set(self.var_order)) != len(self.var_order):
            raise SortError("duplicate program variables")
        if not self.cell_domain:
            raise SortError("empty cell domain")
        dom = self.cell_domain
        if list(dom) != list(range(dom[0], dom[-1] + 1)):
            raise SortError("cell domain must be a contiguous integer interval")
        if self.overflow not in ("wrap", "reject"):
            raise SortError(f"unknown overflow mode {self.overflow!r}")
        if self.nat_bound < 0:
            raise SortError("nat_bound must be non-negative")

    @classmethod
    def make(
        cls,
        variables: Iterable[str],
        lo: int = 0,
        hi: int = 1,
        **kwargs: Any,
    ) -> Model:
        kwargs.setdefault("ops", frozenset(BUILTIN_OPS))
        if "levels" in kwargs and isinstance(kwargs["levels"], Mapping):
            kwargs["levels"] = tuple(kwargs["levels"].items())
        if "distributions" in kwargs and isinstance(kwargs["distributions"], Mapping):
            kwargs["distributions"] = tuple(kwargs["distributions"].items())
        if "atoms" in kwargs and isinstance(kwargs["atoms"], Mapping):
            kwargs["atoms"] = tuple(
                (k, frozenset(map(tuple, v))) for k, v in kwargs["atoms"].items()
            )
        return cls(tuple(variables), tuple(range(lo, hi + 1)), **kwargs)

    @property
    def signature(self) -> Signature:
        return Signature.with_ops(sorted(self.ops))

    @property
    def context(self) -> Context:
        return Context.program(self.var_order)

    @property
    def lo(self) -> int:
        return self.cell_domain[0]

    @property
    def hi(self) -> int:
        return self.cell_domain[-1]

    def level_of(self, var: str) -> int:
        return dict(self.levels).get(var, 0)

    def domain(self, sort: Sort) -> tuple[Any, ...]:
        if sort == CELL:
            return self.cell_domain
        if sort == NAT:
            return tuple(range(self.nat_bound + 1))
        return (False, True)

    def to_cell(self, v: int) -> int:
        if isinstance(v, bool):
            raise EvalError("boolean used where a cell value is required")
        if self.lo <= v <= self.hi:
            return v
        if self.overflow == "reject":
            raise EvalError(f"value {v} outside cell domain [{self.lo}, {self.hi}]")
        size = self.hi - self.lo + 1
        return self.lo + (v - self.lo) % size

    def var_index(self, var: str) -> int:
        try:
            return self.var_order.index(var)
        except ValueError:
            raise SortError(f"{var!r} is not a program variable") from None


class Memory(Mapping[str, Any]):
    """An immutable assignment of values to variables, ordered by insertion."""

    __slots__ = ("_values", "_hash")

    def __init__(self, values: Mapping[str, Any] | Iterable[tuple[str, Any]] = ()) -> None:
        self._values = dict(values)
        self._hash: int | None = None

    def __getitem__(self, key: str) -> Any:
        try:
            return self._values[key]
        except KeyError:
            raise SortError(f"unbound variable {key!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._values.items()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Memory):
            return NotImplemented
        return self._values == other._values

    def __lt__(self, other: Memory) -> bool:
        return tuple(self._values.values()) < tuple(other._values.values())

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={_show_value(v)}" for k, v in self._values.items())
        return "{" + inner + "}"

    def set(self, var: str, value: Any) -> Memory:
        new = dict(self._values)
        new[var] = value
        return Memory(new)

    def without(self, *names: str) -> Memory:
        return Memory((k, v) for k, v in self._values.items() if k not in names)


def _show_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def enumerate_memories(model: Model, budget: int | None = None) -> Iterator[Memory]:
    """Every memory over ``model.var_order``, lexicographically ordered."""
    return enumerate_context(model.context, model, budget)


def enumerate_context(
    ctx: Context, model: Model, budget: int | None = None
) -> Iterator[Memory]:
    budget = model.budget if budget is None else budget
    domains = [model.domain(s) for _, s in ctx.bindings]
    size = 1
    for d in domains:
        size *= len(d)
    if size > budget:
        raise BudgetError(f"world of size {size} exceeds budget {budget}")
    names = ctx.names
    for values in itertools.product(*domains):
        yield Memory(zip(names, values))


# ------------------------------------------------------------------ sorting


def sort_of(e: Expr, sig: Signature, ctx: Context) -> Sort:
    """The inferred sort of ``e``; numerals are ``nat``."""
    match e:
        case Var(name):
            return ctx.lookup(name)
        case Const(name):
            if name in ("true", "false"):
                return BOOL
            if name.isdigit():
                return NAT
            raise SortError(f"unknown constant {name!r}")
        case Meta(_):
            return NAT
        case Proj(inner, side):
            if side not in (1, 2):
                raise SortError(f"bad projection <{side}>")
            return sort_of(inner, sig, ctx)
        case App(op, args):
            arg_sorts, result = sig.arity(op)
            if len(args) != len(arg_sorts):
                raise SortError(
                    f"{op} expects {len(arg_sorts)} argument(s), got {len(args)} "
                    f"in {pretty_expr(e)}"
                )
            for a, s in zip(args, arg_sorts):
                check_expr(a, s, sig, ctx)
            return result
    raise SortError(f"not an expression: {e!r}")


def check_expr(e: Expr, expected: Sort, sig: Signature, ctx: Context) -> None:
    actual = sort_of(e, sig, ctx)
    if not coercible(actual, expected):
        raise SortError(
            f"{pretty_expr(e)} has sort {actual}, expected {expected}"
        )


def check_program(p: Program, sig: Signature, variables: Iterable[str]) -> None:
    variables = tuple(variables)
    ctx = Context.program(variables)
    for node in iter_subprograms(p):
        match node:
            case Assign(v, e):
                if v not in variables:
                    raise SortError(f"assignment to undeclared variable {v!r}")
                _no_logic(e)
                check_expr(e, CELL, sig, ctx)
            case Procedure(v, _, args):
                if v not in variables:
                    raise SortError(f"procedure result bound to undeclared variable {v!r}")
                for a in args:
                    _no_logic(a)
                    check_expr(a, CELL, sig, ctx)
            case If(c, _, _):
                _no_logic(c)
                check_expr(c, BOOL, sig, ctx)
            case Loop(c, _):
                _no_logic(c)
                check_expr(c, NAT, sig, ctx)


def _no_logic(e: Expr) -> None:
    match e:
        case Proj() | Meta():
            raise SortError(f"{pretty_expr(e)} is not a program expression")
        case App(_, args):
            for a in args:
                _no_logic(a)


# ----------------------------------------------------------------- evaluation


def as_bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    return v != 0


def as_nat(v: Any) -> int:
    if isinstance(v, bool) or v < 0:
        raise EvalError(f"{_show_value(v)} is not a natural number")
    return v


def _op_impl(op: str, model: Model) -> Callable[..., Any]:
    cell = model.to_cell
    table: dict[str, Callable[..., Any]] = {
        "+": lambda a, b: cell(a + b),
        "-": lambda a, b: cell(a - b),
        "*": lambda a, b: cell(a * b),
        "max": lambda a, b: cell(max(a, b)),
        "min": lambda a, b: cell(min(a, b)),
        "=?": lambda a, b: a == b,
        "<?": lambda a, b: a < b,
        "not": lambda a: not as_bool(a),
        "c2b": lambda a: as_bool(a),
        "b2c": lambda a: cell(1 if a else 0),
        "n2c": lambda a: cell(a),
        "c2n": lambda a: as_nat(a),
    }
    return table[op]


def evaluate(e: Expr, model: Model, env: Any, side: int | None = None) -> Any:
    """Evaluate ``e`` against a memory, or one component of a memory pair.

    With ``side=None`` the environment is a single :class:`Memory`; otherwise
    it is a pair and variables read component ``side`` (0 or 1), while
    ``Proj`` nodes switch component explicitly.
    """
    match e:
        case Var(name):
            return env[name] if side is None else env[side][name]
        case Const():
            return e.value
        case App(op, args):
            if op not in model.ops:
                raise SortError(f"operator {op!r} not provided by the model")
            vals = [evaluate(a, model, env, side) for a in args]
            return _op_impl(op, model)(*vals)
        case Proj(inner, k):
            if side is None:
                raise SortError("projection used in a unary (non-relational) context")
            return evaluate(inner, model, env, k - 1)
        case Meta(name):
            raise EvalError(f"unbound meta-index %{name}")
    raise SortError(f"not an expression: {e!r}")


def eval_expr(e: Expr, model: Model, mem: Memory) -> Any:
    return evaluate(e, model, mem)


# -------------------------------------------------------------------- lexing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<proj><[12]>)
  | (?P<op>:=|<-|=\?|<\?|&&|\|\||[(){},;+\-*=.:\#@\[\]<])
  | (?P<meta>%[A-Za-z_]\w*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def peek_at(self, offset: int) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, *texts: str) -> bool:
        tok = self.peek
        return tok.kind in ("op", "ident", "proj") and tok.text in texts

    def accept(self, *texts: str) -> Token | None:
        if self.at(*texts):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        tok = self.peek
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.peek
        if tok.kind != kind:
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.next()

    def error(self, message: str) -> ParseError:
        tok = self.peek
        return ParseError(message, tok.line, tok.col)


KEYWORDS = {"skip", "do", "if", "else", "loop", "true", "false", "tt", "ff", "or", "exists"}


class ExprParser:
    """Recursive-descent parser for expressions; subclassed for formulas."""

    allow_logic = False

    def __init__(self, text: str) -> None:
        self.ts = TokenStream(text)

    def finish(self) -> None:
        if self.ts.peek.kind != "eof":
            raise self.ts.error(f"unexpected {self.ts.peek.text!r}")

    def expr(self) -> Expr:
        left = self.minmax()
        while (tok := self.ts.accept("=?", "<?")) is not None:
            left = App(tok.text, (left, self.minmax()))
        return left

    def minmax(self) -> Expr:
        left = self.additive()
        while self.ts.peek.kind == "ident" and self.ts.peek.text in WORD_INFIX_OPS:
            if self.ts.peek_at(1).text == "(":
                break
            op = self.ts.next().text
            left = App(op, (left, self.additive()))
        return left

    def additive(self) -> Expr:
        left = self.term()
        while (tok := self.ts.accept("+", "-")) is not None:
            left = App(tok.text, (left, self.term()))
        return left

    def term(self) -> Expr:
        left = self.postfix()
        while self.ts.accept("*") is not None:
            left = App("*", (left, self.postfix()))
        return left

    def postfix(self) -> Expr:
        e = self.primary()
        while self.ts.peek.kind == "proj":
            tok = self.ts.next()
            if not self.allow_logic:
                raise ParseError("projections are only allowed in assertions", tok.line, tok.col)
            e = Proj(e, int(tok.text[1]))
        return e

    def primary(self) -> Expr:
        tok = self.ts.peek
        if tok.kind == "int":
            self.ts.next()
            return Const(str(int(tok.text)))
        if tok.kind == "meta":
            if not self.allow_logic:
                raise self.ts.error("meta-indices are only allowed in assertions")
            self.ts.next()
            return Meta(tok.text[1:])
        if self.ts.accept("(") is not None:
            e = self.expr()
            self.ts.expect(")")
            return e
        if tok.kind == "ident":
            if tok.text in ("true", "false"):
                self.ts.next()
                return Const(tok.text)
            if tok.text in KEYWORDS:
                raise self.ts.error(f"unexpected keyword {tok.text!r}")
            self.ts.next()
            if self.ts.at("("):
                return App(tok.text, self.arglist())
            return Var(tok.text)
        raise self.ts.error(f"expected an expression, found {tok.text or 'end of input'!r}")

    def arglist(self) -> tuple[Expr, ...]:
        self.ts.expect("(")
        args: list[Expr] = []
        if not self.ts.at(")"):
            args.append(self.expr())
            while self.ts.accept(",") is not None:
                args.append(self.expr())
        self.ts.expect(")")
        return tuple(args)


class ProgramParser(ExprParser):
    def program(self) -> Program:
        first = self.statement()
        if self.ts.accept(";") is not None:
            return Seq(first, self.program())
        return first

    def block(self) -> Program:
        self.ts.expect("{")
        p = self.program()
        self.ts.expect("}")
        return p

    def statement(self) -> Program:
        ts = self.ts
        tok = ts.peek
        if ts.accept("skip"):
            return Skip()
        if ts.accept("do"):
            return Command(ts.expect_kind("ident", "a command name").text)
        if ts.accept("if"):
            cond = self.expr()
            then = self.block()
            ts.expect("else")
            return If(cond, then, self.block())
        if ts.accept("loop"):
            count = self.expr()
            return Loop(count, self.block())
        if ts.at("{"):
            return self.block()
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            ts.next()
            if ts.accept(":="):
                if ts.accept("#"):
                    ts.expect("(")
                    e = self.expr()
                    ts.expect(")")
                    return Procedure(tok.text, "assign", (e,))
                return Assign(tok.text, self.expr())
            if ts.accept("<-"):
                name = ts.expect_kind("ident", "a procedure name").text
                return Procedure(tok.text, name, self.arglist())
            raise ts.error(f"expected ':=' or '<-' after {tok.text!r}")
        raise ts.error(f"expected a statement, found {tok.text or 'end of input'!r}")


def parse_expr(text: str, sig: Signature | None = None, ctx: Context | None = None) -> Expr:
    parser = ExprParser(text)
    e = parser.expr()
    parser.finish()
    if sig is not None and ctx is not None:
        sort_of(e, sig, ctx)
    return e


def parse_program(text: str, sig: Signature, variables: Iterable[str]) -> Program:
    """Parse and sort-check a program over the given program variables."""
    parser = ProgramParser(text)
    p = parser.program()
    parser.finish()
    check_program(p, sig, variables)
    return p


# ----------------------------------------------------------- pretty printing


def pretty_expr(e: Expr) -> str:
    match e:
        case Var(name):
            return name
        case Const(name):
            return name
        case Meta(name):
            return f"%{name}"
        case Proj(inner, side):
            body = pretty_expr(inner)
            if not isinstance(inner, (Var, Const, Meta)):
                body = f"({body})"
            return f"{body}<{side}>"
        case App(op, (a, b)) if op in INFIX_OPS:
            return f"({pretty_expr(a)} {op} {pretty_expr(b)})"
        case App(op, args):
            return f"{op}({', '.join(pretty_expr(a) for a in args)})"
    raise TypeError(f"not an expression: {e!r}")


def pretty_program(p: Program) -> str:
    match p:
        case Skip():
            return "skip"
        case Seq(a, b):
            left = pretty_program(a)
            if isinstance(a, Seq):
                left = "{ " + left + " }"
            return f"{left} ; {pretty_program(b)}"
        case Assign(v, e):
            return f"{v} := {pretty_expr(e)}"
        case Command(name):
            return f"do {name}"
        case Procedure(v, "assign", (e,)):
            inner = pretty_expr(e)
            return f"{v} := #{inner}" if inner.startswith("(") else f"{v} := #({inner})"
        case Procedure(v, name, args):
            return f"{v} <- {name}({', '.join(pretty_expr(a) for a in args)})"
        case If(c, a, b):
            return f"if {pretty_expr(c)} {{ {pretty_program(a)} }} else {{ {pretty_program(b)} }}"
        case Loop(c, body):
            return f"loop {pretty_expr(c)} {{ {pretty_program(body)} }}"
    raise TypeError(f"not a program: {p!r}")


# ---------------------------------------------------------------- model files


def _parse_range(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if not m:
        raise ParseError(f"expected 'lo..hi', got {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if hi < lo:
        raise ParseError(f"empty range {text!r}")
    return lo, hi


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def load_model(source: str | Path) -> Model:
    """Read a model declaration (INI-style ``key = value`` sections).

    ``source`` is either a path or the text itself.
    """
    text = Path(source).read_text() if isinstance(source, Path) else source
    if "\n" not in text and "=" not in text and Path(text).exists():
        text = Path(text).read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str  # keep variable-name case
    cp.read_string(text)
    if not cp.has_section("model"):
        raise ParseError("model file needs a [model] section")
    sec = cp["model"]
    variables = _split_list(sec.get("vars", ""))
    if not variables:
        raise ParseError("model declares no program variables")
    lo, hi = _parse_range(sec.get("cell", "0..1"))
    ops_text = sec.get("ops", "default").strip()
    ops = frozenset(BUILTIN_OPS) if ops_text == "default" else frozenset(_split_list(ops_text))
    unknown = ops - set(BUILTIN_OPS)
    if unknown:
        raise SortError(f"unknown builtin operators: {', '.join(sorted(unknown))}")
    levels: dict[str, int] = {}
    if cp.has_section("levels"):
        for var, lv in cp["levels"].items():
            if var not in variables:
                raise SortError(f"level given for undeclared variable {var!r}")
            levels[var] = int(lv)
    dists: dict[str, str] = {}
    if cp.has_section("distributions"):
        dists = dict(cp["distributions"].items())
    atoms: dict[str, frozenset[tuple[Any, ...]]] = {}
    if cp.has_section("atoms"):
        for name, ext in cp["atoms"].items():
            tuples = []
            for chunk in ext.split(";"):
                if chunk.strip():
                    tuples.append(tuple(int(x) for x in _split_list(chunk)))
            atoms[name] = frozenset(tuples)
    return Model(
        var_order=tuple(variables),
        cell_domain=tuple(range(lo, hi + 1)),
        nat_bound=sec.getint("nat_bound", 4),
        overflow=sec.get("overflow", "wrap").strip(),
        ops=ops,
        levels=tuple(levels.items()),
        distributions=tuple(dists.items()),
        atoms=tuple(atoms.items()),
        budget=sec.getint("budget", 1_000_000),
    )


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a rational number: {text!r}") from None
