"""Denotational semantics of programs under pluggable effect backends.

A program denotes a function ``Memory -> EffectResult``.  Each backend is a
(graded) monad given by ``unit`` and ``bind``; commands and procedures are
interpreted by an :class:`EffectImpl`, whose callables receive a
:class:`Call` and return a backend-specific raw result:

==============  ======================  =============================
backend         command returns         procedure returns
==============  ======================  =============================
``Pure``        (pure commands only)    a value
``Writer(M)``   a grade of ``M``        ``(value, grade)``
``SubDist``     not supported           ``{value: probability}``
``LevelReader`` (pure commands only)    a value (may read ``level``)
==============  ======================  =============================
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

from .errors import BackendError, EvalError
from .grading import (
    BitString,
    Grade,
    MaxNat,
    NatCost,
    NatMatrix,
    NonNegRat,
    Pomonoid,
    assign_grade,
)
from .syntax import (
    Assign,
    Command,
    Expr,
    If,
    Loop,
    Memory,
    Model,
    Procedure,
    Program,
    Seq,
    Skip,
    as_bool,
    as_nat,
    eval_expr,
    free_vars,
    parse_rational,
)

# ------------------------------------------------------------------ results


@dataclass(frozen=True)
class PureMem:
    mem: Memory


@dataclass(frozen=True)
class Annotated:
    mem: Memory
    annotation: Grade


@dataclass(frozen=True)
class Dist:
    """A finite-support subdistribution over memories, with exact weights."""

    weights: Mapping[Memory, Fraction]

    def __post_init__(self) -> None:
        pruned = {m: Fraction(w) for m, w in self.weights.items() if w != 0}
        if any(w < 0 for w in pruned.values()):
            raise EvalError("negative probability weight")
        object.__setattr__(self, "weights", pruned)

    @property
    def mass(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def prob(self, members: Any) -> Fraction:
        return sum((w for m, w in self.weights.items() if m in members), Fraction(0))

    def __hash__(self) -> int:
        return hash(frozenset(self.weights.items()))

    def __repr__(self) -> str:
        items = sorted(self.weights.items(), key=lambda kv: kv[0])
        return "Dist{" + ", ".join(f"{m!r}: {w}" for m, w in items) + "}"


@dataclass(frozen=True)
class Levelled:
    mem: Memory
    level: int


EffectResult = Union[PureMem, Annotated, Dist, Levelled]


# ---------------------------------------------------------------- backends


@dataclass(frozen=True)
class Call:
    """What an effect implementation gets to see."""

    memory: Memory
    args: tuple[Any, ...]
    node: Command | Procedure
    model: Model
    level: int | None = None


Impl = Callable[[Call], Any]


@dataclass(frozen=True)
class EffectImpl:
    commands: Mapping[str, Impl] = field(default_factory=dict)
    procedures: Mapping[str, Impl] = field(default_factory=dict)
    pure_commands: frozenset[str] = frozenset()

    def command(self, name: str) -> Impl:
        try:
            return self.commands[name]
        except KeyError:
            raise BackendError(f"no implementation for command {name!r}") from None

    def procedure(self, name: str) -> Impl:
        try:
            return self.procedures[name]
        except KeyError:
            raise BackendError(f"no implementation for procedure {name!r}") from None

    def merge(self, other: EffectImpl) -> EffectImpl:
        return EffectImpl(
            {**self.commands, **other.commands},
            {**self.procedures, **other.procedures},
            self.pure_commands | other.pure_commands,
        )


class Backend:
    name = "backend"

    def unit(self, mem: Memory) -> EffectResult:
        raise NotImplementedError

    def bind(self, r: EffectResult, k: Callable[[Memory], EffectResult]) -> EffectResult:
        raise NotImplementedError

    def command(self, impls: EffectImpl, call: Call) -> EffectResult:
        name = call.node.name
        if name in impls.pure_commands:
            return self.unit(call.memory)
        raise BackendError(f"command {name!r} is effectful and cannot run under {self.name}")

    def procedure(self, impls: EffectImpl, call: Call) -> EffectResult:
        raw = impls.procedure(call.node.name)(call)
        return self.unit(_update(call, raw))

    @property
    def level(self) -> int | None:
        return None


def _update(call: Call, value: Any) -> Memory:
    return call.memory.set(call.node.var, call.model.to_cell(_as_cell_value(value)))


def _as_cell_value(v: Any) -> int:
    return int(v) if isinstance(v, bool) else v


class Pure(Backend):
    name = "pure"

    def unit(self, mem: Memory) -> EffectResult:
        return PureMem(mem)

    def bind(self, r: EffectResult, k: Callable[[Memory], EffectResult]) -> EffectResult:
        return k(r.mem)


class Writer(Backend):
    """The graded writer monad ``X x M`` over a pomonoid of annotations."""

    def __init__(self, M: Pomonoid) -> None:
        self.M = M
        self.name = f"writer[{M!r}]"

    def unit(self, mem: Memory) -> EffectResult:
        return Annotated(mem, self.M.unit)

    def bind(self, r: EffectResult, k: Callable[[Memory], EffectResult]) -> EffectResult:
        nxt = k(r.mem)
        return Annotated(nxt.mem, self.M.mul(r.annotation, nxt.annotation))

    def command(self, impls: EffectImpl, call: Call) -> EffectResult:
        if call.node.name in impls.pure_commands:
            return self.unit(call.memory)
        ann = impls.command(call.node.name)(call)
        return Annotated(call.memory, self._own(ann, call))

    def procedure(self, impls: EffectImpl, call: Call) -> EffectResult:
        value, ann = impls.procedure(call.node.name)(call)
        return Annotated(_update(call, value), self._own(ann, call))

    def _own(self, ann: Grade, call: Call) -> Grade:
        if not self.M.owns(ann):
            raise BackendError(f"{call.node.name} emitted {ann}, not an element of {self.M!r}")
        return ann


class SubDist(Backend):
    """Finite subdistributions with exact rational weights."""

    name = "subdist"

    def unit(self, mem: Memory) -> EffectResult:
        return Dist({mem: Fraction(1)})

    def bind(self, r: EffectResult, k: Callable[[Memory], EffectResult]) -> EffectResult:
        out: dict[Memory, Fraction] = {}
        for mem, w in r.weights.items():
            for m2, w2 in k(mem).weights.items():
                out[m2] = out.get(m2, Fraction(0)) + w * w2
        return Dist(out)

    def procedure(self, impls: EffectImpl, call: Call) -> EffectResult:
        raw = impls.procedure(call.node.name)(call)
        out: dict[Memory, Fraction] = {}
        for value, w in raw.items():
            m = _update(call, value)
            out[m] = out.get(m, Fraction(0)) + Fraction(w)
        d = Dist(out)
        if d.mass > 1:
            raise EvalError(f"procedure {call.node.name} returned mass {d.mass} > 1")
        return d


class LevelReader(Backend):
    """Runs with a fixed clearance level that procedures may consult."""

    def __init__(self, level: int) -> None:
        if level < 0:
            raise BackendError("clearance levels are natural numbers")
        self._level = level
        self.name = f"level[{level}]"

    @property
    def level(self) -> int:
        return self._level

    def unit(self, mem: Memory) -> EffectResult:
        return Levelled(mem, self._level)

    def bind(self, r: EffectResult, k: Callable[[Memory], EffectResult]) -> EffectResult:
        return k(r.mem)


# -------------------------------------------------------------- denotation

GuardHook = Callable[[Program, Any], None]


def denote_program(
    P: Program,
    backend: Backend,
    impls: EffectImpl,
    model: Model,
    on_guard: GuardHook | None = None,
) -> Callable[[Memory], EffectResult]:
    """The meaning of ``P`` as a function from initial memories to results."""

    def go(p: Program, mem: Memory) -> EffectResult:
        match p:
            case Skip():
                return backend.unit(mem)
            case Seq(a, b):
                return backend.bind(go(a, mem), lambda m: go(b, m))
            case Assign(v, e):
                return backend.unit(mem.set(v, model.to_cell(_as_cell_value(eval_expr(e, model, mem)))))
            case Command(_):
                return backend.command(impls, Call(mem, (), p, model, backend.level))
            case Procedure(_, _, args):
                vals = tuple(eval_expr(a, model, mem) for a in args)
                return backend.procedure(impls, Call(mem, vals, p, model, backend.level))
            case If(c, then, orelse):
                b = as_bool(eval_expr(c, model, mem))
                if on_guard is not None:
                    on_guard(p, b)
                return go(then if b else orelse, mem)
            case Loop(c, body):
                k = as_nat(_as_count(eval_expr(c, model, mem)))
                if on_guard is not None:
                    on_guard(p, k)
                if k > model.nat_bound:
                    raise EvalError(f"loop count {k} exceeds nat_bound {model.nat_bound}")
                return iterate(body, k, mem)
        raise BackendError(f"not a program: {p!r}")

    def iterate(body: Program, k: int, mem: Memory) -> EffectResult:
        if k == 0:
            return backend.unit(mem)
        return backend.bind(go(body, mem), lambda m: iterate(body, k - 1, m))

    return lambda mem: go(P, mem)


def _as_count(v: Any) -> int:
    if isinstance(v, bool):
        raise EvalError("a boolean cannot be used as a loop count")
    return v


def run(P: Program, backend: Backend, impls: EffectImpl, model: Model, m0: Memory) -> EffectResult:
    return denote_program(P, backend, impls, model)(m0)


# ---------------------------------------------------------------- builtins

INSTANCES = ("cost", "pc-security", "dataflow", "union-bound", "seclevel")


def sec_level(e: Expr, model: Model) -> int:
    """The highest level among the variables read by ``e`` (0 if none)."""
    return max((model.level_of(x) for x in free_vars(e)), default=0)


def _tick(call: Call) -> Grade:
    return Grade("nat", 1)


def _cf(bit: str) -> Impl:
    return lambda call: Grade("bits", bit)


def _assign(call: Call) -> tuple[Any, Grade]:
    node = call.node
    if len(node.args) != 1:
        raise BackendError("assign takes exactly one argument")
    return call.args[0], assign_grade(node.var, node.args[0], call.model)


def _coin(call: Call) -> dict[int, Fraction]:
    return {0: Fraction(1, 2), 1: Fraction(1, 2)}


def _uniform_values(k: int) -> dict[int, Fraction]:
    if k <= 0:
        raise EvalError("uniform(k) needs k > 0")
    return {v: Fraction(1, k) for v in range(k)}


def _bern_values(p: Fraction) -> dict[int, Fraction]:
    if not 0 <= p <= 1:
        raise EvalError(f"Bernoulli parameter {p} outside [0, 1]")
    return {1: p, 0: 1 - p}


def _uniform(call: Call) -> dict[int, Fraction]:
    (k,) = call.args
    return _uniform_values(k)


def _bern(call: Call) -> dict[int, Fraction]:
    p, q = call.args
    if q == 0:
        raise EvalError("bern(p, q) needs q > 0")
    return _bern_values(Fraction(p, q))


def _sampler(spec: str) -> Impl:
    kind, _, param = spec.partition(":")
    match kind.strip():
        case "bern":
            values = _bern_values(parse_rational(param))
        case "uniform":
            values = _uniform_values(int(param))
        case "coin":
            values = {0: Fraction(1, 2), 1: Fraction(1, 2)}
        case other:
            raise BackendError(f"unknown distribution kind {other!r}")
    return lambda call: dict(values)


def _secure(call: Call) -> Any:
    if call.level is None:
        raise BackendError("secure needs a clearance level (LevelReader backend)")
    (e,) = call.node.args
    if call.level >= sec_level(e, call.model):
        return call.args[0]
    return call.model.lo


def builtin_impls(instance: str, model: Model | None = None) -> EffectImpl:
    """The effect implementations shipped for each instance."""
    match instance:
        case "cost":
            return EffectImpl(commands={"tick": _tick})
        case "pc-security":
            return EffectImpl(commands={"cfTrue": _cf("T"), "cfFalse": _cf("F")})
        case "dataflow":
            return EffectImpl(procedures={"assign": _assign})
        case "union-bound":
            procs: dict[str, Impl] = {"coin": _coin, "uniform": _uniform, "bern": _bern}
            if model is not None:
                for name, spec in model.distributions:
                    procs[name] = _sampler(spec)
            return EffectImpl(procedures=procs)
        case "seclevel":
            return EffectImpl(procedures={"secure": _secure})
    raise BackendError(f"unknown instance {instance!r}")


def instance_backend(instance: str, model: Model, level: int = 0) -> Backend:
    match instance:
        case "cost":
            return Writer(NatCost())
        case "pc-security":
            return Writer(BitString())
        case "dataflow":
            return Writer(NatMatrix(len(model.var_order)))
        case "union-bound":
            return SubDist()
        case "seclevel":
            return LevelReader(level)
    raise BackendError(f"unknown instance {instance!r}")


def instance_pomonoid(instance: str, model: Model) -> Pomonoid:
    match instance:
        case "cost":
            return NatCost()
        case "pc-security":
            return BitString()
        case "dataflow":
            return NatMatrix(len(model.var_order))
        case "union-bound":
            return NonNegRat()
        case "seclevel":
            return MaxNat()
    raise BackendError(f"unknown instance {instance!r}")
