"""Executable soundness: run programs exhaustively and test lifting membership.

For a judgment ``|-_m {pre} P {post}`` every initial point satisfying
``pre`` is run through the instance's backend, and the result must lie in
the graded lifting of ``post`` at ``m``.  Relational instances run the
same program on both components of each pair.  Enumeration follows the
world order, so the first violation found is the least one.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .assertions import PredModel, Predicate, denote_formula, world
from .backends import (
    INSTANCES,
    Annotated,
    Dist,
    EffectImpl,
    Levelled,
    PureMem,
    builtin_impls,
    instance_backend,
    instance_pomonoid,
    run,
    sec_level,
)
from .errors import BackendError, EvalError, GradeError
from .ghl import RESULT_VAR, AxiomEntry, AxiomTables, Judgment
from .grading import Grade
from .kernel import lifting_member
from .syntax import CELL, Command, Context, Memory, Model, Procedure, Program

RELATIONAL_INSTANCES = frozenset({"pc-security"})


def default_pm(instance: str, model: Model) -> PredModel:
    return PredModel.for_model(model, relational=instance in RELATIONAL_INSTANCES)


def clearance_levels(model: Model, grade: Grade) -> range:
    """Clearances ``n >= grade`` up to one above the highest variable level."""
    top = max([lv for _, lv in model.levels] + [-1]) + 1
    return range(grade.value, max(top, grade.value) + 1)


@dataclass(frozen=True)
class Counterexample:
    initial: Any
    observed: str
    violated: str

    def record(self) -> str:
        return f"witness={show_point(self.initial)} observed={self.observed} violated={self.violated!r}"


@dataclass
class SoundnessReport:
    judgment: Judgment
    instance: str
    checked: int = 0
    counterexample: Counterexample | None = None
    worst: str | None = None

    @property
    def verdict(self) -> str:
        return "pass" if self.counterexample is None else "counterexample"

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def lines(self) -> list[str]:
        out = [
            f"check=soundness instance={self.instance} grade={self.judgment.grade} "
            f"points={self.checked} verdict={self.verdict}"
        ]
        if self.worst is not None:
            out.append(f"check=soundness instance={self.instance} {self.worst}")
        if self.counterexample is not None:
            out.append(f"check=soundness instance={self.instance} {self.counterexample.record()}")
        return out

    def render(self) -> str:
        return "\n".join(self.lines())


def show_point(pt: Any) -> str:
    if isinstance(pt, tuple):
        return "(" + ",".join(show_point(p) for p in pt) + ")"
    return "".join(repr(pt).split())


def show_result(r: Any) -> str:
    match r:
        case Annotated(mem, ann):
            return f"({show_point(mem)},{ann})"
        case Levelled(mem, level):
            return f"({show_point(mem)},level={level})"
        case PureMem(mem):
            return show_point(mem)
        case Dist():
            return "".join(repr(r).split())
        case (a, b):
            return f"({show_result(a)},{show_result(b)})"
        case dict():
            return "{" + ",".join(f"{n}:{show_point(res.mem)}" for n, res in sorted(r.items())) + "}"
    return repr(r)


# ------------------------------------------------------------------ running


def _run_at(instance: str, prog: Program, impls: EffectImpl, model: Model, pt: Any,
            levels: Sequence[int]) -> Any:
    """The effectful result from ``pt`` in the shape the lifting expects."""
    match instance:
        case "pc-security":
            backend = instance_backend(instance, model)
            m1, m2 = pt
            return (run(prog, backend, impls, model, m1), run(prog, backend, impls, model, m2))
        case "seclevel":
            return {n: run(prog, instance_backend(instance, model, n), impls, model, pt) for n in levels}
        case _:
            return run(prog, instance_backend(instance, model), impls, model, pt)


def _explain(instance: str, m: Grade, post: Any, r: Any) -> str:
    match instance:
        case "cost" | "dataflow":
            if r.mem not in post:
                return "postcondition fails on the final memory"
            return f"annotation {r.annotation} exceeds grade {m}"
        case "union-bound":
            return f"failure mass {_outside(r, post)} exceeds {m.value}"
        case "pc-security":
            a, b = r
            if a.annotation != b.annotation:
                return f"control-flow traces differ: {a.annotation.value!r} vs {b.annotation.value!r}"
            if (a.mem, b.mem) not in post:
                return "postcondition fails on the final pair"
            return f"trace {a.annotation.value!r} is not a prefix of {m.value!r}"
        case "seclevel":
            bad = min(n for n, res in r.items() if n >= m.value and res.mem not in post)
            return f"at clearance {bad} the output {show_point(r[bad].mem)} violates the postcondition"
    return "lifting membership fails"


def _outside(d: Dist, post: Any) -> Fraction:
    return sum((w for mem, w in d.weights.items() if mem not in post), Fraction(0))


def _check_instance(instance: str) -> None:
    if instance not in INSTANCES:
        raise BackendError(f"unknown instance {instance!r}; choose from {', '.join(INSTANCES)}")


def _check_grade(instance: str, model: Model, grade: Grade) -> None:
    if not instance_pomonoid(instance, model).owns(grade):
        raise GradeError(f"grade {grade} does not belong to the {instance} instance")


def _points(ctx: Context, pre: Any, model: Model, pm: PredModel, budget: int | None) -> Iterator[Any]:
    pred = denote_formula(pre, ctx, model, pm, budget)
    return iter(pred)


class _Worst:
    """Tracks an instance-specific extreme over all runs."""

    def __init__(self, instance: str) -> None:
        self.instance = instance
        self.value: Any = None

    def add(self, r: Any, post: Predicate) -> None:
        match self.instance:
            case "union-bound":
                mass = _outside(r, post)
                self.value = mass if self.value is None else max(self.value, mass)
            case "cost":
                c = r.annotation.value
                self.value = c if self.value is None else max(self.value, c)

    def render(self) -> str | None:
        if self.value is None:
            return None
        match self.instance:
            case "union-bound":
                return f"max_failure_mass={self.value}"
            case "cost":
                return f"max_cost={self.value}"
        return None


def verify_soundness(
    j: Judgment,
    instance: str,
    impls: EffectImpl | None = None,
    model: Model | None = None,
    pm: PredModel | None = None,
    budget: int | None = None,
) -> SoundnessReport:
    """Exhaustively check that ``j``'s program meets its graded postcondition."""
    if model is None:
        raise BackendError("verify_soundness needs a model")
    _check_instance(instance)
    _check_grade(instance, model, j.grade)
    pm = pm or default_pm(instance, model)
    if pm.relational != (instance in RELATIONAL_INSTANCES):
        raise BackendError(f"the {instance} instance is {'' if instance in RELATIONAL_INSTANCES else 'not '}relational")
    impls = impls or builtin_impls(instance, model)
    ctx = model.context
    post = denote_formula(j.post, ctx, model, pm, budget)
    levels = clearance_levels(model, j.grade) if instance == "seclevel" else ()
    report = SoundnessReport(j, instance)
    worst = _Worst(instance)
    for pt in _points(ctx, j.pre, model, pm, budget):
        report.checked += 1
        try:
            r = _run_at(instance, j.prog, impls, model, pt, levels)
        except EvalError as exc:
            report.counterexample = Counterexample(pt, "error", f"evaluation failed: {exc}")
            break
        worst.add(r, post)
        if not lifting_member(instance, j.grade, post, r):
            report.counterexample = Counterexample(pt, show_result(r), _explain(instance, j.grade, post, r))
            break
    report.worst = worst.render()
    return report


def refute(
    j: Judgment,
    instance: str,
    impls: EffectImpl | None = None,
    model: Model | None = None,
    pm: PredModel | None = None,
    budget: int | None = None,
) -> Counterexample | None:
    """The least lifting violation of ``j``, or ``None`` if there is none."""
    return verify_soundness(j, instance, impls, model, pm, budget).counterexample


# ---------------------------------------------------------------- axioms


@dataclass(frozen=True)
class EntryResult:
    entry: AxiomEntry
    checked: int
    counterexample: Counterexample | None = None

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def record(self) -> str:
        status = "pass" if self.ok else "fail"
        line = f"check=axiom id={self.entry.id} kind={self.entry.kind} grade={self.entry.grade} points={self.checked} status={status}"
        if self.counterexample is not None:
            line += " " + self.counterexample.record()
        return line


@dataclass
class AxiomReport:
    instance: str
    results: list[EntryResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def valid_ids(self) -> frozenset[str]:
        return frozenset(r.entry.id for r in self.results if r.ok)

    def failing(self) -> list[EntryResult]:
        return [r for r in self.results if not r.ok]

    def lines(self) -> list[str]:
        out = [r.record() for r in self.results]
        out.append(f"check=axioms instance={self.instance} entries={len(self.results)} verdict={'pass' if self.ok else 'fail'}")
        return out

    def render(self) -> str:
        return "\n".join(self.lines())


def _route(r: Any, start: Any, var: str) -> Any:
    """Re-read a procedure result over (initial memory, r = returned value)."""
    match r:
        case Annotated(mem, ann):
            return Annotated(start.set(RESULT_VAR, mem[var]), ann)
        case Dist(weights):
            out: dict[Memory, Fraction] = {}
            for mem, w in weights.items():
                key = start.set(RESULT_VAR, mem[var])
                out[key] = out.get(key, Fraction(0)) + w
            return Dist(out)
        case (a, b):
            return (_route(a, start[0], var), _route(b, start[1], var))
        case dict():
            return {n: Levelled(start.set(RESULT_VAR, res.mem[var]), n) for n, res in r.items()}
    raise BackendError(f"cannot route result {r!r}")


def _validate_entry(
    e: AxiomEntry, instance: str, impls: EffectImpl, model: Model, pm: PredModel, budget: int | None
) -> EntryResult:
    ctx = model.context
    levels = clearance_levels(model, e.grade) if instance == "seclevel" else ()
    if e.pre is None:
        starts: Iterable[Any] = world(ctx, model, pm, budget)
    else:
        starts = denote_formula(e.pre, ctx, model, pm, budget)
    checked = 0
    if e.kind == "command":
        node: Program = Command(e.name)
        for pt in starts:
            checked += 1
            # commands must leave the memory alone, so the post is the start point
            post = {pt} if e.pre is None else starts
            try:
                r = _run_at(instance, node, impls, model, pt, levels)
            except EvalError as exc:
                return EntryResult(e, checked, Counterexample(pt, "error", f"evaluation failed: {exc}"))
            if not lifting_member(instance, e.grade, post, r):
                return EntryResult(e, checked, Counterexample(pt, show_result(r), _explain(instance, e.grade, post, r)))
        return EntryResult(e, checked)

    var = e.target or model.var_order[0]
    node = Procedure(var, e.name, e.args)
    if instance == "seclevel":
        need = max((sec_level(a, model) for a in e.args), default=0)
        if need > e.grade.value:
            return EntryResult(e, 0, Counterexample(
                "-", "-", f"argument level {need} exceeds the entry grade {e.grade.value}"
            ))
    post = denote_formula(e.post_r, ctx.extend(RESULT_VAR, CELL), model, pm, budget)
    for pt in starts:
        checked += 1
        try:
            r = _route(_run_at(instance, node, impls, model, pt, levels), pt, var)
        except EvalError as exc:
            return EntryResult(e, checked, Counterexample(pt, "error", f"evaluation failed: {exc}"))
        if not lifting_member(instance, e.grade, post, r):
            return EntryResult(e, checked, Counterexample(pt, show_result(r), _explain(instance, e.grade, post, r)))
    return EntryResult(e, checked)


def validate_axioms(
    tables: AxiomTables,
    instance: str,
    impls: EffectImpl | None = None,
    model: Model | None = None,
    pm: PredModel | None = None,
    budget: int | None = None,
) -> AxiomReport:
    """Check every table entry against the implementation of its operation."""
    if model is None:
        raise BackendError("validate_axioms needs a model")
    _check_instance(instance)
    pm = pm or default_pm(instance, model)
    impls = impls or builtin_impls(instance, model)
    report = AxiomReport(instance)
    for e in tables.entries:
        _check_grade(instance, model, e.grade)
        (impls.command if e.kind == "command" else impls.procedure)(e.name)
        report.results.append(_validate_entry(e, instance, impls, model, pm, budget))
    return report
