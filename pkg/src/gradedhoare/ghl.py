"""Graded Hoare Logic: judgments, axiom tables, derivations and the checker.

A derivation is a tree of rule nodes, each carrying the judgment it claims.
:func:`check` validates every node against its rule and returns the root
judgment, or raises :class:`~gradedhoare.errors.CheckError` naming the
rule, the failed premise and the node path.

Derivations are usually written in a compact s-expression format and then
*elaborated*: assertions flow down from the root judgment and from
annotations, grades are synthesized bottom-up.  Elaboration never decides
validity; it only fills in the claims that :func:`check` then verifies.
"""

from __future__ import annotations

import re
import shlex
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .assertions import (
    FF,
    TT,
    And,
    Eq,
    Exists,
    Formula,
    Or,
    PredModel,
    check_formula,
    entailment_witness,
    formula_free_vars,
    formula_metas,
    instantiate,
    parse_formula,
    pretty_formula,
    same_formula,
    subst_formula,
    substitute,
)
from .errors import CheckError, GHLError, ParseError, SortError
from .grading import Grade, Pomonoid, parse_grade
from .syntax import (
    CELL,
    FALSE,
    TRUE,
    Assign,
    Command,
    Expr,
    ExprParser,
    If,
    Loop,
    Model,
    Procedure,
    Program,
    Seq,
    Skip,
    Var,
    free_vars,
    iter_subprograms,
    num,
    parse_program,
    pretty_expr,
    pretty_program,
    subst_expr,
)

RESULT_VAR = "r"


@dataclass(frozen=True)
class Judgment:
    grade: Grade
    pre: Formula
    prog: Program
    post: Formula

    def __str__(self) -> str:
        return (
            f"|-_{{{self.grade}}} {{{pretty_formula(self.pre)}}} "
            f"{pretty_program(self.prog)} {{{pretty_formula(self.post)}}}"
        )


# -------------------------------------------------------------- axiom tables


@dataclass(frozen=True)
class AxiomEntry:
    """One row of a command or procedure table.

    ``pre is None`` marks a schematic entry that applies under any
    precondition.  ``target`` optionally restricts which variable a
    procedure result may be assigned to.
    """

    id: str
    kind: str
    name: str
    grade: Grade
    pre: Formula | None = TT
    args: tuple[Expr, ...] = ()
    target: str | None = None
    post_r: Formula = TT

    def describe(self) -> str:
        pre = "*" if self.pre is None else pretty_formula(self.pre)
        head = self.name
        if self.kind == "proc":
            head += "(" + ", ".join(pretty_expr(a) for a in self.args) + ")"
        text = f"{self.kind} {head} id={self.id} pre={pre!r} grade={str(self.grade)!r}"
        if self.kind == "proc":
            text += f" post={pretty_formula(self.post_r)!r}"
            if self.target:
                text += f" target={self.target}"
        return text


@dataclass(frozen=True)
class AxiomTables:
    entries: tuple[AxiomEntry, ...] = ()

    def __post_init__(self) -> None:
        ids = [e.id for e in self.entries]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise ParseError(f"duplicate axiom ids: {', '.join(sorted(dupes))}")

    def get(self, entry_id: str) -> AxiomEntry | None:
        for e in self.entries:
            if e.id == entry_id:
                return e
        return None

    @property
    def commands(self) -> tuple[AxiomEntry, ...]:
        return tuple(e for e in self.entries if e.kind == "command")

    @property
    def procedures(self) -> tuple[AxiomEntry, ...]:
        return tuple(e for e in self.entries if e.kind == "proc")


def _split_call(text: str, lineno: int) -> tuple[str, str, str]:
    """Split ``kind name(args) rest`` into (kind, head, rest)."""
    m = re.match(r"\s*(command|proc)\s+([A-Za-z_]\w*)", text)
    if not m:
        raise ParseError("expected 'command NAME ...' or 'proc NAME(...) ...'", lineno, 1)
    pos = m.end()
    head = m.group(2)
    if pos < len(text) and text[pos] == "(":
        depth = 0
        for i in range(pos, len(text)):
            depth += {"(": 1, ")": -1}.get(text[i], 0)
            if depth == 0:
                head += text[pos : i + 1]
                pos = i + 1
                break
        else:
            raise ParseError("unbalanced parentheses in procedure arguments", lineno, pos + 1)
    return m.group(1), head, text[pos:]


def parse_tables(text: str, model: Model, pm: PredModel | None = None) -> AxiomTables:
    """Read an axiom table file: one ``command``/``proc`` entry per line."""
    pm = pm or PredModel.for_model(model)
    sig, ctx = model.signature, model.context
    if RESULT_VAR in model.var_order:
        raise SortError(f"{RESULT_VAR!r} is reserved for procedure results")
    rctx = ctx.extend(RESULT_VAR, CELL)
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind, head, rest = _split_call(line, lineno)
        try:
            words = shlex.split(rest)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, 1) from None
        attrs: dict[str, str] = {}
        for w in words:
            key, sep, value = w.partition("=")
            if not sep:
                raise ParseError(f"expected key=value, found {w!r}", lineno, 1)
            attrs[key] = value
        unknown = set(attrs) - {"id", "pre", "grade", "post", "target"}
        if unknown:
            raise ParseError(f"unknown table attributes {sorted(unknown)}", lineno, 1)
        if "grade" not in attrs:
            raise ParseError("table entry needs a grade", lineno, 1)
        name, args = head, ()
        if "(" in head:
            parser = ExprParser(head)
            name = parser.ts.next().text
            args = parser.arglist()
            parser.finish()
        pre_text = attrs.get("pre", "tt").strip()
        pre = None if pre_text == "*" else parse_formula(pre_text, sig, ctx, pm)
        entry = AxiomEntry(
            id=attrs.get("id", name),
            kind=kind,
            name=name,
            grade=parse_grade(attrs["grade"]),
            pre=pre,
            args=args,
            target=attrs.get("target"),
        )
        if kind == "proc":
            if entry.target is not None and entry.target not in model.var_order:
                raise SortError(f"table target {entry.target!r} is not a program variable")
            post = parse_formula(attrs.get("post", "tt"), sig, rctx, pm)
            entry = AxiomEntry(**{**entry.__dict__, "post_r": post})
        elif "post" in attrs or "target" in attrs:
            raise ParseError("command entries take no post or target", lineno, 1)
        entries.append(entry)
    return AxiomTables(tuple(entries))


def load_tables(path: str | Path, model: Model, pm: PredModel | None = None) -> AxiomTables:
    return parse_tables(Path(path).read_text(), model, pm)


# ---------------------------------------------------------------- derivations


@dataclass(frozen=True)
class SkipR:
    j: Judgment


@dataclass(frozen=True)
class SeqR:
    j: Judgment
    mid: Formula
    left: Derivation
    right: Derivation


@dataclass(frozen=True)
class AssignR:
    j: Judgment


@dataclass(frozen=True)
class CommandR:
    j: Judgment
    entry: str


@dataclass(frozen=True)
class ProcR:
    j: Judgment
    entry: str


@dataclass(frozen=True)
class IfR:
    j: Judgment
    then: Derivation
    orelse: Derivation


@dataclass(frozen=True)
class LoopR:
    """Loop rule with family ``family`` (over ``%z``) and one body per index."""

    j: Judgment
    bound: int
    family: Formula
    bodies: tuple[Derivation, ...]


@dataclass(frozen=True)
class ConseqR:
    j: Judgment
    inner: Derivation


Derivation = Union[SkipR, SeqR, AssignR, CommandR, ProcR, IfR, LoopR, ConseqR]

RULE_NAMES = {
    SkipR: "Skip",
    SeqR: "Seq",
    AssignR: "Assign",
    CommandR: "Command",
    ProcR: "Proc",
    IfR: "If",
    LoopR: "Loop",
    ConseqR: "Conseq",
}


def derive_loop_instance(family: Formula, z: int) -> Formula:
    """Instantiate a loop family template at index ``z``."""
    if z < 0:
        raise GHLError("loop family index must be non-negative")
    stray = formula_metas(family) - {"z"}
    if stray:
        raise SortError(f"unbound meta-index %{sorted(stray)[0]} in loop family")
    return instantiate(family, "z", z)


def proc_post(pre: Formula, var: str, post_r: Formula) -> Formula:
    """``(exists v. pre) && post_r[v/r]``."""
    return And((Exists(var, CELL, pre), subst_formula(post_r, {RESULT_VAR: Var(var)})))


def elaborate_pc(P: Program) -> Program:
    """Prefix every branch with ``cfTrue``/``cfFalse`` to record control flow."""
    for node in iter_subprograms(P):
        if isinstance(node, Command) and node.name in ("cfTrue", "cfFalse"):
            raise GHLError("program already contains control-flow commands")

    def go(p: Program) -> Program:
        match p:
            case Seq(a, b):
                return Seq(go(a), go(b))
            case If(c, a, b):
                return If(c, Seq(Command("cfTrue"), go(a)), Seq(Command("cfFalse"), go(b)))
            case Loop(c, body):
                return Loop(c, go(body))
        return p

    return go(P)


# -------------------------------------------------------------------- checker


class _Checker:
    def __init__(
        self,
        tables: AxiomTables,
        M: Pomonoid,
        model: Model,
        pm: PredModel,
        valid_entries: Iterable[str] | None,
    ) -> None:
        self.tables = tables
        self.M = M
        self.model = model
        self.pm = pm
        self.ctx = model.context
        self.valid = None if valid_entries is None else frozenset(valid_entries)

    def fail(self, d: Derivation, premise: str, path: str, detail: str) -> CheckError:
        return CheckError(RULE_NAMES[type(d)], premise, path, detail)

    def judgment_ok(self, d: Derivation, path: str) -> Judgment:
        j = d.j
        if not self.M.owns(j.grade):
            raise self.fail(d, "shape", path, f"grade {j.grade} is not an element of {self.M!r}")
        for what, f in (("pre", j.pre), ("post", j.post)):
            try:
                check_formula(f, self.model.signature, self.ctx, self.pm)
            except SortError as exc:
                raise self.fail(d, "shape", path, f"ill-formed {what}condition: {exc}") from None
        return j

    def same(self, d: Derivation, path: str, a: Formula, b: Formula, what: str) -> None:
        if not same_formula(a, b):
            raise self.fail(
                d, "shape", path,
                f"{what}: expected {pretty_formula(b)!r}, found {pretty_formula(a)!r}",
            )

    def prog(self, d: Derivation, path: str, actual: Program, expected: Program) -> None:
        if actual != expected:
            raise self.fail(
                d, "shape", path,
                f"program mismatch: {pretty_program(actual)!r} vs {pretty_program(expected)!r}",
            )

    def entails(self, d: Derivation, path: str, hyp: Formula, goal: Formula) -> None:
        w = entailment_witness(self.ctx, [hyp], goal, self.model, self.pm)
        if w is not None:
            raise self.fail(
                d, "entailment", path,
                f"{pretty_formula(hyp)!r} does not entail {pretty_formula(goal)!r}; witness {w!r}",
            )

    def grade_eq(self, d: Derivation, path: str, actual: Grade, expected: Grade, why: str) -> None:
        if actual != expected:
            raise self.fail(d, "grade", path, f"{why}: claimed {actual}, rule gives {expected}")

    def entry(self, d: Derivation, path: str, entry_id: str, kind: str) -> AxiomEntry:
        e = self.tables.get(entry_id)
        if e is None or e.kind != kind:
            raise self.fail(d, "axiom", path, f"no {kind} entry with id {entry_id!r}")
        if self.valid is not None and entry_id not in self.valid:
            raise self.fail(d, "axiom", path, f"entry {entry_id!r} failed semantic validation")
        return e

    def entry_pre(self, d: Derivation, path: str, e: AxiomEntry, pre: Formula) -> None:
        if e.pre is not None and not same_formula(pre, e.pre):
            raise self.fail(
                d, "axiom", path,
                f"precondition {pretty_formula(pre)!r} differs from entry {e.id!r} "
                f"precondition {pretty_formula(e.pre)!r}",
            )
        if e.grade != d.j.grade:
            raise self.fail(d, "axiom", path, f"grade {d.j.grade} differs from entry grade {e.grade}")

    def check(self, d: Derivation, path: str) -> Judgment:
        j = self.judgment_ok(d, path)
        M = self.M
        match d:
            case SkipR():
                self.prog(d, path, j.prog, Skip())
                self.grade_eq(d, path, j.grade, M.unit, "skip has the unit grade")
                self.same(d, path, j.post, j.pre, "postcondition must equal precondition")
            case SeqR(_, mid, left, right):
                if not isinstance(j.prog, Seq):
                    raise self.fail(d, "shape", path, "program is not a sequence")
                lj = self.check(left, f"{path}.0")
                rj = self.check(right, f"{path}.1")
                self.prog(d, path, Seq(lj.prog, rj.prog), j.prog)
                self.same(d, path, lj.pre, j.pre, "left precondition")
                self.same(d, path, lj.post, mid, "left postcondition vs mid")
                self.same(d, path, rj.pre, mid, "right precondition vs mid")
                self.same(d, path, rj.post, j.post, "right postcondition")
                self.grade_eq(d, path, j.grade, M.mul(lj.grade, rj.grade), "sequence multiplies grades")
            case AssignR():
                if not isinstance(j.prog, Assign):
                    raise self.fail(d, "shape", path, "program is not an assignment")
                self.grade_eq(d, path, j.grade, M.unit, "assignment has the unit grade")
                self.same(d, path, j.pre, substitute(j.post, j.prog.var, j.prog.expr), "precondition")
            case CommandR(_, entry_id):
                if not isinstance(j.prog, Command):
                    raise self.fail(d, "shape", path, "program is not a command call")
                e = self.entry(d, path, entry_id, "command")
                if e.name != j.prog.name:
                    raise self.fail(d, "axiom", path, f"entry {e.id!r} is for {e.name}, not {j.prog.name}")
                self.entry_pre(d, path, e, j.pre)
                self.same(d, path, j.post, j.pre, "command postcondition must equal precondition")
            case ProcR(_, entry_id):
                if not isinstance(j.prog, Procedure):
                    raise self.fail(d, "shape", path, "program is not a procedure call")
                p = j.prog
                e = self.entry(d, path, entry_id, "proc")
                if e.name != p.name or e.args != p.args:
                    raise self.fail(
                        d, "axiom", path, f"entry {e.id!r} does not describe {pretty_program(p)!r}"
                    )
                if e.target is not None and e.target != p.var:
                    raise self.fail(d, "axiom", path, f"entry {e.id!r} is restricted to target {e.target}")
                if p.var in formula_free_vars(e.post_r):
                    raise self.fail(
                        d, "shape", path,
                        f"entry postcondition mentions the assigned variable {p.var!r}",
                    )
                self.entry_pre(d, path, e, j.pre)
                self.same(d, path, j.post, proc_post(j.pre, p.var, e.post_r), "procedure postcondition")
            case IfR(_, then, orelse):
                if not isinstance(j.prog, If):
                    raise self.fail(d, "shape", path, "program is not a conditional")
                c = j.prog.cond
                tj = self.check(then, f"{path}.0")
                ej = self.check(orelse, f"{path}.1")
                self.prog(d, path, If(c, tj.prog, ej.prog), j.prog)
                if tj.grade != ej.grade:
                    raise self.fail(d, "grade", path, f"branch grades differ: {tj.grade} vs {ej.grade}")
                self.grade_eq(d, path, j.grade, tj.grade, "conditional keeps the branch grade")
                self.same(d, path, tj.pre, And((j.pre, Eq(c, TRUE))), "then-branch precondition")
                self.same(d, path, ej.pre, And((j.pre, Eq(c, FALSE))), "else-branch precondition")
                self.same(d, path, tj.post, j.post, "then-branch postcondition")
                self.same(d, path, ej.post, j.post, "else-branch postcondition")
                self.entails(d, path, j.pre, Or((Eq(c, TRUE), Eq(c, FALSE))))
            case LoopR(_, n, family, bodies):
                if not isinstance(j.prog, Loop):
                    raise self.fail(d, "shape", path, "program is not a loop")
                if len(bodies) != n:
                    raise self.fail(d, "shape", path, f"{len(bodies)} body derivations for N={n}")
                try:
                    fam = [derive_loop_instance(family, z) for z in range(n + 1)]
                except SortError as exc:
                    raise self.fail(d, "shape", path, str(exc)) from None
                m = None
                for z, body in enumerate(bodies):
                    bj = self.check(body, f"{path}.{z}")
                    self.prog(d, path, bj.prog, j.prog.body)
                    self.same(d, path, bj.pre, fam[z + 1], f"body {z} precondition")
                    self.same(d, path, bj.post, fam[z], f"body {z} postcondition")
                    if m is not None and bj.grade != m:
                        raise self.fail(d, "grade", path, f"body grades differ: {m} vs {bj.grade}")
                    m = bj.grade
                expected = M.unit if m is None else M.pow(m, n)
                self.grade_eq(d, path, j.grade, expected, "loop grade is the body grade to the N")
                self.same(d, path, j.pre, fam[n], "loop precondition")
                self.same(d, path, j.post, fam[0], "loop postcondition")
                self.entails(d, path, fam[n], Eq(j.prog.count, num(n)))
            case ConseqR(_, inner):
                ij = self.check(inner, f"{path}.0")
                self.prog(d, path, ij.prog, j.prog)
                self.entails(d, path, j.pre, ij.pre)
                if not M.leq(ij.grade, j.grade):
                    raise self.fail(d, "grade", path, f"{ij.grade} is not below {j.grade}")
                self.entails(d, path, ij.post, j.post)
            case _:
                raise CheckError("?", "shape", path, f"not a derivation node: {d!r}")
        return j


def check(
    d: Derivation,
    tables: AxiomTables,
    M: Pomonoid,
    model: Model,
    pm: PredModel | None = None,
    valid_entries: Iterable[str] | None = None,
) -> Judgment:
    """Validate every node of ``d``; return the root judgment.

    ``valid_entries`` (strict mode) restricts citations to table entries
    that passed semantic validation.
    """
    pm = pm or PredModel.for_model(model)
    return _Checker(tables, M, model, pm, valid_entries).check(d, "root")


# ------------------------------------------------------------ judgment files


def parse_judgment(text: str, model: Model, pm: PredModel | None = None) -> Judgment:
    """Read ``key = value`` lines (grade, pre, prog, post); indented lines continue."""
    pm = pm or PredModel.for_model(model)
    fields: dict[str, str] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        if raw[0].isspace() and current is not None:
            fields[current] += "\n" + raw.strip()
            continue
        key, sep, value = raw.partition("=")
        key = key.strip()
        if not sep or key not in ("grade", "pre", "prog", "post"):
            raise ParseError(f"expected 'grade|pre|prog|post = ...', found {raw.strip()!r}", lineno, 1)
        fields[key] = value.strip()
        current = key
    missing = {"grade", "prog"} - set(fields)
    if missing:
        raise ParseError(f"judgment file lacks {sorted(missing)}")
    sig, ctx = model.signature, model.context
    return Judgment(
        grade=parse_grade(fields["grade"]),
        pre=parse_formula(fields.get("pre", "tt"), sig, ctx, pm),
        prog=parse_program(fields["prog"], sig, model.var_order),
        post=parse_formula(fields.get("post", "tt"), sig, ctx, pm),
    )


def load_judgment(path: str | Path, model: Model, pm: PredModel | None = None) -> Judgment:
    return parse_judgment(Path(path).read_text(), model, pm)


# --------------------------------------------------------- derivation files

_SEXP_RE = re.compile(
    r"""
    (?P<ws>\s+|;[^\n]*)
  | (?P<open>\()
  | (?P<close>\))
  | (?P<cite>@[\w.\-]+)
  | (?P<attr>[A-Za-z_]\w*="(?:[^"\\]|\\.)*")
  | (?P<bare>[A-Za-z_]\w*=[^\s()"]+)
  | (?P<word>[A-Za-z_][\w\-]*)
    """,
    re.VERBOSE,
)


@dataclass
class SNode:
    head: str
    attrs: dict[str, str] = field(default_factory=dict)
    cites: list[str] = field(default_factory=list)
    words: list[str] = field(default_factory=list)
    children: list[SNode] = field(default_factory=list)
    line: int = 0
    col: int = 0


def parse_sexp(text: str) -> SNode:
    tokens: list[tuple[str, str, int, int]] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _SEXP_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()

    idx = 0

    def node() -> SNode:
        nonlocal idx
        if idx >= len(tokens) or tokens[idx][0] != "open":
            where = tokens[idx] if idx < len(tokens) else ("", "", line, 1)
            raise ParseError("expected '('", where[2], where[3])
        _, _, ln, col = tokens[idx]
        idx += 1
        if idx >= len(tokens) or tokens[idx][0] != "word":
            raise ParseError("expected a rule keyword after '('", ln, col)
        n = SNode(tokens[idx][1], line=ln, col=col)
        idx += 1
        while idx < len(tokens) and tokens[idx][0] != "close":
            kind, tok, tl, tc = tokens[idx]
            match kind:
                case "open":
                    n.children.append(node())
                    continue
                case "cite":
                    n.cites.append(tok[1:])
                case "attr":
                    key, _, value = tok.partition("=")
                    n.attrs[key] = bytes(value[1:-1], "utf-8").decode("unicode_escape")
                case "bare":
                    key, _, value = tok.partition("=")
                    n.attrs[key] = value
                case "word":
                    n.words.append(tok)
            idx += 1
        if idx >= len(tokens):
            raise ParseError("unbalanced '(' in derivation", ln, col)
        idx += 1
        return n

    root = node()
    if idx != len(tokens):
        raise ParseError("trailing input after derivation", tokens[idx][2], tokens[idx][3])
    return root


class _Underdetermined(GHLError):
    pass


class Elaborator:
    """Turns an s-expression derivation sketch into a full derivation tree."""

    def __init__(self, tables: AxiomTables, M: Pomonoid, model: Model, pm: PredModel) -> None:
        self.tables = tables
        self.M = M
        self.model = model
        self.pm = pm
        self.ctx = model.context

    def formula(self, s: SNode, key: str, metas: Mapping[str, int]) -> Formula | None:
        if key not in s.attrs:
            return None
        try:
            f = parse_formula(s.attrs[key], self.model.signature)
            for name, value in metas.items():
                f = instantiate(f, name, value)
            check_formula(f, self.model.signature, self.ctx, self.pm)
        except (ParseError, SortError) as exc:
            raise ParseError(f"in {s.head} attribute {key}: {exc}", s.line, s.col) from None
        return f

    def grade(self, s: SNode, key: str) -> Grade | None:
        return parse_grade(s.attrs[key]) if key in s.attrs else None

    def expect_children(self, s: SNode, n: int) -> None:
        if len(s.children) != n:
            raise ParseError(f"({s.head}) takes {n} sub-derivation(s), got {len(s.children)}", s.line, s.col)

    def elab(
        self,
        s: SNode,
        prog: Program,
        pre: Formula | None,
        post: Formula | None,
        grade: Grade | None = None,
        metas: Mapping[str, int] = {},
    ) -> Derivation:
        M = self.M
        match s.head:
            case "skip":
                self.expect_children(s, 0)
                psi = pre if pre is not None else post
                if psi is None:
                    raise _Underdetermined("skip needs an assertion")
                return SkipR(Judgment(grade or M.unit, psi, prog, post if post is not None else psi))
            case "assign":
                self.expect_children(s, 0)
                if not isinstance(prog, Assign):
                    raise ParseError(f"(assign) used for {pretty_program(prog)!r}", s.line, s.col)
                if post is None:
                    raise _Underdetermined("assign needs its postcondition")
                computed = substitute(post, prog.var, prog.expr)
                return AssignR(Judgment(grade or M.unit, pre if pre is not None else computed, prog, post))
            case "command":
                self.expect_children(s, 0)
                entry = self.cited(s, "command", prog)
                psi = pre if pre is not None else post
                if psi is None:
                    psi = entry.pre if entry is not None else None
                if psi is None:
                    raise _Underdetermined("schematic command needs an assertion")
                eid = entry.id if entry else self.cite_id(s, prog)
                g = grade or (entry.grade if entry else M.unit)
                return CommandR(Judgment(g, psi, prog, post if post is not None else psi), eid)
            case "proc":
                self.expect_children(s, 0)
                if not isinstance(prog, Procedure):
                    raise ParseError(f"(proc) used for {pretty_program(prog)!r}", s.line, s.col)
                entry = self.cited(s, "proc", prog)
                psi = pre if pre is not None else (entry.pre if entry else None)
                if psi is None:
                    raise _Underdetermined("procedure call needs its precondition")
                eid = entry.id if entry else self.cite_id(s, prog)
                g = grade or (entry.grade if entry else M.unit)
                computed = proc_post(psi, prog.var, entry.post_r) if entry else TT
                return ProcR(Judgment(g, psi, prog, post if post is not None else computed), eid)
            case "seq":
                self.expect_children(s, 2)
                if not isinstance(prog, Seq):
                    raise ParseError(f"(seq) used for {pretty_program(prog)!r}", s.line, s.col)
                mid = self.formula(s, "mid", metas)
                a, b = s.children
                if mid is not None:
                    left = self.elab(a, prog.first, pre, mid, metas=metas)
                    right = self.elab(b, prog.second, mid, post, metas=metas)
                else:
                    try:
                        left = self.elab(a, prog.first, pre, None, metas=metas)
                        right = self.elab(b, prog.second, left.j.post, post, metas=metas)
                    except _Underdetermined:
                        right = self.elab(b, prog.second, None, post, metas=metas)
                        left = self.elab(a, prog.first, pre, right.j.pre, metas=metas)
                    mid = left.j.post
                g = grade or M.mul(left.j.grade, right.j.grade)
                return SeqR(
                    Judgment(g, left.j.pre if pre is None else pre, prog, right.j.post if post is None else post),
                    mid, left, right,
                )
            case "if":
                self.expect_children(s, 2)
                if not isinstance(prog, If):
                    raise ParseError(f"(if) used for {pretty_program(prog)!r}", s.line, s.col)
                psi = self.formula(s, "pre", metas) or pre
                if psi is None:
                    raise _Underdetermined("conditional needs its precondition")
                a, b = s.children
                t = self.elab(a, prog.then, And((psi, Eq(prog.cond, TRUE))), post, metas=metas)
                phi = post if post is not None else t.j.post
                e = self.elab(b, prog.orelse, And((psi, Eq(prog.cond, FALSE))), phi, metas=metas)
                return IfR(Judgment(grade or t.j.grade, psi, prog, phi), t, e)
            case "loop":
                if not isinstance(prog, Loop):
                    raise ParseError(f"(loop) used for {pretty_program(prog)!r}", s.line, s.col)
                if "N" not in s.attrs or "family" not in s.attrs:
                    raise ParseError("(loop) needs N=... and family=\"...\"", s.line, s.col)
                n = int(s.attrs["N"])
                try:
                    family = parse_formula(s.attrs["family"], self.model.signature)
                    fam = [derive_loop_instance(family, z) for z in range(n + 1)]
                except (ParseError, SortError) as exc:
                    raise ParseError(f"in loop family: {exc}", s.line, s.col) from None
                if len(s.children) == 1:
                    templates = [s.children[0]] * n
                elif len(s.children) == n:
                    templates = list(s.children)
                else:
                    raise ParseError(f"(loop N={n}) needs 1 template or {n} bodies", s.line, s.col)
                bodies = tuple(
                    self.elab(t, prog.body, fam[z + 1], fam[z], metas={**metas, "z": z})
                    for z, t in enumerate(templates)
                )
                m = bodies[0].j.grade if bodies else M.unit
                g = grade or M.pow(m, n)
                return LoopR(
                    Judgment(g, fam[n] if pre is None else pre, prog, fam[0] if post is None else post),
                    n, family, bodies,
                )
            case "conseq":
                self.expect_children(s, 1)
                ipre = self.formula(s, "pre", metas)
                ipost = self.formula(s, "post", metas)
                child = s.children[0]
                if ipre is None and child.head != "assign":
                    ipre = pre
                if ipost is not None:
                    inner = self.elab(child, prog, ipre, ipost, metas=metas)
                else:
                    # synthesize the inner postcondition when possible
                    try:
                        inner = self.elab(child, prog, ipre, None, metas=metas)
                    except _Underdetermined:
                        inner = self.elab(child, prog, ipre, post, metas=metas)
                g = grade or self.grade(s, "m") or inner.j.grade
                return ConseqR(
                    Judgment(g, inner.j.pre if pre is None else pre, prog, inner.j.post if post is None else post),
                    inner,
                )
            case "auto":
                self.expect_children(s, 0)
                if pre is None:
                    raise _Underdetermined("auto needs a precondition")
                d = self.forward(prog, pre)
                if post is not None and not same_formula(post, d.j.post) or grade is not None and grade != d.j.grade:
                    d = ConseqR(Judgment(grade or d.j.grade, pre, prog, post if post is not None else d.j.post), d)
                return d
        raise ParseError(f"unknown rule keyword {s.head!r}", s.line, s.col)

    def cite_id(self, s: SNode, prog: Program) -> str:
        if s.cites:
            return s.cites[0]
        if s.words:
            return s.words[0]
        return getattr(prog, "name", "?")

    def cited(self, s: SNode, kind: str, prog: Program) -> AxiomEntry | None:
        e = self.tables.get(self.cite_id(s, prog))
        return e if e is not None and e.kind == kind else None

    # forward synthesis for straight-line code

    def forward(self, prog: Program, pre: Formula) -> Derivation:
        M = self.M
        match prog:
            case Skip():
                return SkipR(Judgment(M.unit, pre, prog, pre))
            case Seq(a, b):
                left = self.forward(a, pre)
                right = self.forward(b, left.j.post)
                return SeqR(
                    Judgment(M.mul(left.j.grade, right.j.grade), pre, prog, right.j.post),
                    left.j.post, left, right,
                )
            case Assign(v, e):
                post = self.assign_sp(pre, v, e)
                d = AssignR(Judgment(M.unit, substitute(post, v, e), prog, post))
                if same_formula(d.j.pre, pre):
                    return d
                return ConseqR(Judgment(M.unit, pre, prog, post), d)
            case Command(name):
                for entry in self.tables.commands:
                    if entry.name != name:
                        continue
                    if entry.pre is None or same_formula(entry.pre, pre):
                        return CommandR(Judgment(entry.grade, pre, prog, pre), entry.id)
                for entry in self.tables.commands:
                    if entry.name == name and entailment_witness(
                        self.ctx, [pre], entry.pre, self.model, self.pm
                    ) is None:
                        inner = CommandR(Judgment(entry.grade, entry.pre, prog, entry.pre), entry.id)
                        return ConseqR(Judgment(entry.grade, pre, prog, entry.pre), inner)
                raise GHLError(f"auto: no table entry applies to command {name}")
            case Procedure(v, name, args):
                for entry in self.tables.procedures:
                    if entry.name != name or entry.args != args:
                        continue
                    if entry.target not in (None, v):
                        continue
                    if entry.pre is None or same_formula(entry.pre, pre):
                        return ProcR(Judgment(entry.grade, pre, prog, proc_post(pre, v, entry.post_r)), entry.id)
                    if entailment_witness(self.ctx, [pre], entry.pre, self.model, self.pm) is None:
                        inner = ProcR(
                            Judgment(entry.grade, entry.pre, prog, proc_post(entry.pre, v, entry.post_r)),
                            entry.id,
                        )
                        return ConseqR(Judgment(entry.grade, pre, prog, inner.j.post), inner)
                raise GHLError(f"auto: no table entry applies to {pretty_program(prog)}")
        raise GHLError(f"auto handles straight-line code only, not {pretty_program(prog)!r}")

    def assign_sp(self, pre: Formula, v: str, e: Expr) -> Formula:
        if v not in formula_free_vars(pre) and v not in free_vars(e):
            return And((pre, Eq(Var(v), e)))
        old = "_old_" + v
        return Exists(
            old, CELL,
            And((subst_formula(pre, {v: Var(old)}), Eq(Var(v), _rename(e, v, old)))),
        )


def _rename(e: Expr, v: str, new: str) -> Expr:
    return subst_expr(e, {v: Var(new)})


def elaborate(
    sketch: SNode | str,
    root: Judgment,
    tables: AxiomTables,
    M: Pomonoid,
    model: Model,
    pm: PredModel | None = None,
) -> Derivation:
    """Fill in a derivation sketch against the claimed root judgment."""
    pm = pm or PredModel.for_model(model)
    s = parse_sexp(sketch) if isinstance(sketch, str) else sketch
    try:
        return Elaborator(tables, M, model, pm).elab(s, root.prog, root.pre, root.post, root.grade)
    except _Underdetermined as exc:
        raise ParseError(f"derivation sketch is underdetermined: {exc}", s.line, s.col) from None


def load_derivation(
    path: str | Path,
    root: Judgment,
    tables: AxiomTables,
    M: Pomonoid,
    model: Model,
    pm: PredModel | None = None,
) -> Derivation:
    return elaborate(Path(path).read_text(), root, tables, M, model, pm)


def iter_nodes(d: Derivation, path: str = "root"):
    """Yield ``(path, node)`` pairs in pre-order."""
    yield path, d
    match d:
        case SeqR(_, _, a, b) | IfR(_, a, b):
            yield from iter_nodes(a, f"{path}.0")
            yield from iter_nodes(b, f"{path}.1")
        case LoopR(_, _, _, bodies):
            for z, b in enumerate(bodies):
                yield from iter_nodes(b, f"{path}.{z}")
        case ConseqR(_, inner):
            yield from iter_nodes(inner, f"{path}.0")


def cited_entries(d: Derivation) -> frozenset[str]:
    return frozenset(n.entry for _, n in iter_nodes(d) if isinstance(n, (CommandR, ProcR)))


__all__ = [
    "Judgment",
    "AxiomEntry",
    "AxiomTables",
    "SkipR",
    "SeqR",
    "AssignR",
    "CommandR",
    "ProcR",
    "IfR",
    "LoopR",
    "ConseqR",
    "Derivation",
    "check",
    "derive_loop_instance",
    "elaborate_pc",
    "elaborate",
    "parse_tables",
    "load_tables",
    "parse_judgment",
    "load_judgment",
    "load_derivation",
    "parse_sexp",
    "proc_post",
    "iter_nodes",
    "cited_entries",
    "FF",
]
