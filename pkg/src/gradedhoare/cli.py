"""The ``ghl`` command: parse, check, run, soundness, laws and axioms.

Every report is a stream of ``key=value`` records, one per line.  Exit
codes: 0 success, 2 rejection or counterexample, 1 usage, parse or budget
error.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from .assertions import PredModel, pretty_formula
from .backends import INSTANCES, builtin_impls, instance_backend, instance_pomonoid, run
from .errors import CheckError, GHLError
from .ghl import AxiomTables, Judgment, check, elaborate_pc, load_derivation, load_judgment, load_tables
from .harness import (
    RELATIONAL_INSTANCES,
    clearance_levels,
    show_point,
    show_result,
    validate_axioms,
    verify_soundness,
)
from .kernel import DEFAULT_SEED, LIFTING_INSTANCES, SUITES, run_suite
from .syntax import Memory, Model, enumerate_memories, load_model, parse_program, pretty_program

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2


class UsageError(GHLError):
    pass


@dataclass(frozen=True)
class RunConfig:
    instance: str | None
    model: Path | None
    tables: Path | None
    program: Path | None
    judgment: Path | None
    derivation: Path | None
    relational: bool = False
    trials: int = 200
    seed: int = DEFAULT_SEED
    budget: int | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> RunConfig:
        cfg = cls(
            instance=ns.instance,
            model=_path(ns.model),
            tables=_path(ns.tables),
            program=_path(getattr(ns, "program", None)),
            judgment=_path(getattr(ns, "judgment", None)),
            derivation=_path(getattr(ns, "derivation", None)),
            relational=ns.relational,
            trials=ns.trials,
            seed=ns.seed,
            budget=ns.budget,
        )
        if cfg.instance is not None and cfg.instance in INSTANCES:
            if cfg.relational and cfg.instance not in RELATIONAL_INSTANCES:
                raise UsageError(f"--relational does not apply to the {cfg.instance} instance")
        return cfg

    def need(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise UsageError("missing " + ", ".join(f"--{n}" for n in missing))
        if "instance" in names and self.instance not in INSTANCES:
            raise UsageError(f"unknown instance {self.instance!r}; choose from {', '.join(INSTANCES)}")

    def load_model(self) -> Model:
        model = load_model(self.model.read_text())
        if self.budget is not None:
            model = Model(**{**model.__dict__, "budget": self.budget})
        return model

    def pm(self, model: Model) -> PredModel:
        relational = self.relational or self.instance in RELATIONAL_INSTANCES
        return PredModel.for_model(model, relational=relational)

    def load_tables(self, model: Model, pm: PredModel) -> AxiomTables:
        return load_tables(self.tables, model, pm) if self.tables else AxiomTables()


def _path(p: str | None) -> Path | None:
    return Path(p) if p else None


def _emit(lines: str | Sequence[str]) -> None:
    text = lines if isinstance(lines, str) else "\n".join(lines)
    if text:
        print(text)


def _judgment_record(j: Judgment) -> list[str]:
    return [
        f"grade={j.grade}",
        f"pre={pretty_formula(j.pre)}",
        f"prog={pretty_program(j.prog)}",
        f"post={pretty_formula(j.post)}",
    ]


# ------------------------------------------------------------- subcommands


def cmd_parse(cfg: RunConfig, ns: argparse.Namespace) -> int:
    cfg.need("model")
    model = cfg.load_model()
    pm = cfg.pm(model)
    if cfg.judgment is not None:
        j = load_judgment(cfg.judgment, model, pm)
        _emit(["kind=judgment", *_judgment_record(j)])
    elif cfg.program is not None:
        p = parse_program(cfg.program.read_text(), model.signature, model.var_order)
        if ns.elaborate_pc:
            p = elaborate_pc(p)
        _emit(["kind=program", f"prog={pretty_program(p)}"])
    elif cfg.tables is not None:
        tables = cfg.load_tables(model, pm)
        _emit(["kind=tables", *(e.describe() for e in tables.entries)])
    else:
        raise UsageError("parse needs --program, --judgment or --tables")
    return EXIT_OK


def _checked(cfg: RunConfig, ns: argparse.Namespace) -> tuple[Model, PredModel, Judgment, list[str], int]:
    """Load and check a derivation; returns the records and an exit code."""
    model = cfg.load_model()
    pm = cfg.pm(model)
    tables = cfg.load_tables(model, pm)
    root = load_judgment(cfg.judgment, model, pm)
    M = instance_pomonoid(cfg.instance, model)
    valid = None
    lines: list[str] = []
    if ns.strict:
        report = validate_axioms(tables, cfg.instance, model=model, pm=pm, budget=cfg.budget)
        lines.extend(r.record() for r in report.failing())
        valid = report.valid_ids
    d = load_derivation(cfg.derivation, root, tables, M, model, pm)
    try:
        j = check(d, tables, M, model, pm, valid_entries=valid)
    except CheckError as exc:
        lines.append(
            f"check=derivation verdict=rejected rule={exc.rule} premise={exc.premise} "
            f"path={exc.path} detail={exc.detail!r}"
        )
        return model, pm, root, lines, EXIT_REJECT
    lines.extend(["check=derivation verdict=accepted", *_judgment_record(j)])
    return model, pm, j, lines, EXIT_OK


def cmd_check(cfg: RunConfig, ns: argparse.Namespace) -> int:
    cfg.need("instance", "model", "judgment", "derivation")
    _, _, _, lines, code = _checked(cfg, ns)
    _emit(lines)
    return code


def _parse_memory(text: str, model: Model) -> Memory:
    values = {}
    for part in text.split(","):
        if not part.strip():
            continue
        name, sep, value = part.partition("=")
        if not sep:
            raise UsageError(f"expected name=value in --memory, found {part!r}")
        values[name.strip()] = int(value)
    missing = set(model.var_order) - set(values)
    if missing:
        raise UsageError(f"--memory lacks {', '.join(sorted(missing))}")
    return Memory((v, model.to_cell(values[v])) for v in model.var_order)


def cmd_run(cfg: RunConfig, ns: argparse.Namespace) -> int:
    cfg.need("instance", "model")
    model = cfg.load_model()
    if cfg.program is not None:
        prog = parse_program(cfg.program.read_text(), model.signature, model.var_order)
    elif cfg.judgment is not None:
        prog = load_judgment(cfg.judgment, model, cfg.pm(model)).prog
    else:
        raise UsageError("run needs --program or --judgment")
    if ns.elaborate_pc:
        prog = elaborate_pc(prog)
    impls = builtin_impls(cfg.instance, model)
    backend = instance_backend(cfg.instance, model, ns.level)
    starts = [_parse_memory(ns.memory, model)] if ns.memory else list(enumerate_memories(model, cfg.budget))
    for m0 in starts:
        r = run(prog, backend, impls, model, m0)
        print(f"memory={show_point(m0)} result={show_result(r)}")
    return EXIT_OK


def cmd_soundness(cfg: RunConfig, ns: argparse.Namespace) -> int:
    cfg.need("instance", "model", "judgment")
    if cfg.derivation is not None:
        model, pm, j, lines, code = _checked(cfg, ns)
        _emit(lines)
        if code != EXIT_OK:
            return code
    else:
        model = cfg.load_model()
        pm = cfg.pm(model)
        j = load_judgment(cfg.judgment, model, pm)
    if cfg.instance == "seclevel":
        lv = clearance_levels(model, j.grade)
        print(f"check=soundness clearances={lv.start}..{lv.stop - 1}")
    report = verify_soundness(j, cfg.instance, model=model, pm=pm, budget=cfg.budget)
    _emit(report.lines())
    return EXIT_OK if report.ok else EXIT_REJECT


def cmd_laws(cfg: RunConfig, ns: argparse.Namespace) -> int:
    instances = [cfg.instance] if cfg.instance else None
    if instances and ns.suite == "lifting" and cfg.instance not in LIFTING_INSTANCES:
        raise UsageError(f"unknown lifting instance {cfg.instance!r}")
    report = run_suite(ns.suite, cfg.trials, cfg.seed, instances)
    _emit(report.lines())
    return EXIT_OK if report.ok else EXIT_REJECT


def cmd_axioms(cfg: RunConfig, ns: argparse.Namespace) -> int:
    cfg.need("instance", "model", "tables")
    model = cfg.load_model()
    pm = cfg.pm(model)
    tables = cfg.load_tables(model, pm)
    report = validate_axioms(tables, cfg.instance, model=model, pm=pm, budget=cfg.budget)
    _emit(report.lines())
    return EXIT_OK if report.ok else EXIT_REJECT


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model file (variables, domain, levels, distributions)")
    common.add_argument("--instance", help=f"one of {', '.join(INSTANCES)}")
    common.add_argument("--tables", help="axiom table file")
    common.add_argument("--budget", type=int, help="largest world to enumerate")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--trials", type=int, default=200)
    common.add_argument("--relational", action="store_true", help="read assertions over memory pairs")

    parser = argparse.ArgumentParser(prog="ghl", description="Graded Hoare Logic toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse and pretty-print a file")
    p.add_argument("--program")
    p.add_argument("--judgment")
    p.add_argument("--elaborate-pc", action="store_true", help="insert control-flow commands")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("check", parents=[common], help="check a derivation")
    p.add_argument("--judgment", required=True)
    p.add_argument("--derivation", required=True)
    p.add_argument("--strict", action="store_true", help="only cite semantically validated entries")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", parents=[common], help="run a program under an instance backend")
    p.add_argument("--program")
    p.add_argument("--judgment")
    p.add_argument("--memory", help="initial memory, e.g. x=1,y=0 (default: every memory)")
    p.add_argument("--level", type=int, default=0, help="clearance level for seclevel")
    p.add_argument("--elaborate-pc", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("soundness", parents=[common], help="exhaustively verify a judgment")
    p.add_argument("--judgment", required=True)
    p.add_argument("--derivation")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=cmd_soundness)

    p = sub.add_parser("laws", parents=[common], help="run a randomized law suite")
    p.add_argument("--suite", required=True, choices=SUITES)
    p.set_defaults(fn=cmd_laws)

    p = sub.add_parser("axioms", parents=[common], help="validate axiom tables semantically")
    p.set_defaults(fn=cmd_axioms)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse signals usage errors with 2, which is reserved for rejections
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        cfg = RunConfig.from_args(ns)
        return ns.fn(cfg, ns)
    except (GHLError, OSError, ValueError) as exc:
        print(f"error={type(exc).__name__} detail={str(exc)!r}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
