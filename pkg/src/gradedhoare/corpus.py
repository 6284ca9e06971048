"""The shipped corpus of models, axiom tables, judgments and derivations."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

from .assertions import PredModel
from .backends import instance_pomonoid
from .errors import CheckError, ParseError
from .ghl import AxiomTables, Derivation, Judgment, check, load_derivation, load_judgment, load_tables
from .grading import Pomonoid
from .harness import AxiomReport, SoundnessReport, default_pm, validate_axioms, verify_soundness
from .syntax import Model, load_model

EXPECTATIONS = ("accept", "refute", "strict-reject")


def corpus_dir() -> Path:
    return Path(str(resources.files(__package__) / "corpus"))


@dataclass(frozen=True)
class Case:
    name: str
    instance: str
    model_path: Path
    tables_path: Path
    judgment_path: Path
    derivation_path: Path | None
    expect: str
    note: str = ""

    @cached_property
    def model(self) -> Model:
        return load_model(self.model_path.read_text())

    @property
    def pm(self) -> PredModel:
        return default_pm(self.instance, self.model)

    @property
    def M(self) -> Pomonoid:
        return instance_pomonoid(self.instance, self.model)

    @cached_property
    def tables(self) -> AxiomTables:
        return load_tables(self.tables_path, self.model, self.pm)

    @cached_property
    def judgment(self) -> Judgment:
        return load_judgment(self.judgment_path, self.model, self.pm)

    def derivation(self) -> Derivation | None:
        if self.derivation_path is None:
            return None
        return load_derivation(self.derivation_path, self.judgment, self.tables, self.M, self.model, self.pm)

    def check(self, strict: bool = False) -> Judgment:
        """Check the derivation; raises :class:`CheckError` on rejection."""
        d = self.derivation()
        if d is None:
            raise ParseError(f"case {self.name} has no derivation")
        valid = self.validate().valid_ids if strict else None
        return check(d, self.tables, self.M, self.model, self.pm, valid_entries=valid)

    def accepted(self, strict: bool = False) -> bool:
        try:
            self.check(strict)
        except CheckError:
            return False
        return True

    def validate(self) -> AxiomReport:
        return validate_axioms(self.tables, self.instance, model=self.model, pm=self.pm)

    def soundness(self) -> SoundnessReport:
        return verify_soundness(self.judgment, self.instance, model=self.model, pm=self.pm)


def load_cases(root: Path | None = None) -> dict[str, Case]:
    root = root or corpus_dir()
    cp = configparser.ConfigParser()
    cp.read_string((root / "cases.ini").read_text())
    cases = {}
    for name in cp.sections():
        sec = cp[name]
        expect = sec.get("expect", "accept")
        if expect not in EXPECTATIONS:
            raise ParseError(f"case {name}: unknown expectation {expect!r}")
        deriv = sec.get("derivation")
        cases[name] = Case(
            name=name,
            instance=sec["instance"],
            model_path=root / sec["model"],
            tables_path=root / sec["tables"],
            judgment_path=root / sec["judgment"],
            derivation_path=root / deriv if deriv else None,
            expect=expect,
            note=sec.get("note", ""),
        )
    return cases
