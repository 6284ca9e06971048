"""Graded Hoare Logic over finite models.

A toolkit for writing imperative programs with effects, grading them by a
preordered monoid, checking derivations of graded Hoare judgments, and
verifying those judgments exhaustively against executable semantics.
"""

from __future__ import annotations

from .assertions import PredModel, Predicate, denote_formula, entails, parse_formula, pretty_formula
from .backends import builtin_impls, denote_program, instance_backend, instance_pomonoid, run
from .errors import (
    BackendError,
    BudgetError,
    CheckError,
    EvalError,
    GHLError,
    GradeError,
    HomogeneityError,
    ParseError,
    SortError,
)
from .ghl import AxiomTables, Judgment, check, elaborate, load_derivation, load_judgment, load_tables, parse_tables
from .grading import BitString, Grade, MaxNat, NatCost, NatMatrix, NonNegRat, parse_grade
from .harness import refute, validate_axioms, verify_soundness
from .kernel import lifting_member, run_suite
from .syntax import Memory, Model, load_model, parse_expr, parse_program, pretty_program

__all__ = [
    "AxiomTables",
    "BackendError",
    "BitString",
    "BudgetError",
    "CheckError",
    "EvalError",
    "GHLError",
    "Grade",
    "GradeError",
    "HomogeneityError",
    "Judgment",
    "MaxNat",
    "Memory",
    "Model",
    "NatCost",
    "NatMatrix",
    "NonNegRat",
    "ParseError",
    "PredModel",
    "Predicate",
    "SortError",
    "builtin_impls",
    "check",
    "denote_formula",
    "denote_program",
    "elaborate",
    "entails",
    "instance_backend",
    "instance_pomonoid",
    "lifting_member",
    "load_derivation",
    "load_judgment",
    "load_model",
    "load_tables",
    "parse_expr",
    "parse_formula",
    "parse_grade",
    "parse_program",
    "parse_tables",
    "pretty_formula",
    "pretty_program",
    "refute",
    "run",
    "run_suite",
    "validate_axioms",
    "verify_soundness",
]
