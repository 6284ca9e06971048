"""Exception hierarchy shared by every module of the toolkit."""

from __future__ import annotations


class GHLError(Exception):
    """Base class for all toolkit errors."""


class ParseError(GHLError):
    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})")


class SortError(GHLError):
    """An expression or formula is ill-sorted, or names something unknown."""


class EvalError(GHLError):
    """Evaluation left a declared domain (reject mode, negative loop counts...)."""


class BudgetError(GHLError):
    """An enumeration would exceed the configured world-size budget."""


class BackendError(GHLError):
    """A program cannot be run under the selected effect backend."""


class NamespaceError(GHLError):
    pass


class HomogeneityError(GHLError):
    """Cotupling was asked to combine morphisms of different grades."""


class GradeError(GHLError):
    """Grades from different pomonoids (or dimensions) were mixed."""


class CheckError(GHLError):
    """A derivation node failed to validate.

    ``premise`` is one of ``"shape"``, ``"grade"``, ``"entailment"`` or
    ``"axiom"``; ``path`` locates the node from the root (``"root.1.0"``).
    """

    def __init__(self, rule: str, premise: str, path: str, detail: str) -> None:
        self.rule = rule
        self.premise = premise
        self.path = path
        self.detail = detail
        super().__init__(f"[{path}] {rule}: {premise} premise failed: {detail}")
