"""Counting ticks: a cost-graded judgment, checked and then executed."""

from __future__ import annotations

from gradedhoare.backends import Writer, builtin_impls, run
from gradedhoare.corpus import load_cases
from gradedhoare.grading import NatCost
from gradedhoare.harness import refute, show_result
from gradedhoare.syntax import Memory

cases = load_cases()

# A loop of three ticks, graded nat:3. The derivation checks in strict mode,
# so every table entry it cites has been validated against the backend.
case = cases["cost_loop3"]
print("judgment:", case.judgment)
print("checked: ", case.check(strict=True).grade)

# Running the program from one memory shows the cost the grade bounds.
result = run(case.judgment.prog, Writer(NatCost()), builtin_impls("cost"), case.model, Memory({"x": 0, "y": 0}))
print("one run: ", show_result(result))

# The soundness harness tries every memory the precondition admits.
print(case.soundness().render())

# Lowering the grade to nat:2 leaves a judgment with a concrete counterexample.
under = cases["cost_loop3_under"]
cx = refute(under.judgment, "cost", model=under.model)
print("under-costed:", cx.record())
