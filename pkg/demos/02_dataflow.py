"""Dataflow matrices: which variables flow into which, and how many times."""

from __future__ import annotations

from gradedhoare.backends import Writer, builtin_impls, run
from gradedhoare.corpus import load_cases
from gradedhoare.errors import CheckError
from gradedhoare.grading import Grade, NatMatrix
from gradedhoare.syntax import enumerate_memories

cases = load_cases()

# Rows are targets and columns are sources, in the model's variable order.
M = NatMatrix(3)
first = Grade("mat", ((0, 1, 0), (0, 0, 0), (0, 0, 0)))   # x := y + 2
second = Grade("mat", ((0, 0, 0), (0, 0, 0), (1, 1, 0)))  # z := x + y
print("composed:", M.mul(first, second))

case = cases["df_example"]
j = case.check(strict=True)
print("checked: ", j.grade)

# The executable writer semantics produces the same matrix on every memory.
annotations = {
    run(j.prog, Writer(M), builtin_impls("dataflow"), case.model, m).annotation
    for m in enumerate_memories(case.model)
}
print("observed:", ", ".join(str(a) for a in annotations))

# Claiming a smaller matrix is caught at the sequencing node.
try:
    cases["df_lowered"].check()
except CheckError as e:
    print(f"rejected: rule={e.rule} premise={e.premise} path={e.path}")
